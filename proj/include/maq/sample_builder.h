#ifndef MAQ_SAMPLE_BUILDER_H_
#define MAQ_SAMPLE_BUILDER_H_

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maq/corpus.h"

namespace maq {
namespace samples {

// Markers <0x64> .. <0xFF>.
inline constexpr int kFirstMarkerCode = 0x64;
inline constexpr int kLastMarkerCode = 0xFF;
inline constexpr int kMarkerCapacity = kLastMarkerCode - kFirstMarkerCode + 1;

inline constexpr std::string_view kUniformMarker = "<Strong>";
inline constexpr std::string_view kNoneAnswer = "none";
inline constexpr std::string_view kLabelDelimiter = " : ";
inline constexpr std::string_view kAnswerSeparator = ", ";

enum class MarkerKind { kByteToken, kNumbered, kUniform };

struct MarkerScheme {
  MarkerKind kind = MarkerKind::kByteToken;
  // Closing marker placed after the last token of each mention, e.g. "</>".
  std::optional<std::string> suffix;

  static MarkerScheme ByteToken() { return {MarkerKind::kByteToken, {}}; }
  static MarkerScheme Numbered() { return {MarkerKind::kNumbered, {}}; }
  static MarkerScheme Uniform() { return {MarkerKind::kUniform, {}}; }

  // Accepts "byte_token", "numbered", "uniform". Throws Error otherwise.
  static MarkerScheme FromName(std::string_view name);
  std::string_view Name() const;

  // Maximum number of distinct markers; unbounded for the uniform kind.
  int Capacity() const;
  bool Injective() const { return kind != MarkerKind::kUniform; }

  // Marker for the index-th mention in text order.
  std::string Marker(int index) const;
};

struct MarkedContext {
  std::vector<std::string> tokens;
  std::map<std::string, std::string> marker_of;  // mention id -> marker
  // marker -> mention ids carrying it, in text order. Singleton lists for
  // injective schemes.
  std::map<std::string, std::vector<std::string>> mention_of;
  std::map<std::string, std::string> trigger_of;  // mention id -> trigger

  std::string Text() const;
};

// Throws CapacityExceeded when an injective scheme runs out of markers.
MarkedContext InsertMarkers(const Document &doc, const MarkerScheme &scheme);

// Instruction templates. Placeholders: {relation} {marker} {trigger}
// {candidates} {inverse}.
inline constexpr std::string_view kDefaultTemplate =
    "List the {relation} event of {marker} {trigger} ?";

// Named presets: default, with_candidates, pairwise, multi_relation.
std::optional<std::string_view> TemplatePreset(std::string_view name);
std::vector<std::string_view> TemplatePresetNames();

struct InstructionFields {
  std::string_view relation;
  std::string_view marker;
  std::string_view trigger;
  std::string_view candidates;
  std::string_view inverse;
};

// Throws TemplateError on an unknown placeholder or unbalanced brace.
std::string RenderTemplate(std::string_view tmpl, const InstructionFields &f);
std::string RenderInstruction(std::string_view relation,
                              const EventMention &mention,
                              std::string_view marker,
                              std::string_view tmpl = kDefaultTemplate);

// Mentions related to `query` under the named query direction, ordered by
// textual position. Throws UnknownRelation for names outside the schema.
std::vector<std::string> GoldAnswers(const Document &doc,
                                     std::string_view query,
                                     std::string_view relation,
                                     const RelationSchema &schema);

struct MAQSample {
  std::string doc_id;
  std::string query_mention;
  std::string query_relation;
  std::string instruction;
  std::string context;
  std::string label;
  std::vector<std::string> gold_answers;

  bool operator==(const MAQSample &) const = default;
};

struct SampleOptions {
  MarkerScheme scheme;
  std::string instruction_template{kDefaultTemplate};
  // Render answers as the marker alone instead of "marker trigger".
  bool marker_only = false;
};

// Supplies the dependency chain text for a (query, direction, answers) triple.
using ChainFn = std::function<std::string(
    const EventMention &query, const QueryKind &kind,
    std::span<const std::string> answers)>;

// "marker trigger" (or marker alone) per answer joined by ", "; "none" when
// there are no answers.
std::string RenderAnswers(const Document &doc, const MarkedContext &ctx,
                          std::span<const std::string> answers,
                          bool marker_only);
std::string ComposeLabel(std::string_view chain, std::string_view answers);

// k x n samples: mentions in text order, query kinds in schema order.
std::vector<MAQSample> BuildSamples(const Document &doc,
                                    const RelationSchema &schema,
                                    const SampleOptions &options,
                                    const ChainFn &chains);

// Chains keyed by query mention id; missing entries render as "".
std::vector<MAQSample> BuildSamples(
    const Document &doc, const RelationSchema &schema,
    const MarkerScheme &scheme,
    const std::map<std::string, std::string> &chains);

std::string SampleToRecord(const MAQSample &sample);
MAQSample SampleFromRecord(std::string_view line);

}  // namespace samples
}  // namespace maq

#endif  // MAQ_SAMPLE_BUILDER_H_
