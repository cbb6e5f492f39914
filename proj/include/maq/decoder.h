#ifndef MAQ_DECODER_H_
#define MAQ_DECODER_H_

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maq/corpus.h"
#include "maq/metrics.h"
#include "maq/sample_builder.h"

// Turns generated labels back into mention ids, relations and clusters.
namespace maq {
namespace decoder {

struct ParsedAnswer {
  std::string marker;   // empty when the fragment has no marker
  std::string trigger;  // text after the marker
  std::string raw;      // trimmed fragment
};

struct ParsedLabel {
  std::string chain_text;
  std::vector<ParsedAnswer> answers;
  bool is_none = false;
};

// A "<...>" token that is not a closing marker.
bool IsMarker(std::string_view token);

// Splits on the first ':' into chain and answers, answers on ','. Never
// throws; text without a ':' is all chain.
ParsedLabel ParseLabel(std::string_view text);

struct ResolveIssue {
  enum class Kind { kNoMarker, kUnknownMarker, kAmbiguousMarker, kTriggerMismatch };
  Kind kind;
  std::string fragment;
};

struct Resolution {
  std::vector<std::string> mentions;  // in answer order, duplicates dropped
  std::vector<ResolveIssue> failures;  // fragments that resolved to nothing
  std::vector<ResolveIssue> flags;     // resolved, but trigger text differs
};

// Looks every marker up in the context. A marker shared by several mentions
// (uniform scheme) resolves only when the trigger text singles one out.
Resolution Resolve(const ParsedLabel &parsed, const samples::MarkedContext &ctx);

struct TaggedResolution {
  std::string doc_id;
  std::string query_mention;
  std::string relation;  // query direction name
  std::vector<std::string> answers;
  std::vector<std::string> failures;
};

struct PredictionSet {
  metrics::RelationSet relations;
  std::vector<std::string> partial_failures;
};

// Per-document relation sets keyed by doc_id. Answer a to a query q under
// relation r becomes r(a -> q); inverse-name queries flip to r(q -> a);
// symmetric pairs are canonicalized. Throws UnknownRelation.
std::map<std::string, PredictionSet> Assemble(
    std::span<const TaggedResolution> resolutions, const RelationSchema &schema);

// Canonical form of an existing relation set; a fixed point of itself.
metrics::RelationSet CanonicalRelations(const metrics::RelationSet &relations,
                                        const RelationSchema &schema);

// Connected components of the link graph over `mentions`; unlinked mentions
// become singletons. Clusters and members follow the order of `mentions`.
metrics::ClusterPartition BuildClusters(const metrics::RelationSet &links,
                                        std::span<const std::string> mentions);

// {"doc_id": str, "relations": [{"type", "head", "tail"}]}
std::string PredictionToRecord(const std::string &doc_id,
                               const metrics::RelationSet &relations);
// Throws ParseError on malformed lines or a repeated doc_id.
std::map<std::string, metrics::RelationSet> ReadPredictions(std::istream &in);

}  // namespace decoder
}  // namespace maq

#endif  // MAQ_DECODER_H_
