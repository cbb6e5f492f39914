#include "maq/sample_builder.h"

#include <algorithm>
#include <array>
#include <climits>
#include <cstdio>

#include "json.hpp"
#include "maq/errors.h"

namespace maq {
namespace samples {

MarkerScheme MarkerScheme::FromName(std::string_view name) {
  if (name == "byte_token") return ByteToken();
  if (name == "numbered") return Numbered();
  if (name == "uniform") return Uniform();
  throw Error("unknown marker scheme '" + std::string(name) + "'");
}

std::string_view MarkerScheme::Name() const {
  switch (kind) {
    case MarkerKind::kByteToken:
      return "byte_token";
    case MarkerKind::kNumbered:
      return "numbered";
    case MarkerKind::kUniform:
      return "uniform";
  }
  return "";
}

int MarkerScheme::Capacity() const {
  return kind == MarkerKind::kUniform ? INT_MAX : kMarkerCapacity;
}

std::string MarkerScheme::Marker(int index) const {
  if (kind == MarkerKind::kUniform) return std::string(kUniformMarker);
  if (index < 0 || index >= kMarkerCapacity) {
    throw CapacityExceeded("marker index " + std::to_string(index) +
                           " exceeds capacity " +
                           std::to_string(kMarkerCapacity));
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf),
                kind == MarkerKind::kByteToken ? "<0x%02X>" : "<No%02X>",
                kFirstMarkerCode + index);
  return buf;
}

std::string MarkedContext::Text() const {
  std::string text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) text += ' ';
    text += tokens[i];
  }
  return text;
}

MarkedContext InsertMarkers(const Document &doc, const MarkerScheme &scheme) {
  std::vector<const EventMention *> ordered = doc.MentionsInTextOrder();
  if (static_cast<long>(ordered.size()) > scheme.Capacity()) {
    throw CapacityExceeded("document '" + doc.doc_id + "' has " +
                           std::to_string(ordered.size()) +
                           " mentions; scheme '" +
                           std::string(scheme.Name()) + "' labels at most " +
                           std::to_string(scheme.Capacity()));
  }

  MarkedContext ctx;
  const int n = doc.token_count();
  std::vector<std::vector<std::string>> before(n + 1);
  std::vector<std::vector<std::string>> closing(n + 1);
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const EventMention &m = *ordered[i];
    std::string marker = scheme.Marker(static_cast<int>(i));
    before[m.span.start].push_back(marker);
    if (scheme.suffix) closing[m.span.end].push_back(*scheme.suffix);
    ctx.marker_of[m.id] = marker;
    ctx.mention_of[marker].push_back(m.id);
    ctx.trigger_of[m.id] = m.trigger;
  }

  for (int t = 0; t <= n; ++t) {
    // Inner mentions (later start) close first.
    for (auto it = closing[t].rbegin(); it != closing[t].rend(); ++it) {
      ctx.tokens.push_back(*it);
    }
    if (t == n) break;
    for (std::string &marker : before[t]) ctx.tokens.push_back(std::move(marker));
    ctx.tokens.push_back(doc.tokens[t]);
  }
  return ctx;
}

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 4>
    kPresets{{
        {"default", kDefaultTemplate},
        {"with_candidates",
         "Find the {relation} event of {marker} {trigger} from the event "
         "mentions {candidates} ?"},
        {"pairwise",
         "What's the event relation between {marker} {trigger} and "
         "{candidates} ?"},
        {"multi_relation",
         "List the {relation} and {inverse} event of {marker} {trigger} ?"},
    }};

}  // namespace

std::optional<std::string_view> TemplatePreset(std::string_view name) {
  for (const auto &[preset, tmpl] : kPresets) {
    if (preset == name) return tmpl;
  }
  return std::nullopt;
}

std::vector<std::string_view> TemplatePresetNames() {
  std::vector<std::string_view> names;
  for (const auto &preset : kPresets) names.push_back(preset.first);
  return names;
}

std::string RenderTemplate(std::string_view tmpl, const InstructionFields &f) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    char c = tmpl[i];
    if (c == '}') throw TemplateError("unbalanced '}' in template");
    if (c != '{') {
      out += c;
      ++i;
      continue;
    }
    std::size_t close = tmpl.find('}', i);
    if (close == std::string_view::npos) {
      throw TemplateError("unterminated placeholder in template");
    }
    std::string_view name = tmpl.substr(i + 1, close - i - 1);
    if (name == "relation") {
      out += f.relation;
    } else if (name == "marker") {
      out += f.marker;
    } else if (name == "trigger") {
      out += f.trigger;
    } else if (name == "candidates") {
      out += f.candidates;
    } else if (name == "inverse") {
      out += f.inverse;
    } else {
      throw TemplateError("unknown placeholder '{" + std::string(name) + "}'");
    }
    i = close + 1;
  }
  return out;
}

std::string RenderInstruction(std::string_view relation,
                              const EventMention &mention,
                              std::string_view marker, std::string_view tmpl) {
  return RenderTemplate(tmpl, {relation, marker, mention.trigger, {}, {}});
}

std::vector<std::string> GoldAnswers(const Document &doc,
                                     std::string_view query,
                                     std::string_view relation,
                                     const RelationSchema &schema) {
  const QueryKind *kind = schema.FindKind(relation);
  if (kind == nullptr) {
    throw UnknownRelation("relation '" + std::string(relation) +
                          "' is not in the schema");
  }
  if (doc.FindMention(query) == nullptr) {
    throw Error("document '" + doc.doc_id + "' has no mention '" +
                std::string(query) + "'");
  }

  std::vector<std::string> related;
  for (const RelationInstance &stored : doc.relations) {
    RelationInstance r = corpus::Canonicalize(stored, schema);
    if (r.rel_type != kind->relation) continue;
    if (kind->symmetric) {
      if (r.head == query) related.push_back(r.tail);
      if (r.tail == query) related.push_back(r.head);
    } else if (kind->inverse) {
      if (r.head == query) related.push_back(r.tail);
    } else {
      if (r.tail == query) related.push_back(r.head);
    }
  }

  std::vector<std::string> answers;
  for (const EventMention *m : doc.MentionsInTextOrder()) {
    if (m->id == query) continue;
    if (std::find(related.begin(), related.end(), m->id) != related.end()) {
      answers.push_back(m->id);
    }
  }
  return answers;
}

std::string RenderAnswers(const Document &doc, const MarkedContext &ctx,
                          std::span<const std::string> answers,
                          bool marker_only) {
  if (answers.empty()) return std::string(kNoneAnswer);
  std::string out;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const EventMention *m = doc.FindMention(answers[i]);
    if (m == nullptr) throw Error("unknown answer mention '" + answers[i] + "'");
    if (i > 0) out += kAnswerSeparator;
    out += ctx.marker_of.at(m->id);
    if (!marker_only) {
      out += ' ';
      out += m->trigger;
    }
  }
  return out;
}

std::string ComposeLabel(std::string_view chain, std::string_view answers) {
  std::string label(chain);
  label += kLabelDelimiter;
  label += answers;
  return label;
}

std::vector<MAQSample> BuildSamples(const Document &doc,
                                    const RelationSchema &schema,
                                    const SampleOptions &options,
                                    const ChainFn &chains) {
  MarkedContext ctx = InsertMarkers(doc, options.scheme);
  const std::string context = ctx.Text();
  std::vector<const EventMention *> ordered = doc.MentionsInTextOrder();

  std::vector<MAQSample> out;
  out.reserve(ordered.size() * schema.kinds().size());
  for (const EventMention *query : ordered) {
    const std::string &marker = ctx.marker_of.at(query->id);
    std::string candidates;
    for (const EventMention *other : ordered) {
      if (other == query) continue;
      if (!candidates.empty()) candidates += kAnswerSeparator;
      candidates += ctx.marker_of.at(other->id) + " " + other->trigger;
    }
    for (const QueryKind &kind : schema.kinds()) {
      std::string inverse = kind.name;
      if (const RelationQuery *rel = schema.FindRelation(kind.relation)) {
        if (kind.inverse) {
          inverse = rel->name;
        } else if (rel->inverse_name) {
          inverse = *rel->inverse_name;
        }
      }
      MAQSample sample;
      sample.doc_id = doc.doc_id;
      sample.query_mention = query->id;
      sample.query_relation = kind.name;
      sample.instruction = RenderTemplate(
          options.instruction_template,
          {kind.name, marker, query->trigger, candidates, inverse});
      sample.context = context;
      sample.gold_answers = GoldAnswers(doc, query->id, kind.name, schema);
      std::string chain = chains ? chains(*query, kind, sample.gold_answers)
                                 : std::string();
      sample.label = ComposeLabel(
          chain, RenderAnswers(doc, ctx, sample.gold_answers,
                               options.marker_only));
      out.push_back(std::move(sample));
    }
  }
  return out;
}

std::vector<MAQSample> BuildSamples(
    const Document &doc, const RelationSchema &schema,
    const MarkerScheme &scheme,
    const std::map<std::string, std::string> &chains) {
  SampleOptions options;
  options.scheme = scheme;
  return BuildSamples(
      doc, schema, options,
      [&chains](const EventMention &query, const QueryKind &,
                std::span<const std::string>) {
        auto it = chains.find(query.id);
        return it == chains.end() ? std::string() : it->second;
      });
}

std::string SampleToRecord(const MAQSample &sample) {
  nlohmann::json rec{{"doc_id", sample.doc_id},
                     {"mention", sample.query_mention},
                     {"relation", sample.query_relation},
                     {"instruction", sample.instruction},
                     {"context", sample.context},
                     {"label", sample.label},
                     {"gold", sample.gold_answers}};
  return rec.dump();
}

MAQSample SampleFromRecord(std::string_view line) {
  try {
    nlohmann::json rec = nlohmann::json::parse(line);
    MAQSample sample;
    sample.doc_id = rec.at("doc_id").get<std::string>();
    sample.query_mention = rec.at("mention").get<std::string>();
    sample.query_relation = rec.at("relation").get<std::string>();
    sample.instruction = rec.at("instruction").get<std::string>();
    sample.context = rec.at("context").get<std::string>();
    sample.label = rec.at("label").get<std::string>();
    sample.gold_answers = rec.at("gold").get<std::vector<std::string>>();
    return sample;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(1, e.what());
  }
}

}  // namespace samples
}  // namespace maq
