#include "maq/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "maq/errors.h"

namespace maq {

using json = nlohmann::json;

RelationSchema::RelationSchema(std::vector<RelationQuery> queries)
    : queries_(std::move(queries)) {
  for (const RelationQuery &q : queries_) {
    kinds_.push_back({q.name, q.name, q.symmetric, false});
    if (!q.symmetric && q.inverse_name.has_value()) {
      kinds_.push_back({*q.inverse_name, q.name, false, true});
    }
  }
}

RelationSchema RelationSchema::Coreference() {
  return RelationSchema({{"coreference", true, std::nullopt}});
}

const QueryKind *RelationSchema::FindKind(std::string_view name) const {
  for (const QueryKind &kind : kinds_) {
    if (kind.name == name) return &kind;
  }
  return nullptr;
}

const RelationQuery *RelationSchema::FindRelation(std::string_view name) const {
  for (const RelationQuery &q : queries_) {
    if (q.name == name) return &q;
  }
  return nullptr;
}

std::vector<std::string> RelationSchema::Problems() const {
  std::vector<std::string> problems;
  if (queries_.empty()) problems.push_back("schema has no queries");
  std::set<std::string> seen;
  for (const RelationQuery &q : queries_) {
    if (q.name.empty()) problems.push_back("query with empty name");
    if (q.symmetric && q.inverse_name.has_value()) {
      problems.push_back("symmetric query '" + q.name +
                         "' must not have an inverse_name");
    }
  }
  for (const QueryKind &kind : kinds_) {
    if (!seen.insert(kind.name).second) {
      problems.push_back("duplicate query name '" + kind.name + "'");
    }
  }
  return problems;
}

const EventMention *Document::FindMention(std::string_view id) const {
  for (const EventMention &m : mentions) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

std::vector<const EventMention *> Document::MentionsInTextOrder() const {
  std::vector<const EventMention *> ordered;
  ordered.reserve(mentions.size());
  for (const EventMention &m : mentions) ordered.push_back(&m);
  std::sort(ordered.begin(), ordered.end(),
            [](const EventMention *a, const EventMention *b) {
              if (a->span.start != b->span.start) {
                return a->span.start < b->span.start;
              }
              if (a->span.end != b->span.end) return a->span.end < b->span.end;
              return a->id < b->id;
            });
  return ordered;
}

namespace corpus {

std::string JoinTokens(std::span<const std::string> tokens, TokenSpan span) {
  std::string text;
  for (int i = span.start; i < span.end; ++i) {
    if (i > span.start) text += ' ';
    text += tokens[i];
  }
  return text;
}

std::vector<std::string> ValidateStructure(const Document &doc) {
  std::vector<std::string> violations;
  const int n = doc.token_count();

  // sentence_spans: sorted, non-overlapping, exact cover of [0, n).
  int cursor = 0;
  bool spans_ok = true;
  for (const TokenSpan &s : doc.sentence_spans) {
    if (s.start != cursor || s.end <= s.start || s.end > n) {
      spans_ok = false;
      break;
    }
    cursor = s.end;
  }
  if (!spans_ok || cursor != n) {
    violations.push_back(
        "sentence_spans must be sorted, non-overlapping and cover [0, " +
        std::to_string(n) + ")");
  }

  std::unordered_set<std::string> ids;
  for (const EventMention &m : doc.mentions) {
    if (m.id.empty()) violations.push_back("mention with empty id");
    if (!ids.insert(m.id).second) {
      violations.push_back("duplicate mention id '" + m.id + "'");
    }
    if (m.span.start < 0 || m.span.end > n || m.span.start >= m.span.end) {
      violations.push_back("mention '" + m.id + "' span [" +
                           std::to_string(m.span.start) + ", " +
                           std::to_string(m.span.end) +
                           ") outside token range");
    } else if (m.trigger != JoinTokens(doc.tokens, m.span)) {
      violations.push_back("mention '" + m.id +
                           "' trigger does not match its span");
    }
  }

  for (const RelationInstance &r : doc.relations) {
    for (const std::string *end : {&r.head, &r.tail}) {
      if (ids.count(*end) == 0) {
        violations.push_back("relation '" + r.rel_type +
                             "' references missing mention id '" + *end + "'");
      }
    }
    if (r.head == r.tail) {
      violations.push_back("relation '" + r.rel_type + "' links mention '" +
                           r.head + "' to itself");
    }
  }

  for (const DepEdge &e : doc.dep_edges) {
    if (e.head_tok < 0 || e.head_tok >= n || e.dep_tok < 0 || e.dep_tok >= n) {
      violations.push_back("dep_edge " + std::to_string(e.head_tok) + "->" +
                           std::to_string(e.dep_tok) + " outside token range");
    } else if (e.head_tok == e.dep_tok) {
      violations.push_back("dep_edge on token " + std::to_string(e.head_tok) +
                           " is a self loop");
    }
  }
  return violations;
}

std::vector<std::string> Validate(const Document &doc,
                                  const RelationSchema &schema) {
  std::vector<std::string> violations = ValidateStructure(doc);
  for (const RelationInstance &r : doc.relations) {
    if (schema.FindKind(r.rel_type) == nullptr) {
      violations.push_back("relation type '" + r.rel_type +
                           "' is not in the schema");
    }
  }
  return violations;
}

RelationInstance Canonicalize(const RelationInstance &rel,
                              const RelationSchema &schema) {
  const QueryKind *kind = schema.FindKind(rel.rel_type);
  if (kind == nullptr) return rel;
  RelationInstance out{kind->relation, rel.head, rel.tail};
  if (kind->inverse) std::swap(out.head, out.tail);
  if (kind->symmetric && out.tail < out.head) std::swap(out.head, out.tail);
  return out;
}

namespace {

template <typename T>
T Field(const json &obj, const char *key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(line_no, std::string("missing field '") + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception &e) {
    throw ParseError(line_no, std::string("field '") + key + "': " + e.what());
  }
}

const json &ArrayField(const json &obj, const char *key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(line_no, std::string("missing field '") + key + "'");
  }
  if (!it->is_array()) {
    throw ParseError(line_no, std::string("field '") + key +
                                  "' must be an array");
  }
  return *it;
}

const json &ObjectAt(const json &arr, std::size_t i, const char *key,
                     std::size_t line_no) {
  if (!arr[i].is_object()) {
    throw ParseError(line_no, std::string("entries of '") + key +
                                  "' must be objects");
  }
  return arr[i];
}

}  // namespace

Document ParseDocument(std::string_view line, std::size_t line_no) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error &e) {
    throw ParseError(line_no, e.what());
  }
  if (!rec.is_object()) throw ParseError(line_no, "record must be an object");

  Document doc;
  doc.doc_id = Field<std::string>(rec, "doc_id", line_no);
  doc.tokens = Field<std::vector<std::string>>(rec, "tokens", line_no);

  const json &sentences = ArrayField(rec, "sentences", line_no);
  for (const json &s : sentences) {
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() ||
        !s[1].is_number_integer()) {
      throw ParseError(line_no, "sentences entries must be [start, end]");
    }
    doc.sentence_spans.push_back({s[0].get<int>(), s[1].get<int>()});
  }

  const json &mentions = ArrayField(rec, "mentions", line_no);
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const json &m = ObjectAt(mentions, i, "mentions", line_no);
    EventMention mention;
    mention.id = Field<std::string>(m, "id", line_no);
    mention.span = {Field<int>(m, "start", line_no), Field<int>(m, "end", line_no)};
    if (mention.span.start >= 0 && mention.span.end <= doc.token_count() &&
        mention.span.start < mention.span.end) {
      mention.trigger = JoinTokens(doc.tokens, mention.span);
    }
    doc.mentions.push_back(std::move(mention));
  }

  const json &relations = ArrayField(rec, "relations", line_no);
  for (std::size_t i = 0; i < relations.size(); ++i) {
    const json &r = ObjectAt(relations, i, "relations", line_no);
    doc.relations.push_back({Field<std::string>(r, "type", line_no),
                             Field<std::string>(r, "head", line_no),
                             Field<std::string>(r, "tail", line_no)});
  }

  const json &edges = ArrayField(rec, "dep_edges", line_no);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const json &e = ObjectAt(edges, i, "dep_edges", line_no);
    doc.dep_edges.push_back({Field<int>(e, "head", line_no),
                             Field<int>(e, "dep", line_no),
                             Field<std::string>(e, "label", line_no)});
  }

  std::vector<std::string> violations = ValidateStructure(doc);
  if (!violations.empty()) throw ValidationError(doc.doc_id, violations.front());
  return doc;
}

std::string DocumentToRecord(const Document &doc) {
  json rec;
  rec["doc_id"] = doc.doc_id;
  rec["tokens"] = doc.tokens;
  rec["sentences"] = json::array();
  for (const TokenSpan &s : doc.sentence_spans) {
    rec["sentences"].push_back({s.start, s.end});
  }
  rec["mentions"] = json::array();
  for (const EventMention &m : doc.mentions) {
    rec["mentions"].push_back(
        {{"id", m.id}, {"start", m.span.start}, {"end", m.span.end}});
  }
  rec["relations"] = json::array();
  for (const RelationInstance &r : doc.relations) {
    rec["relations"].push_back(
        {{"type", r.rel_type}, {"head", r.head}, {"tail", r.tail}});
  }
  rec["dep_edges"] = json::array();
  for (const DepEdge &e : doc.dep_edges) {
    rec["dep_edges"].push_back(
        {{"head", e.head_tok}, {"dep", e.dep_tok}, {"label", e.label}});
  }
  return rec.dump();
}

std::vector<Document> ReadCorpus(std::istream &in) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Document doc = ParseDocument(line, line_no);
    if (!seen.insert(doc.doc_id).second) {
      throw ValidationError(doc.doc_id, "duplicate doc_id on line " +
                                            std::to_string(line_no));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> LoadCorpus(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return ReadCorpus(in);
}

void WriteCorpus(std::span<const Document> docs, std::ostream &out) {
  for (const Document &doc : docs) out << DocumentToRecord(doc) << '\n';
}

RelationSchema ParseSchema(std::string_view json_text) {
  json rec;
  try {
    rec = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ParseError(1, e.what());
  }
  if (!rec.is_object()) throw ParseError(1, "schema must be an object");
  const json &queries = ArrayField(rec, "queries", 1);
  std::vector<RelationQuery> parsed;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const json &q = ObjectAt(queries, i, "queries", 1);
    RelationQuery query;
    query.name = Field<std::string>(q, "name", 1);
    query.symmetric = q.value("symmetric", false);
    if (q.contains("inverse_name") && !q["inverse_name"].is_null()) {
      query.inverse_name = Field<std::string>(q, "inverse_name", 1);
    }
    parsed.push_back(std::move(query));
  }
  RelationSchema schema(std::move(parsed));
  std::vector<std::string> problems = schema.Problems();
  if (!problems.empty()) throw Error("invalid schema: " + problems.front());
  return schema;
}

RelationSchema LoadSchema(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseSchema(buffer.str());
}

std::string SchemaToJson(const RelationSchema &schema) {
  json rec;
  rec["queries"] = json::array();
  for (const RelationQuery &q : schema.queries()) {
    json entry{{"name", q.name}, {"symmetric", q.symmetric}};
    if (q.inverse_name) entry["inverse_name"] = *q.inverse_name;
    rec["queries"].push_back(std::move(entry));
  }
  return rec.dump();
}

}  // namespace corpus
}  // namespace maq
