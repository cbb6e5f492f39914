#ifndef MAQ_CORPUS_H_
#define MAQ_CORPUS_H_

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace maq {

// Half-open token range [start, end).
struct TokenSpan {
  int start = 0;
  int end = 0;

  int size() const { return end - start; }
  bool operator==(const TokenSpan &) const = default;
};

struct EventMention {
  std::string id;
  TokenSpan span;
  // Tokens of the span joined by single spaces. Derived on load.
  std::string trigger;

  bool operator==(const EventMention &) const = default;
};

// A directed relation head -> tail. Symmetric relations are stored once with
// the lexicographically smaller mention id as head (see canonicalize()).
struct RelationInstance {
  std::string rel_type;
  std::string head;
  std::string tail;

  auto operator<=>(const RelationInstance &) const = default;
};

struct DepEdge {
  int head_tok = 0;
  int dep_tok = 0;
  std::string label;

  bool operator==(const DepEdge &) const = default;
};

struct RelationQuery {
  std::string name;
  bool symmetric = false;
  std::optional<std::string> inverse_name;

  bool operator==(const RelationQuery &) const = default;
};

// One question direction that can be asked about a mention. A symmetric
// relation yields one kind; an asymmetric relation with an inverse name
// yields two (the stored direction and its inverse).
struct QueryKind {
  std::string name;      // the word used in the instruction
  std::string relation;  // the stored relation type it reads from
  bool symmetric = false;
  bool inverse = false;
};

class RelationSchema {
 public:
  RelationSchema() = default;
  explicit RelationSchema(std::vector<RelationQuery> queries);

  // Schema with a single symmetric "coreference" relation.
  static RelationSchema Coreference();

  const std::vector<RelationQuery> &queries() const { return queries_; }

  // All query directions, in declaration order (name before inverse_name).
  const std::vector<QueryKind> &kinds() const { return kinds_; }

  // Number of instructions issued per mention.
  int k() const { return static_cast<int>(kinds_.size()); }

  // Looks up a query direction by its name or inverse name.
  const QueryKind *FindKind(std::string_view name) const;

  // Looks up a stored relation by its primary name.
  const RelationQuery *FindRelation(std::string_view name) const;

  // Problems with the schema itself (duplicate names, inverse on symmetric).
  std::vector<std::string> Problems() const;

 private:
  std::vector<RelationQuery> queries_;
  std::vector<QueryKind> kinds_;
};

struct Document {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::vector<TokenSpan> sentence_spans;
  std::vector<EventMention> mentions;
  std::vector<RelationInstance> relations;
  std::vector<DepEdge> dep_edges;

  int token_count() const { return static_cast<int>(tokens.size()); }
  const EventMention *FindMention(std::string_view id) const;

  // Mentions ordered by (start, end, id): the order markers are assigned in.
  std::vector<const EventMention *> MentionsInTextOrder() const;

  bool operator==(const Document &) const = default;
};

namespace corpus {

std::string JoinTokens(std::span<const std::string> tokens, TokenSpan span);

// Structural invariants only (no schema). Empty when the document is valid.
std::vector<std::string> ValidateStructure(const Document &doc);

// Structural invariants plus relation-type membership in the schema.
// Never throws on a syntactically well-formed document.
std::vector<std::string> Validate(const Document &doc,
                                  const RelationSchema &schema);

// Maps relations typed with an inverse name onto the stored direction and
// orders symmetric pairs. Relations of unknown type are returned unchanged.
RelationInstance Canonicalize(const RelationInstance &rel,
                              const RelationSchema &schema);

// Parses one record line. Throws ParseError (using the given line number) on
// malformed JSON or wrong field types, ValidationError on structural
// violations.
Document ParseDocument(std::string_view line, std::size_t line_no = 1);
std::string DocumentToRecord(const Document &doc);

std::vector<Document> ReadCorpus(std::istream &in);
std::vector<Document> LoadCorpus(const std::filesystem::path &path);
void WriteCorpus(std::span<const Document> docs, std::ostream &out);

RelationSchema ParseSchema(std::string_view json_text);
RelationSchema LoadSchema(const std::filesystem::path &path);
std::string SchemaToJson(const RelationSchema &schema);

}  // namespace corpus
}  // namespace maq

#endif  // MAQ_CORPUS_H_
