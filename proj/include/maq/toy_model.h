#ifndef MAQ_TOY_MODEL_H_
#define MAQ_TOY_MODEL_H_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "maq/corpus.h"
#include "maq/loss.h"
#include "maq/sample_builder.h"

// A hashed-feature linear softmax over fixed output positions, small enough
// to train in seconds, used to compare answer orderings under the token
// cross entropy and the matching loss.
namespace maq {
namespace toy {

enum class OrderPolicy { kSequence, kReverse, kRandom, kDistance, kDict };

inline constexpr std::array<OrderPolicy, 5> kAllPolicies = {
    OrderPolicy::kSequence, OrderPolicy::kReverse, OrderPolicy::kRandom,
    OrderPolicy::kDistance, OrderPolicy::kDict};

// "sequence", "reverse", "random", "distance", "dict". Throws Error.
OrderPolicy ParseOrderPolicy(std::string_view name);
std::string_view OrderPolicyName(OrderPolicy policy);

// Output-side tokens besides markers and triggers.
inline constexpr std::string_view kDelimiterToken = ":";
inline constexpr std::string_view kSeparatorToken = ",";
inline constexpr std::string_view kEndToken = "<eos>";
inline constexpr std::string_view kPadToken = "<pad>";

class Vocab {
 public:
  // Starts with the special tokens and "none".
  Vocab();
  // Every whitespace token of instructions, contexts and label answers.
  static Vocab Build(std::span<const samples::MAQSample> dataset);

  int Add(std::string_view token);
  // Throws VocabularyError for unknown tokens.
  int Id(std::string_view token) const;
  bool Contains(std::string_view token) const;
  const std::string &Token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> ids_;
};

struct ModelShape {
  int slot_width = 2;   // marker + trigger
  int max_answers = 5;
  int window = 1;       // context tokens on each side of the query marker
  int buckets = 1 << 16;

  // ":" then max_answers slots, each followed by "," or "<eos>".
  int positions() const { return 1 + max_answers * (slot_width + 1); }
};

// Active hashed tokens of one sample; crossed with the output position to
// give feature buckets.
struct Encoded {
  std::vector<std::uint64_t> token_hashes;
};

class ToyModel {
 public:
  ToyModel(Vocab vocab, ModelShape shape = {}, std::uint64_t rng_seed = 0);

  const Vocab &vocab() const { return vocab_; }
  const ModelShape &shape() const { return shape_; }
  std::uint64_t rng_seed() const { return rng_seed_; }
  std::size_t feature_count() const { return weights_.size(); }

  // Throws VocabularyError when a sample token is unknown.
  Encoded Encode(const samples::MAQSample &sample) const;
  loss::Matrix Logits(const Encoded &enc, int positions) const;
  // weights -= learning_rate * d loss / d weights.
  void Step(const Encoded &enc, const loss::Matrix &grad_logits,
            double learning_rate);

 private:
  std::uint32_t Bucket(std::uint64_t token_hash, int position) const;

  Vocab vocab_;
  ModelShape shape_;
  std::uint64_t rng_seed_;
  std::unordered_map<std::uint32_t, std::vector<double>> weights_;
};

// Distributions at every output position.
loss::SlotDistribution Forward(const ToyModel &model,
                               const samples::MAQSample &sample);

// Greedy per-position argmax rendered as a label string.
std::string Decode(const ToyModel &model, const samples::MAQSample &sample);

// Set equality of the markers cited by the predicted and the gold label.
bool ExactSetMatch(std::string_view predicted, const samples::MAQSample &gold);

// Permutation of the label's answers: order[slot] = answer index. `index`
// keys the per-sample shuffle of the random policy.
std::vector<int> AnswerOrder(const samples::MAQSample &sample,
                             OrderPolicy policy, std::uint64_t seed,
                             std::size_t index);

// Training target for the label's answers written in `order`.
loss::LabelSequence TargetSequence(const ToyModel &model,
                                   const samples::MAQSample &sample,
                                   std::span<const int> order);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 20;
  // Toy labels are about ten tokens long, so the per-token CE mean weighs
  // each slot position far more than on long generated labels. At 0.2 the
  // two terms pull against each other and slots stay undecided.
  double lambda = 1.0;
  OrderPolicy answer_order_policy = OrderPolicy::kSequence;
  std::uint64_t seed = 0;
  // Fraction held out for evaluation. When it rounds to zero samples the
  // training set is scored instead.
  double holdout = 0.2;
  ModelShape shape;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;  // mean total loss over the epoch's updates
  double exact_set_match = 0.0;
};

struct TrainResult {
  ToyModel model;
  std::vector<EpochStats> history;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> eval_indices;
};

// Per-sample gradient descent on total loss, lambda forced to 0 without
// use_bpm. Throws Error on an empty dataset or a label the model cannot
// express, DivergenceError when the loss stops being finite.
TrainResult Train(std::span<const samples::MAQSample> dataset,
                  const TrainConfig &cfg, bool use_bpm);

double ExactSetMatchRate(const ToyModel &model,
                         std::span<const samples::MAQSample> dataset,
                         std::span<const std::size_t> indices);

struct GeneratorConfig {
  std::uint64_t seed = 0;
  int samples = 500;
  int scenarios = 20;
  int vocab_size = 64;
  int min_answers = 2;
  int max_answers = 5;
  int max_distractors = 2;
  int max_gap = 3;  // filler tokens before each mention
};

// One-sentence documents. Each scenario fixes a query trigger, its cause
// triggers and distractors, and their text order; documents vary the filler
// between them.
std::vector<Document> GenerateDocuments(const GeneratorConfig &cfg);
RelationSchema GeneratorSchema();
// The query mention's sample from each generated document.
std::vector<samples::MAQSample> GenerateSamples(const GeneratorConfig &cfg);

struct ExperimentRow {
  std::string loss;  // "ce" or "ce+bpm"
  std::string order;
  double exact_set_match = 0.0;
  std::uint64_t seed = 0;
};

// CE-only then CE+BPM, each over `policies` in the given order.
std::vector<ExperimentRow> OrderExperiment(
    std::span<const samples::MAQSample> dataset, const TrainConfig &base,
    std::span<const OrderPolicy> policies = kAllPolicies);

// {"exact_set_match", "loss", "order", "seed"}
std::string RowToRecord(const ExperimentRow &row);

}  // namespace toy
}  // namespace maq

#endif  // MAQ_TOY_MODEL_H_
