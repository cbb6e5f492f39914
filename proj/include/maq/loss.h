#ifndef MAQ_LOSS_H_
#define MAQ_LOSS_H_

#include <span>
#include <vector>

#include "maq/assignment.h"

// Training objective for multiple-answer labels: token cross entropy over the
// whole label plus a matching loss over answer slots that ignores the order
// in which gold answers were written.
namespace maq {
namespace loss {

using Matrix = std::vector<std::vector<double>>;

struct LossConfig {
  double lambda = 0.2;     // weight of the matching term
  int slot_width = 4;      // tokens per answer slot
  int pad_token = 0;       // fills slots shorter than slot_width
  double epsilon = 1e-12;  // floor for probabilities inside log()
  bool score_pad = true;   // pad positions inside slots enter the match cost
};

// Target token ids for one label. The answer part is laid out as fixed-width
// slots, one per gold answer in the written order, separated by
// non-slot positions (delimiter, commas, terminator).
struct LabelSequence {
  std::vector<int> token_ids;
  int split_index = 0;  // position of the chain/answer delimiter
  int slot_width = 1;
  int pad_token = 0;
  std::vector<int> slot_starts;

  int size() const { return static_cast<int>(token_ids.size()); }
  int answer_count() const { return static_cast<int>(slot_starts.size()); }
  // Positions outside every slot.
  int non_slot_count() const { return size() - answer_count() * slot_width; }
  std::span<const int> Slot(int i) const {
    return std::span<const int>(token_ids).subspan(slot_starts[i], slot_width);
  }
};

struct LabelTokens {
  int delimiter = 1;
  int separator = 2;
  int none = 3;
  int terminator = -1;  // appended after the answers when >= 0
};

// chain tokens, delimiter, then either slot (separator slot)* or `none`.
// Throws ShapeError when an answer is empty or longer than the slot width.
LabelSequence MakeLabelSequence(std::span<const int> chain,
                                std::span<const std::vector<int>> answers,
                                const LabelTokens &tokens,
                                const LossConfig &cfg);

// Same label with gold answers rewritten in the order given by
// order[slot] = index of the answer to place there.
LabelSequence ReorderAnswers(const LabelSequence &label,
                             std::span<const int> order);

// Per-position probability vectors.
struct SlotDistribution {
  Matrix probs;

  int positions() const { return static_cast<int>(probs.size()); }
  // Throws ShapeError unless every row sums to 1 (1e-9) with entries in [0,1].
  void Validate() const;
};

SlotDistribution Softmax(const Matrix &logits);

struct LossReport {
  double l_ce = 0.0;
  double l_bpm = 0.0;
  double total = 0.0;
  assignment::Assignment chosen_permutation;  // gold answer -> slot
};

// Mean of -log p over all label positions.
double CrossEntropy(const SlotDistribution &dist, const LabelSequence &label,
                    const LossConfig &cfg = {});

// cost[i][j]: sum over slot offsets of 1 - log p at slot j for the tokens of
// gold answer i. Throws Error when the label has no answers.
assignment::CostMatrix MatchCostMatrix(const SlotDistribution &dist,
                                       const LabelSequence &label,
                                       const LossConfig &cfg = {});

struct MatchResult {
  double loss = 0.0;
  assignment::Assignment permutation;
};

// Minimum over gold-answer permutations of the slot cost. Zero with an empty
// mapping when the label has no answers.
MatchResult MatchLoss(const SlotDistribution &dist, const LabelSequence &label,
                      const LossConfig &cfg = {});

// l_ce + lambda * l_bpm.
LossReport TotalLoss(const SlotDistribution &dist, const LabelSequence &label,
                     const LossConfig &cfg = {});

// Gradient of TotalLoss(Softmax(logits)) with the matching held at the
// permutation solved for these logits. Throws NonFiniteError on NaN/inf.
Matrix GradLogits(const Matrix &logits, const LabelSequence &label,
                  const LossConfig &cfg = {}, LossReport *report = nullptr);

}  // namespace loss
}  // namespace maq

#endif  // MAQ_LOSS_H_
