#include "maq/loss.h"

#include <algorithm>
#include <cmath>

#include "maq/errors.h"

namespace maq {
namespace loss {

LabelSequence MakeLabelSequence(std::span<const int> chain,
                                std::span<const std::vector<int>> answers,
                                const LabelTokens &tokens,
                                const LossConfig &cfg) {
  if (cfg.slot_width < 1) throw ShapeError("slot width must be >= 1");
  LabelSequence label;
  label.slot_width = cfg.slot_width;
  label.pad_token = cfg.pad_token;
  label.token_ids.assign(chain.begin(), chain.end());
  label.split_index = label.size();
  label.token_ids.push_back(tokens.delimiter);
  if (answers.empty()) {
    label.token_ids.push_back(tokens.none);
  }
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const std::vector<int> &answer = answers[i];
    if (answer.empty() || static_cast<int>(answer.size()) > cfg.slot_width) {
      throw ShapeError("answer of " + std::to_string(answer.size()) +
                       " tokens does not fit slot width " +
                       std::to_string(cfg.slot_width));
    }
    if (i > 0) label.token_ids.push_back(tokens.separator);
    label.slot_starts.push_back(label.size());
    label.token_ids.insert(label.token_ids.end(), answer.begin(), answer.end());
    label.token_ids.insert(label.token_ids.end(),
                           cfg.slot_width - answer.size(), cfg.pad_token);
  }
  if (tokens.terminator >= 0) label.token_ids.push_back(tokens.terminator);
  return label;
}

LabelSequence ReorderAnswers(const LabelSequence &label,
                             std::span<const int> order) {
  if (static_cast<int>(order.size()) != label.answer_count()) {
    throw ShapeError("answer order has wrong length");
  }
  LabelSequence out = label;
  for (int slot = 0; slot < label.answer_count(); ++slot) {
    std::span<const int> src = label.Slot(order[slot]);
    std::copy(src.begin(), src.end(),
              out.token_ids.begin() + label.slot_starts[slot]);
  }
  return out;
}

void SlotDistribution::Validate() const {
  for (std::size_t pos = 0; pos < probs.size(); ++pos) {
    double sum = 0.0;
    for (double p : probs[pos]) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ShapeError("probability outside [0, 1] at position " +
                         std::to_string(pos));
      }
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw ShapeError("probabilities at position " + std::to_string(pos) +
                       " sum to " + std::to_string(sum));
    }
  }
}

SlotDistribution Softmax(const Matrix &logits) {
  SlotDistribution dist;
  dist.probs.reserve(logits.size());
  for (const std::vector<double> &row : logits) {
    double hi = -INFINITY;
    for (double z : row) {
      if (!std::isfinite(z)) throw NonFiniteError("logit is not finite");
      hi = std::max(hi, z);
    }
    std::vector<double> p(row.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      p[i] = std::exp(row[i] - hi);
      sum += p[i];
    }
    for (double &x : p) x /= sum;
    dist.probs.push_back(std::move(p));
  }
  return dist;
}

namespace {

double Prob(const SlotDistribution &dist, int pos, int token) {
  const std::vector<double> &row = dist.probs[pos];
  if (token < 0 || token >= static_cast<int>(row.size())) {
    throw ShapeError("token id " + std::to_string(token) +
                     " outside vocabulary of size " +
                     std::to_string(row.size()));
  }
  return row[token];
}

double NegLog(double p, double epsilon) { return -std::log(std::max(p, epsilon)); }

void CheckCoverage(const SlotDistribution &dist, const LabelSequence &label) {
  if (dist.positions() < label.size()) {
    throw ShapeError("distribution covers " +
                     std::to_string(dist.positions()) +
                     " positions, label needs " + std::to_string(label.size()));
  }
}

bool Scored(const LabelSequence &label, int token, const LossConfig &cfg) {
  return cfg.score_pad || token != label.pad_token;
}

}  // namespace

double CrossEntropy(const SlotDistribution &dist, const LabelSequence &label,
                    const LossConfig &cfg) {
  CheckCoverage(dist, label);
  if (label.size() == 0) throw ShapeError("empty label");
  double sum = 0.0;
  for (int pos = 0; pos < label.size(); ++pos) {
    sum += NegLog(Prob(dist, pos, label.token_ids[pos]), cfg.epsilon);
  }
  return sum / label.size();
}

assignment::CostMatrix MatchCostMatrix(const SlotDistribution &dist,
                                       const LabelSequence &label,
                                       const LossConfig &cfg) {
  CheckCoverage(dist, label);
  const int m = label.answer_count();
  if (m == 0) throw Error("label has no answer spans to match");
  std::vector<double> cost(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) {
    std::span<const int> gold = label.Slot(i);
    for (int j = 0; j < m; ++j) {
      double c = 0.0;
      for (int t = 0; t < label.slot_width; ++t) {
        if (!Scored(label, gold[t], cfg)) continue;
        int pos = label.slot_starts[j] + t;
        c += 1.0 + NegLog(Prob(dist, pos, gold[t]), cfg.epsilon);
      }
      cost[i * m + j] = c;
    }
  }
  return assignment::CostMatrix(m, m, std::move(cost));
}

MatchResult MatchLoss(const SlotDistribution &dist, const LabelSequence &label,
                      const LossConfig &cfg) {
  CheckCoverage(dist, label);
  MatchResult result;
  if (label.answer_count() == 0) return result;
  result.permutation = assignment::Solve(MatchCostMatrix(dist, label, cfg));
  result.loss = result.permutation.total_cost;
  return result;
}

LossReport TotalLoss(const SlotDistribution &dist, const LabelSequence &label,
                     const LossConfig &cfg) {
  if (cfg.lambda < 0.0) throw Error("lambda must be non-negative");
  LossReport report;
  report.l_ce = CrossEntropy(dist, label, cfg);
  MatchResult match = MatchLoss(dist, label, cfg);
  report.l_bpm = match.loss;
  report.chosen_permutation = std::move(match.permutation);
  report.total = report.l_ce + cfg.lambda * report.l_bpm;
  return report;
}

Matrix GradLogits(const Matrix &logits, const LabelSequence &label,
                  const LossConfig &cfg, LossReport *report) {
  SlotDistribution dist = Softmax(logits);
  LossReport local = TotalLoss(dist, label, cfg);

  Matrix grad(logits.size());
  for (std::size_t pos = 0; pos < logits.size(); ++pos) {
    grad[pos].assign(logits[pos].size(), 0.0);
  }
  // d(-log p_c)/dz = p - onehot(c), zero where the floor is active.
  auto add = [&](int pos, int token, double scale) {
    const std::vector<double> &p = dist.probs[pos];
    if (p[token] < cfg.epsilon) return;
    std::vector<double> &g = grad[pos];
    for (std::size_t v = 0; v < p.size(); ++v) g[v] += scale * p[v];
    g[token] -= scale;
  };

  const double inv_n = 1.0 / label.size();
  for (int pos = 0; pos < label.size(); ++pos) {
    add(pos, label.token_ids[pos], inv_n);
  }
  if (cfg.lambda != 0.0) {
    const std::vector<int> &mapping = local.chosen_permutation.mapping;
    for (std::size_t i = 0; i < mapping.size(); ++i) {
      std::span<const int> gold = label.Slot(static_cast<int>(i));
      for (int t = 0; t < label.slot_width; ++t) {
        if (!Scored(label, gold[t], cfg)) continue;
        add(label.slot_starts[mapping[i]] + t, gold[t], cfg.lambda);
      }
    }
  }
  if (report != nullptr) *report = std::move(local);
  return grad;
}

}  // namespace loss
}  // namespace maq
