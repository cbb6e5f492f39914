#include "maq/analysis.h"

#include "json.hpp"
#include "maq/errors.h"

namespace maq {
namespace analysis {

Pairing ParsePairing(std::string_view name) {
  if (name == "unordered") return Pairing::kUnordered;
  if (name == "ordered") return Pairing::kOrdered;
  throw Error("unknown pairing '" + std::string(name) + "'");
}

std::string_view PairingName(Pairing pairing) {
  return pairing == Pairing::kOrdered ? "ordered" : "unordered";
}

CostReport CountQueries(std::span<const std::int64_t> mention_counts, int k,
                        Pairing pairing) {
  if (k < 1) throw Error("k must be at least 1");
  CostReport report;
  for (std::int64_t n : mention_counts) {
    if (n < 0) throw Error("negative mention count");
    ++report.docs;
    report.mentions += n;
    std::int64_t pairs = n * (n - 1);
    report.queries_pairwise +=
        pairing == Pairing::kOrdered ? pairs : pairs / 2;
  }
  report.queries_maq = k * report.mentions;
  if (report.queries_maq > 0) {
    report.ratio = static_cast<double>(report.queries_pairwise) /
                   static_cast<double>(report.queries_maq);
  }
  return report;
}

std::int64_t PairwiseFromMoments(std::int64_t sum_n, std::int64_t sum_n2,
                                 Pairing pairing) {
  std::int64_t ordered = sum_n2 - sum_n;
  return pairing == Pairing::kOrdered ? ordered : ordered / 2;
}

std::int64_t SumSquaresForUnordered(std::int64_t sum_n,
                                    std::int64_t pairwise) {
  return 2 * pairwise + sum_n;
}

bool ReferenceAggregatesConsistent() {
  return SumSquaresForUnordered(kReferenceMentions, kReferencePairwise) ==
             kReferenceSumSquares &&
         PairwiseFromMoments(kReferenceMentions, kReferenceSumSquares,
                             Pairing::kUnordered) == kReferencePairwise;
}

double LatencyRatio(const CostReport &report, double pairwise_latency,
                    double maq_latency) {
  if (!(pairwise_latency > 0) || !(maq_latency > 0)) {
    throw Error("latencies must be positive");
  }
  if (report.queries_maq == 0) throw Error("no MAQ queries");
  return static_cast<double>(report.queries_pairwise) * pairwise_latency /
         (static_cast<double>(report.queries_maq) * maq_latency);
}

std::string ReportToRecord(const CostReport &report) {
  nlohmann::json rec{{"docs", report.docs},
                     {"mentions", report.mentions},
                     {"pairwise_queries", report.queries_pairwise},
                     {"maq_queries", report.queries_maq},
                     {"ratio", report.ratio}};
  return rec.dump();
}

}  // namespace analysis
}  // namespace maq
