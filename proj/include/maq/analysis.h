#ifndef MAQ_ANALYSIS_H_
#define MAQ_ANALYSIS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

// Inference cost of one query per (mention, direction) against one query per
// mention pair.
namespace maq {
namespace analysis {

enum class Pairing { kUnordered, kOrdered };

// "unordered" or "ordered"; throws Error otherwise.
Pairing ParsePairing(std::string_view name);
std::string_view PairingName(Pairing pairing);

struct CostReport {
  std::int64_t docs = 0;
  std::int64_t mentions = 0;
  std::int64_t queries_pairwise = 0;
  std::int64_t queries_maq = 0;
  double ratio = 0.0;  // pairwise / maq; 0 when there are no MAQ queries
};

// Throws Error on k < 1 or a negative count.
CostReport CountQueries(std::span<const std::int64_t> mention_counts, int k,
                        Pairing pairing = Pairing::kUnordered);

// Pairwise count from the first two moments of the per-document sizes.
std::int64_t PairwiseFromMoments(std::int64_t sum_n, std::int64_t sum_n2,
                                 Pairing pairing);
// Inverse of the unordered case: the sum of squares implied by a pairwise
// count.
std::int64_t SumSquaresForUnordered(std::int64_t sum_n,
                                    std::int64_t pairwise);

// Published MAVEN-ERE coreference aggregates.
inline constexpr std::int64_t kReferenceDocs = 710;
inline constexpr std::int64_t kReferenceMentions = 17780;
inline constexpr std::int64_t kReferencePairwise = 631486;
inline constexpr std::int64_t kReferenceSumSquares = 1280752;

// True iff the mention total and pairwise count above are consistent with
// unordered pairing and the stated sum of squares.
bool ReferenceAggregatesConsistent();

// Ratio of total cost given per-query latencies for each method. Throws
// Error on non-positive latencies or an empty MAQ side.
double LatencyRatio(const CostReport &report, double pairwise_latency,
                    double maq_latency);

// {"docs", "maq_queries", "mentions", "pairwise_queries", "ratio"}
std::string ReportToRecord(const CostReport &report);

}  // namespace analysis
}  // namespace maq

#endif  // MAQ_ANALYSIS_H_
