#ifndef MAQ_METRICS_H_
#define MAQ_METRICS_H_

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "maq/assignment.h"
#include "maq/corpus.h"

// Coreference partition metrics (MUC, B-cubed, CEAF_e, BLANC) and micro
// averaged precision/recall/F1 over directed relation instances.
//
// Every metric is computed from additive counts so that corpus-level scores
// pool per-document numerators and denominators.
namespace maq {
namespace metrics {

struct ClusterPartition {
  std::vector<std::vector<std::string>> clusters;
  std::vector<std::string> universe;

  // Universe is the union of the clusters.
  static ClusterPartition FromClusters(
      std::vector<std::vector<std::string>> clusters);
  // Empty when clusters are non-empty, disjoint and cover the universe.
  std::vector<std::string> Problems() const;
};

struct ScoreTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // f1 = 2PR/(P+R), or 0 when P+R = 0.
  static ScoreTriple FromPR(double precision, double recall);
};

// Fractions precision = p_num/p_den and recall = r_num/r_den; a zero
// denominator scores 0.
struct Counts {
  double p_num = 0.0;
  double p_den = 0.0;
  double r_num = 0.0;
  double r_den = 0.0;

  Counts &operator+=(const Counts &o);
  ScoreTriple Score() const;
};

// All functions below throw UniverseMismatch when the partitions are invalid
// or cover different mention sets.
Counts MucCounts(const ClusterPartition &key, const ClusterPartition &response);
Counts BCubedCounts(const ClusterPartition &key,
                    const ClusterPartition &response);
Counts CeafeCounts(const ClusterPartition &key,
                   const ClusterPartition &response);

ScoreTriple Muc(const ClusterPartition &key, const ClusterPartition &response);
ScoreTriple BCubed(const ClusterPartition &key,
                   const ClusterPartition &response);
ScoreTriple Ceafe(const ClusterPartition &key,
                  const ClusterPartition &response);

// Entity similarity phi4(k, r) = 2|k n r| / (|k| + |r|).
double Phi4(const std::vector<std::string> &key_cluster,
            const std::vector<std::string> &response_cluster);
// Optimal key -> response cluster alignment under phi4.
assignment::Assignment CeafeAlignment(const ClusterPartition &key,
                                      const ClusterPartition &response);

// Coreference-link and non-coreference-link halves.
struct BlancCounts {
  Counts coref;
  Counts non_coref;

  BlancCounts &operator+=(const BlancCounts &o);
  // Averages P, R and F of the two halves. When neither side has any
  // coreference links only the non-coreference half counts, and vice versa.
  ScoreTriple Score() const;
};

// Throws Error when the universe has fewer than two mentions.
BlancCounts BlancPairCounts(const ClusterPartition &key,
                            const ClusterPartition &response);
ScoreTriple Blanc(const ClusterPartition &key,
                  const ClusterPartition &response);

using RelationSet = std::set<RelationInstance>;

struct RelationFilter {
  std::set<std::string> types;  // empty: every type
  std::function<bool(const RelationInstance &)> accept;  // optional

  bool operator()(const RelationInstance &r) const;
};

// Exact (type, head, tail) matches over the filtered instances.
Counts MicroCounts(const RelationSet &gold, const RelationSet &pred,
                   const RelationFilter &filter = {});
ScoreTriple MicroPRF(const RelationSet &gold, const RelationSet &pred,
                     const RelationFilter &filter = {});

}  // namespace metrics
}  // namespace maq

#endif  // MAQ_METRICS_H_
