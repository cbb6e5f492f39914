#include "maq/metrics.h"

#include <algorithm>
#include <map>

#include "maq/errors.h"

namespace maq {
namespace metrics {

ClusterPartition ClusterPartition::FromClusters(
    std::vector<std::vector<std::string>> clusters) {
  ClusterPartition p;
  for (const auto &c : clusters) {
    p.universe.insert(p.universe.end(), c.begin(), c.end());
  }
  p.clusters = std::move(clusters);
  return p;
}

std::vector<std::string> ClusterPartition::Problems() const {
  std::vector<std::string> problems;
  std::set<std::string> in_universe(universe.begin(), universe.end());
  if (in_universe.size() != universe.size()) {
    problems.push_back("universe lists a mention twice");
  }
  std::set<std::string> covered;
  for (const auto &c : clusters) {
    if (c.empty()) problems.push_back("empty cluster");
    for (const std::string &m : c) {
      if (!covered.insert(m).second) {
        problems.push_back("mention '" + m + "' in two clusters");
      }
      if (in_universe.count(m) == 0) {
        problems.push_back("mention '" + m + "' outside the universe");
      }
    }
  }
  if (covered.size() != in_universe.size()) {
    problems.push_back("clusters do not cover the universe");
  }
  return problems;
}

ScoreTriple ScoreTriple::FromPR(double precision, double recall) {
  double f1 = precision + recall > 0.0
                  ? 2.0 * precision * recall / (precision + recall)
                  : 0.0;
  return {precision, recall, f1};
}

Counts &Counts::operator+=(const Counts &o) {
  p_num += o.p_num;
  p_den += o.p_den;
  r_num += o.r_num;
  r_den += o.r_den;
  return *this;
}

ScoreTriple Counts::Score() const {
  return ScoreTriple::FromPR(p_den > 0.0 ? p_num / p_den : 0.0,
                             r_den > 0.0 ? r_num / r_den : 0.0);
}

namespace {

// Cluster index of every mention.
std::map<std::string, int> ClusterIndex(const ClusterPartition &p) {
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < p.clusters.size(); ++c) {
    for (const std::string &m : p.clusters[c]) index[m] = static_cast<int>(c);
  }
  return index;
}

void CheckPair(const ClusterPartition &key, const ClusterPartition &response) {
  for (const ClusterPartition *p : {&key, &response}) {
    std::vector<std::string> problems = p->Problems();
    if (!problems.empty()) {
      throw UniverseMismatch("invalid partition: " + problems.front());
    }
  }
  std::vector<std::string> a = key.universe, b = response.universe;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) throw UniverseMismatch("key and response mention sets differ");
}

// Sum over clusters of |c| - (number of parts `other` splits c into).
std::pair<double, double> MucSide(const ClusterPartition &side,
                                  const std::map<std::string, int> &other) {
  double num = 0.0, den = 0.0;
  for (const auto &c : side.clusters) {
    std::set<int> parts;
    for (const std::string &m : c) parts.insert(other.at(m));
    num += static_cast<double>(c.size()) - static_cast<double>(parts.size());
    den += static_cast<double>(c.size()) - 1.0;
  }
  return {num, den};
}

double Overlap(const std::vector<std::string> &a,
               const std::vector<std::string> &b) {
  std::set<std::string> sa(a.begin(), a.end());
  double n = 0.0;
  for (const std::string &m : b) n += sa.count(m);
  return n;
}

}  // namespace

Counts MucCounts(const ClusterPartition &key, const ClusterPartition &response) {
  CheckPair(key, response);
  auto [r_num, r_den] = MucSide(key, ClusterIndex(response));
  auto [p_num, p_den] = MucSide(response, ClusterIndex(key));
  return {p_num, p_den, r_num, r_den};
}

Counts BCubedCounts(const ClusterPartition &key,
                    const ClusterPartition &response) {
  CheckPair(key, response);
  std::map<std::string, int> key_of = ClusterIndex(key);
  std::map<std::string, int> resp_of = ClusterIndex(response);
  Counts counts;
  for (const std::string &m : key.universe) {
    const auto &k = key.clusters[key_of.at(m)];
    const auto &r = response.clusters[resp_of.at(m)];
    double common = Overlap(k, r);
    counts.p_num += common / static_cast<double>(r.size());
    counts.r_num += common / static_cast<double>(k.size());
  }
  counts.p_den = counts.r_den = static_cast<double>(key.universe.size());
  return counts;
}

double Phi4(const std::vector<std::string> &key_cluster,
            const std::vector<std::string> &response_cluster) {
  return 2.0 * Overlap(key_cluster, response_cluster) /
         static_cast<double>(key_cluster.size() + response_cluster.size());
}

assignment::Assignment CeafeAlignment(const ClusterPartition &key,
                                      const ClusterPartition &response) {
  CheckPair(key, response);
  const int rows = static_cast<int>(key.clusters.size());
  const int cols = static_cast<int>(response.clusters.size());
  std::vector<double> cost(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      cost[i * cols + j] = -Phi4(key.clusters[i], response.clusters[j]);
    }
  }
  return assignment::Solve(assignment::CostMatrix(rows, cols, std::move(cost)));
}

Counts CeafeCounts(const ClusterPartition &key,
                   const ClusterPartition &response) {
  if (key.clusters.empty() && response.clusters.empty()) return {};
  assignment::Assignment align = CeafeAlignment(key, response);
  double similarity = 0.0;
  for (std::size_t i = 0; i < align.mapping.size(); ++i) {
    if (align.mapping[i] < 0) continue;
    similarity += Phi4(key.clusters[i], response.clusters[align.mapping[i]]);
  }
  return {similarity, static_cast<double>(response.clusters.size()),
          similarity, static_cast<double>(key.clusters.size())};
}

ScoreTriple Muc(const ClusterPartition &key, const ClusterPartition &response) {
  return MucCounts(key, response).Score();
}

ScoreTriple BCubed(const ClusterPartition &key,
                   const ClusterPartition &response) {
  return BCubedCounts(key, response).Score();
}

ScoreTriple Ceafe(const ClusterPartition &key,
                  const ClusterPartition &response) {
  return CeafeCounts(key, response).Score();
}

BlancCounts &BlancCounts::operator+=(const BlancCounts &o) {
  coref += o.coref;
  non_coref += o.non_coref;
  return *this;
}

ScoreTriple BlancCounts::Score() const {
  // p_den / r_den hold the response / key link counts of each half.
  bool no_coref = coref.p_den == 0.0 && coref.r_den == 0.0;
  bool no_non_coref = non_coref.p_den == 0.0 && non_coref.r_den == 0.0;
  ScoreTriple c = coref.Score();
  ScoreTriple n = non_coref.Score();
  if (no_coref && !no_non_coref) return n;
  if (no_non_coref && !no_coref) return c;
  return {(c.precision + n.precision) / 2.0, (c.recall + n.recall) / 2.0,
          (c.f1 + n.f1) / 2.0};
}

BlancCounts BlancPairCounts(const ClusterPartition &key,
                            const ClusterPartition &response) {
  CheckPair(key, response);
  if (key.universe.size() < 2) {
    throw Error("BLANC needs at least two mentions");
  }
  std::map<std::string, int> key_of = ClusterIndex(key);
  std::map<std::string, int> resp_of = ClusterIndex(response);
  const std::vector<std::string> &u = key.universe;
  BlancCounts counts;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = i + 1; j < u.size(); ++j) {
      bool in_key = key_of.at(u[i]) == key_of.at(u[j]);
      bool in_resp = resp_of.at(u[i]) == resp_of.at(u[j]);
      if (in_key) counts.coref.r_den += 1;
      if (in_resp) counts.coref.p_den += 1;
      if (in_key && in_resp) {
        counts.coref.p_num += 1;
        counts.coref.r_num += 1;
      }
      if (!in_key) counts.non_coref.r_den += 1;
      if (!in_resp) counts.non_coref.p_den += 1;
      if (!in_key && !in_resp) {
        counts.non_coref.p_num += 1;
        counts.non_coref.r_num += 1;
      }
    }
  }
  return counts;
}

ScoreTriple Blanc(const ClusterPartition &key,
                  const ClusterPartition &response) {
  return BlancPairCounts(key, response).Score();
}

bool RelationFilter::operator()(const RelationInstance &r) const {
  if (!types.empty() && types.count(r.rel_type) == 0) return false;
  return !accept || accept(r);
}

Counts MicroCounts(const RelationSet &gold, const RelationSet &pred,
                   const RelationFilter &filter) {
  Counts counts;
  for (const RelationInstance &r : pred) {
    if (!filter(r)) continue;
    counts.p_den += 1;
    if (gold.count(r)) {
      counts.p_num += 1;
      counts.r_num += 1;
    }
  }
  for (const RelationInstance &r : gold) {
    if (filter(r)) counts.r_den += 1;
  }
  return counts;
}

ScoreTriple MicroPRF(const RelationSet &gold, const RelationSet &pred,
                     const RelationFilter &filter) {
  return MicroCounts(gold, pred, filter).Score();
}

}  // namespace metrics
}  // namespace maq
