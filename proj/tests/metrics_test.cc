#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "maq/errors.h"
#include "maq/metrics.h"
#include "test_util.h"

namespace maq {
namespace {

using metrics::ClusterPartition;
using metrics::ScoreTriple;

ClusterPartition P(std::vector<std::vector<std::string>> clusters) {
  return ClusterPartition::FromClusters(std::move(clusters));
}

ClusterPartition RandomPartition(testing::Rng &rng, int n, int max_clusters) {
  std::vector<std::vector<std::string>> clusters(rng.Int(1, max_clusters));
  for (int i = 0; i < n; ++i) {
    clusters[rng.Int(0, static_cast<int>(clusters.size()) - 1)].push_back(
        "m" + std::to_string(i));
  }
  std::erase_if(clusters, [](const auto &c) { return c.empty(); });
  return P(clusters);
}

ClusterPartition Singletons(int n) {
  std::vector<std::vector<std::string>> clusters;
  for (int i = 0; i < n; ++i) clusters.push_back({"m" + std::to_string(i)});
  return P(clusters);
}

std::size_t Overlap(const std::vector<std::string> &a,
                    const std::vector<std::string> &b) {
  std::size_t n = 0;
  for (const std::string &x : a) n += std::count(b.begin(), b.end(), x);
  return n;
}

const std::vector<std::string> &ClusterOf(const ClusterPartition &p,
                                          const std::string &m) {
  for (const auto &c : p.clusters) {
    if (std::find(c.begin(), c.end(), m) != c.end()) return c;
  }
  throw std::logic_error("mention not found");
}

// Per-mention averages straight from the definition.
std::pair<double, double> BCubedOracle(const ClusterPartition &key,
                                       const ClusterPartition &response) {
  double p = 0, r = 0;
  for (const std::string &m : key.universe) {
    const auto &k = ClusterOf(key, m);
    const auto &s = ClusterOf(response, m);
    double both = static_cast<double>(Overlap(k, s));
    p += both / s.size();
    r += both / k.size();
  }
  return {p / key.universe.size(), r / key.universe.size()};
}

// Best phi4 total over every injective key -> response mapping.
double CeafeOracle(const ClusterPartition &key,
                   const ClusterPartition &response) {
  const auto *small = &key, *large = &response;
  if (small->clusters.size() > large->clusters.size()) std::swap(small, large);
  std::vector<int> cols(large->clusters.size());
  std::iota(cols.begin(), cols.end(), 0);
  double best = 0;
  do {
    double total = 0;
    for (std::size_t i = 0; i < small->clusters.size(); ++i) {
      total += metrics::Phi4(small->clusters[i], large->clusters[cols[i]]);
    }
    best = std::max(best, total);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

TEST_CASE("hand fixtures") {
  ClusterPartition key = P({{"a", "b", "c"}});
  ClusterPartition response = P({{"a", "b"}, {"c"}});

  ScoreTriple muc = metrics::Muc(key, response);
  CHECK(muc.recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(muc.precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(muc.f1 - 2.0 / 3) <= 1e-9);

  ScoreTriple b3 = metrics::BCubed(key, response);
  CHECK(std::abs(b3.precision - 1.0) <= 1e-9);
  CHECK(std::abs(b3.recall - 5.0 / 9) <= 1e-9);
  ScoreTriple b3_swapped = metrics::BCubed(response, key);
  CHECK(b3_swapped.precision == b3.recall);
  CHECK(b3_swapped.recall == b3.precision);

  ScoreTriple ceaf = metrics::Ceafe(P({{"a", "b", "c"}, {"d"}}),
                                    P({{"a", "b"}, {"c", "d"}}));
  double expected = (0.8 + 2.0 / 3) / 2;
  CHECK(std::abs(ceaf.precision - expected) <= 1e-9);
  CHECK(std::abs(ceaf.recall - expected) <= 1e-9);
  CHECK(std::abs(ceaf.f1 - expected) <= 1e-9);

  ScoreTriple blanc = metrics::Blanc(P({{"a", "b"}, {"c"}}),
                                     P({{"a"}, {"b"}, {"c"}}));
  CHECK(std::abs(blanc.f1 - 0.4) <= 1e-9);
}

TEST_CASE("degenerate partitions") {
  ScoreTriple muc = metrics::Muc(Singletons(4), Singletons(4));
  CHECK(muc.precision == 0.0);
  CHECK(muc.recall == 0.0);
  CHECK(muc.f1 == 0.0);

  ScoreTriple one = metrics::Ceafe(P({{"x"}}), P({{"x"}}));
  CHECK(one.f1 == 1.0);

  CHECK_THROWS_AS(metrics::BlancPairCounts(P({{"x"}}), P({{"x"}})), Error);

  // Every pair linked against an all-singleton key: no predicted non-links.
  metrics::BlancCounts c = metrics::BlancPairCounts(Singletons(3),
                                                    P({{"m0", "m1", "m2"}}));
  CHECK(c.non_coref.Score().precision == 0.0);
  CHECK(c.non_coref.Score().recall == 0.0);
}

TEST_CASE("identity scores one") {
  testing::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    ClusterPartition p = RandomPartition(rng, rng.Int(2, 12), 6);
    bool has_link = std::any_of(p.clusters.begin(), p.clusters.end(),
                                [](const auto &c) { return c.size() > 1; });
    for (ScoreTriple s : {metrics::BCubed(p, p), metrics::Ceafe(p, p),
                          metrics::Blanc(p, p)}) {
      CHECK(s.precision == doctest::Approx(1.0));
      CHECK(s.recall == doctest::Approx(1.0));
      CHECK(s.f1 == doctest::Approx(1.0));
    }
    if (has_link) CHECK(metrics::Muc(p, p).f1 == doctest::Approx(1.0));
  }
}

TEST_CASE("random partitions against definitions") {
  testing::Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.Int(2, 10);
    ClusterPartition key = RandomPartition(rng, n, 7);
    ClusterPartition response = RandomPartition(rng, n, 7);

    auto [p, r] = BCubedOracle(key, response);
    ScoreTriple b3 = metrics::BCubed(key, response);
    CHECK(b3.precision == doctest::Approx(p).epsilon(1e-12));
    CHECK(b3.recall == doctest::Approx(r).epsilon(1e-12));

    ScoreTriple muc = metrics::Muc(key, response);
    ScoreTriple muc_swapped = metrics::Muc(response, key);
    CHECK(muc.precision == muc_swapped.recall);
    CHECK(muc.recall == muc_swapped.precision);

    double best = CeafeOracle(key, response);
    ScoreTriple ceaf = metrics::Ceafe(key, response);
    CHECK(ceaf.precision * response.clusters.size() ==
          doctest::Approx(best).epsilon(1e-12));
    CHECK(ceaf.recall * key.clusters.size() ==
          doctest::Approx(best).epsilon(1e-12));

    assignment::Assignment a = metrics::CeafeAlignment(key, response);
    double aligned = 0;
    for (std::size_t i = 0; i < a.mapping.size(); ++i) {
      if (a.mapping[i] >= 0) {
        aligned += metrics::Phi4(key.clusters[i], response.clusters[a.mapping[i]]);
      }
    }
    CHECK(aligned == doctest::Approx(best).epsilon(1e-12));

    for (ScoreTriple s : {muc, b3, ceaf, metrics::Blanc(key, response)}) {
      CHECK(s.precision >= 0.0);
      CHECK(s.precision <= 1.0 + 1e-12);
      CHECK(s.recall >= 0.0);
      CHECK(s.recall <= 1.0 + 1e-12);
      CHECK(s.f1 >= 0.0);
      CHECK(s.f1 <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("blanc matches pair enumeration") {
  testing::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.Int(2, 9);
    ClusterPartition key = RandomPartition(rng, n, 4);
    ClusterPartition response = RandomPartition(rng, n, 4);
    double ck = 0, cr = 0, cb = 0, nk = 0, nr = 0, nb = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        std::string a = "m" + std::to_string(i), b = "m" + std::to_string(j);
        const auto &ka = ClusterOf(key, a);
        const auto &ra = ClusterOf(response, a);
        bool in_key = std::find(ka.begin(), ka.end(), b) != ka.end();
        bool in_resp = std::find(ra.begin(), ra.end(), b) != ra.end();
        ck += in_key;
        cr += in_resp;
        cb += in_key && in_resp;
        nk += !in_key;
        nr += !in_resp;
        nb += !in_key && !in_resp;
      }
    }
    metrics::BlancCounts c = metrics::BlancPairCounts(key, response);
    CHECK(c.coref.r_num == cb);
    CHECK(c.coref.r_den == ck);
    CHECK(c.coref.p_den == cr);
    CHECK(c.non_coref.r_num == nb);
    CHECK(c.non_coref.r_den == nk);
    CHECK(c.non_coref.p_den == nr);
  }
}

TEST_CASE("universe mismatch") {
  ClusterPartition key = P({{"a", "b"}});
  ClusterPartition other = P({{"a"}, {"c"}});
  CHECK_THROWS_AS(metrics::Muc(key, other), UniverseMismatch);
  CHECK_THROWS_AS(metrics::BCubed(key, other), UniverseMismatch);
  CHECK_THROWS_AS(metrics::Ceafe(key, other), UniverseMismatch);
  CHECK_THROWS_AS(metrics::Blanc(key, other), UniverseMismatch);

  ClusterPartition overlapping = P({{"a", "b"}, {"b"}});
  CHECK_FALSE(overlapping.Problems().empty());
  CHECK_THROWS_AS(metrics::Muc(overlapping, overlapping), UniverseMismatch);
}

TEST_CASE("micro precision recall") {
  metrics::RelationSet gold{{"cause", "a", "b"},
                            {"cause", "b", "c"},
                            {"cause", "c", "d"},
                            {"cause", "d", "e"}};
  metrics::RelationSet pred{{"cause", "a", "b"}, {"cause", "b", "c"},
                            {"cause", "c", "d"}, {"cause", "b", "a"},
                            {"cause", "e", "a"}};
  ScoreTriple s = metrics::MicroPRF(gold, pred);
  CHECK(s.precision == doctest::Approx(0.6));
  CHECK(s.recall == doctest::Approx(0.75));
  CHECK(s.f1 == doctest::Approx(2.0 / 3));

  ScoreTriple empty = metrics::MicroPRF(gold, {});
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);
  CHECK(metrics::MicroPRF(gold, gold).f1 == 1.0);

  metrics::RelationFilter only_sub;
  only_sub.types = {"subevent"};
  metrics::RelationSet mixed = gold;
  mixed.insert({"subevent", "a", "c"});
  CHECK(metrics::MicroPRF(mixed, {{"subevent", "a", "c"}}, only_sub).f1 == 1.0);

  metrics::RelationFilter from_a;
  from_a.accept = [](const RelationInstance &r) { return r.head == "a"; };
  CHECK(metrics::MicroCounts(gold, pred, from_a).r_den == 1);
}

TEST_CASE("micro scores are monotone") {
  testing::Rng rng(8);
  auto random_rel = [&rng] {
    return RelationInstance{"r" + std::to_string(rng.Int(0, 1)),
                            "m" + std::to_string(rng.Int(0, 5)),
                            "m" + std::to_string(rng.Int(0, 5))};
  };
  for (int trial = 0; trial < 100; ++trial) {
    metrics::RelationSet gold, pred;
    for (int i = rng.Int(1, 10); i > 0; --i) gold.insert(random_rel());
    for (int i = rng.Int(0, 10); i > 0; --i) pred.insert(random_rel());
    ScoreTriple before = metrics::MicroPRF(gold, pred);
    RelationInstance extra = random_rel();
    if (pred.count(extra)) continue;
    metrics::RelationSet more = pred;
    more.insert(extra);
    ScoreTriple after = metrics::MicroPRF(gold, more);
    if (gold.count(extra)) {
      CHECK(after.precision >= before.precision - 1e-12);
      CHECK(after.recall >= before.recall - 1e-12);
      CHECK(after.f1 >= before.f1 - 1e-12);
    } else {
      CHECK(after.precision <= before.precision + 1e-12);
    }
  }
}

TEST_CASE("counts pool additively") {
  metrics::Counts a{1, 2, 3, 4};
  metrics::Counts b{1, 2, 1, 4};
  a += b;
  CHECK(a.Score().precision == 0.5);
  CHECK(a.Score().recall == 0.5);
  CHECK(metrics::Counts{}.Score().f1 == 0.0);
  CHECK(ScoreTriple::FromPR(0, 0).f1 == 0.0);
}

}  // namespace
}  // namespace maq
