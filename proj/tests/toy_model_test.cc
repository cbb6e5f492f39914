#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "maq/errors.h"
#include "maq/toy_model.h"

namespace maq {
namespace {

using toy::OrderPolicy;

std::vector<samples::MAQSample> SmallDataset(int n, std::uint64_t seed = 0) {
  toy::GeneratorConfig g;
  g.samples = n;
  g.seed = seed;
  return toy::GenerateSamples(g);
}

TEST_CASE("generator") {
  auto data = SmallDataset(100);
  REQUIRE(data.size() == 100);
  for (const auto &s : data) {
    CHECK(s.gold_answers.size() >= 2);
    CHECK(s.gold_answers.size() <= 5);
    CHECK(s.query_relation == "cause");
  }
  CHECK(toy::GenerateSamples({}) == toy::GenerateSamples({}));
  toy::GeneratorConfig other;
  other.seed = 1;
  CHECK(toy::GenerateSamples({}) != toy::GenerateSamples(other));
  CHECK(toy::GeneratorSchema().k() == 1);
}

TEST_CASE("vocabulary") {
  auto data = SmallDataset(20);
  toy::Vocab v = toy::Vocab::Build(data);
  CHECK(v.Id(toy::kPadToken) == 0);
  CHECK(v.Contains("none"));
  CHECK(v.Contains("<0x64>"));
  CHECK_THROWS_AS(v.Id("never-seen"), VocabularyError);
  const int fresh = v.Add("fresh");
  CHECK(fresh == v.size() - 1);
  CHECK(v.Id("fresh") == fresh);
  CHECK(v.Add("fresh") == fresh);

  toy::ToyModel model(toy::Vocab{});
  CHECK_THROWS_AS(model.Encode(data[0]), VocabularyError);
}

TEST_CASE("zero weights give uniform distributions") {
  auto data = SmallDataset(5);
  toy::ToyModel model(toy::Vocab::Build(data));
  CHECK(model.feature_count() == 0);
  loss::SlotDistribution d = toy::Forward(model, data[0]);
  CHECK(d.positions() == model.shape().positions());
  for (const auto &row : d.probs) {
    for (double p : row) CHECK(p == doctest::Approx(1.0 / model.vocab().size()));
  }
}

TEST_CASE("answer orders are permutations") {
  auto data = SmallDataset(30);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t m = data[i].gold_answers.size();
    std::vector<int> identity(m);
    std::iota(identity.begin(), identity.end(), 0);
    for (OrderPolicy p : toy::kAllPolicies) {
      std::vector<int> order = toy::AnswerOrder(data[i], p, 0, i);
      std::vector<int> sorted = order;
      std::sort(sorted.begin(), sorted.end());
      CHECK(sorted == identity);
      CHECK(order == toy::AnswerOrder(data[i], p, 0, i));
    }
    CHECK(toy::AnswerOrder(data[i], OrderPolicy::kSequence, 0, i) == identity);
    std::vector<int> reversed(identity.rbegin(), identity.rend());
    CHECK(toy::AnswerOrder(data[i], OrderPolicy::kReverse, 0, i) == reversed);
  }
  for (OrderPolicy p : toy::kAllPolicies) {
    CHECK(toy::ParseOrderPolicy(toy::OrderPolicyName(p)) == p);
  }
  CHECK_THROWS_AS(toy::ParseOrderPolicy("alphabetical"), Error);
}

TEST_CASE("exact set match ignores order") {
  auto data = SmallDataset(10);
  const samples::MAQSample &s = data[0];
  CHECK(toy::ExactSetMatch(s.label, s));
  {
    std::string reversed = " : ";
    std::vector<std::string> parts;
    std::string answers = s.label.substr(s.label.find(':') + 2);
    std::size_t start = 0;
    while (true) {
      std::size_t comma = answers.find(", ", start);
      parts.push_back(answers.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 2;
    }
    std::reverse(parts.begin(), parts.end());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      reversed += (i ? ", " : "") + parts[i];
    }
    CHECK(toy::ExactSetMatch(reversed, s));
    parts.pop_back();
    CHECK_FALSE(toy::ExactSetMatch(" : " + parts[0], s));
  }
  CHECK_FALSE(toy::ExactSetMatch(" : none", s));
}

TEST_CASE("training memorizes a small set") {
  auto data = SmallDataset(40);
  toy::TrainConfig cfg;
  cfg.holdout = 0;
  cfg.epochs = 30;
  toy::TrainResult r = toy::Train(data, cfg, true);
  CHECK(r.eval_indices == r.train_indices);
  CHECK(toy::ExactSetMatchRate(r.model, data, r.train_indices) > 0.9);
  REQUIRE(r.history.size() == 30);
  for (int e = 1; e < 5; ++e) CHECK(r.history[e].loss < r.history[e - 1].loss);
}

TEST_CASE("training is deterministic") {
  auto data = SmallDataset(60);
  toy::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.answer_order_policy = OrderPolicy::kRandom;
  toy::TrainResult a = toy::Train(data, cfg, true);
  toy::TrainResult b = toy::Train(data, cfg, true);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.history[i].exact_set_match == b.history[i].exact_set_match);
  }
  CHECK(a.train_indices == b.train_indices);
  CHECK(a.eval_indices == b.eval_indices);
  CHECK(a.eval_indices.size() == 12);
}

TEST_CASE("zero lambda matches cross entropy only") {
  auto data = SmallDataset(30);
  toy::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.lambda = 0;
  toy::TrainResult with = toy::Train(data, cfg, true);
  toy::TrainResult without = toy::Train(data, cfg, false);
  for (std::size_t i = 0; i < with.history.size(); ++i) {
    CHECK(with.history[i].loss == without.history[i].loss);
  }
}

TEST_CASE("bad training input") {
  std::vector<samples::MAQSample> empty;
  CHECK_THROWS_AS(toy::Train(empty, {}, true), Error);

  auto data = SmallDataset(5);
  data[0].label = "chain : " + data[0].label.substr(data[0].label.find(':') + 2);
  toy::ToyModel model(toy::Vocab::Build(data));
  std::vector<int> order(data[0].gold_answers.size());
  std::iota(order.begin(), order.end(), 0);
  CHECK_THROWS_AS(toy::TargetSequence(model, data[0], order), Error);

  toy::TrainConfig wild;
  wild.learning_rate = 1e308;
  wild.epochs = 3;
  CHECK_THROWS_AS(toy::Train(SmallDataset(10), wild, true), DivergenceError);
}

TEST_CASE("experiment rows") {
  auto data = SmallDataset(40);
  toy::TrainConfig cfg;
  cfg.epochs = 2;
  auto rows = toy::OrderExperiment(data, cfg);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0].loss == "ce");
  CHECK(rows[0].order == "sequence");
  CHECK(rows[5].loss == "ce+bpm");
  CHECK(rows[9].order == "dict");
  for (const auto &row : rows) {
    CHECK(row.exact_set_match >= 0.0);
    CHECK(row.exact_set_match <= 1.0);
  }
  CHECK(toy::RowToRecord(rows[0]).find("\"loss\":\"ce\"") != std::string::npos);
}

}  // namespace
}  // namespace maq
