#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "maq/cli.h"
#include "test_util.h"

namespace maq {
namespace {

using nlohmann::json;
using testing::Fixture;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Run(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<json> Records(const std::string &text) {
  std::vector<json> recs;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) recs.push_back(json::parse(line));
  }
  return recs;
}

std::string ReadFile(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path TempPath(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / "maq_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST_CASE("build-samples") {
  Result r = Run({"build-samples", "--input", Fixture("corpus.jsonl")});
  REQUIRE(r.code == cli::kExitOk);
  std::vector<json> recs = Records(r.out);
  REQUIRE(recs.size() == 5);
  CHECK(recs[0].at("doc_id") == "d1");
  CHECK(recs[0].at("label").get<std::string>().find("<0x65> ruling") !=
        std::string::npos);
  CHECK(json::parse(r.err).at("samples") == 5);

  Result numbered = Run({"build-samples", "--input", Fixture("corpus.jsonl"),
                         "--scheme", "numbered", "--no-chain"});
  REQUIRE(numbered.code == 0);
  CHECK(numbered.out.find("<No64> ruled") != std::string::npos);
  CHECK(Records(numbered.out)[0].at("label").get<std::string>().rfind(" : ", 0) == 0);

  Result causal = Run({"build-samples", "--input", Fixture("corpus.jsonl"),
                       "--schema", Fixture("causal_schema.json"), "--jobs", "3"});
  REQUIRE(causal.code == 0);
  CHECK(Records(causal.out).size() == 15);
  Result serial = Run({"build-samples", "--input", Fixture("corpus.jsonl"),
                       "--schema", Fixture("causal_schema.json"), "--jobs", "1"});
  CHECK(serial.out == causal.out);

  Result tmpl = Run({"build-samples", "--input", Fixture("corpus.jsonl"),
                     "--template", "pairwise"});
  CHECK(tmpl.code == 0);
  CHECK(tmpl.out.find("What's the event relation") != std::string::npos);
  CHECK(Run({"build-samples", "--input", Fixture("corpus.jsonl"), "--template",
             "{bogus}"}).code == cli::kExitInputError);
}

TEST_CASE("build-samples input errors") {
  CHECK(Run({"build-samples", "--input", Fixture("corpus.jsonl"), "--schema",
             Fixture("no_such_schema.json")}).code == cli::kExitInputError);
  Result bad = Run({"build-samples", "--input", Fixture("missing_mention.jsonl")});
  CHECK(bad.code == cli::kExitInputError);
  CHECK(bad.err.find("bad1") != std::string::npos);
  CHECK(Run({"build-samples"}).code == cli::kExitInputError);
  CHECK(Run({"build-samples", "--input", Fixture("corpus.jsonl"), "--frobnicate"})
            .code == cli::kExitInputError);
  CHECK(Run({"no-such-command"}).code == cli::kExitInputError);
}

TEST_CASE("grad-check") {
  Result r = Run({"grad-check"});
  REQUIRE(r.code == cli::kExitOk);
  json rec = json::parse(r.out);
  CHECK(rec.at("pass") == true);
  CHECK(rec.at("trials") == 100);
  CHECK(rec.at("max_rel_error").get<double>() <= 1e-4);
  CHECK(rec.at("vacuous") == false);

  Result zero = Run({"grad-check", "--trials", "0"});
  CHECK(zero.code == cli::kExitOk);
  CHECK(json::parse(zero.out).at("vacuous") == true);

  Result tampered = Run({"grad-check", "--trials", "5", "--tamper"});
  CHECK(tampered.code == cli::kExitCheckFailed);
  json fail = json::parse(tampered.out);
  CHECK(fail.at("pass") == false);
  CHECK(fail.contains("instance"));
}

TEST_CASE("evaluate") {
  Result muc = Run({"evaluate", "--gold", Fixture("muc_gold.jsonl"), "--pred",
                    Fixture("muc_pred.jsonl"), "--task", "coreference"});
  REQUIRE(muc.code == cli::kExitOk);
  std::vector<json> recs = Records(muc.out);
  REQUIRE(recs.size() == 4);
  CHECK(recs[0].at("metric") == "muc");
  CHECK(recs[0].at("f1").get<double>() == doctest::Approx(2.0 / 3));
  CHECK(recs[3].at("metric") == "blanc");

  Result sub = Run({"evaluate", "--gold", Fixture("subevent_gold.jsonl"), "--pred",
                    Fixture("subevent_pred.jsonl"), "--task", "subevent"});
  REQUIRE(sub.code == cli::kExitOk);
  recs = Records(sub.out);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].at("metric") == "micro");
  CHECK(recs[0].at("f1").get<double>() == doctest::Approx(0.5));
  CHECK(recs[1].at("metric") == "pc");
  CHECK(recs[1].at("recall").get<double>() == doctest::Approx(1.0));
  CHECK(recs[2].at("metric") == "cp");
  CHECK(recs[2].at("f1").get<double>() == 0.0);

  CHECK(Run({"evaluate", "--gold", Fixture("muc_gold.jsonl"), "--pred",
             Fixture("unknown_doc_pred.jsonl"), "--task", "coreference"})
            .code == cli::kExitInputError);
  CHECK(Run({"evaluate", "--gold", Fixture("muc_gold.jsonl"), "--pred",
             Fixture("muc_pred.jsonl"), "--task", "astrology"})
            .code == cli::kExitInputError);
}

TEST_CASE("evaluate identity on gold-derived predictions") {
  auto pred = TempPath("identity_pred.jsonl");
  {
    std::ofstream out(pred);
    out << R"({"doc_id": "k1", "relations": [{"type": "coreference", "head": "a", "tail": "b"}, {"type": "coreference", "head": "c", "tail": "b"}]})"
        << "\n";
  }
  Result r = Run({"evaluate", "--gold", Fixture("muc_gold.jsonl"), "--pred",
                  pred.string(), "--task", "coreference"});
  REQUIRE(r.code == cli::kExitOk);
  for (const json &rec : Records(r.out)) CHECK(rec.at("f1") == 1.0);
}

TEST_CASE("analyze-cost") {
  Result r = Run({"analyze-cost", "--input", Fixture("corpus.jsonl")});
  REQUIRE(r.code == cli::kExitOk);
  json rec = json::parse(r.out);
  CHECK(rec.at("docs") == 2);
  CHECK(rec.at("mentions") == 5);
  CHECK(rec.at("pairwise_queries") == 4);
  CHECK(rec.at("maq_queries") == 5);

  Result k2 = Run({"analyze-cost", "--input", Fixture("corpus.jsonl"), "--k", "2",
                   "--pairing", "ordered", "--pairwise-latency", "1",
                   "--maq-latency", "2"});
  REQUIRE(k2.code == cli::kExitOk);
  rec = json::parse(k2.out);
  CHECK(rec.at("pairwise_queries") == 8);
  CHECK(rec.at("maq_queries") == 10);
  CHECK(rec.at("latency_ratio").get<double>() == doctest::Approx(0.4));

  Result ref = Run({"analyze-cost", "--reference"});
  CHECK(ref.code == cli::kExitOk);
  CHECK(ref.out.find("631486") != std::string::npos);

  CHECK(Run({"analyze-cost", "--input", Fixture("corpus.jsonl"), "--pairing",
             "sideways"}).code == cli::kExitInputError);
}

TEST_CASE("order-experiment") {
  auto a = TempPath("exp_a.jsonl");
  auto b = TempPath("exp_b.jsonl");
  std::vector<std::string> base{"order-experiment", "--seed", "3", "--samples",
                                "60", "--epochs", "2", "--out"};
  auto args_a = base, args_b = base;
  args_a.push_back(a.string());
  args_b.push_back(b.string());
  REQUIRE(Run(args_a).code == cli::kExitOk);
  REQUIRE(Run(args_b).code == cli::kExitOk);
  std::string text = ReadFile(a);
  CHECK(Records(text).size() == 10);
  CHECK(text == ReadFile(b));
}

TEST_CASE("reruns are byte identical") {
  const std::vector<std::vector<std::string>> commands{
      {"build-samples", "--input", Fixture("corpus.jsonl"), "--jobs", "4"},
      {"grad-check", "--trials", "10", "--seed", "4"},
      {"evaluate", "--gold", Fixture("muc_gold.jsonl"), "--pred",
       Fixture("muc_pred.jsonl"), "--task", "coreference"},
      {"analyze-cost", "--input", Fixture("corpus.jsonl")},
  };
  for (const auto &cmd : commands) {
    Result first = Run(cmd);
    Result second = Run(cmd);
    CHECK(first.code == second.code);
    CHECK(first.out == second.out);
  }
}

}  // namespace
}  // namespace maq
