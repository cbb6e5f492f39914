#include "maq/cli.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "maq/analysis.h"
#include "maq/corpus.h"
#include "maq/decoder.h"
#include "maq/dpc.h"
#include "maq/errors.h"
#include "maq/loss.h"
#include "maq/metrics.h"
#include "maq/sample_builder.h"
#include "maq/toy_model.h"

namespace maq {
namespace cli {

namespace {

using nlohmann::json;

// Writes to the --out file when one is given, else to the fallback stream.
class Sink {
 public:
  Sink(const std::string &path, std::ostream &fallback) : out_(&fallback) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw Error("cannot write '" + path + "'");
    out_ = &file_;
  }
  std::ostream &stream() { return *out_; }
  bool to_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
  std::ostream *out_;
};

std::vector<Document> SortedCorpus(const std::string &path) {
  std::vector<Document> docs = corpus::LoadCorpus(path);
  std::sort(docs.begin(), docs.end(),
            [](const Document &a, const Document &b) {
              return a.doc_id < b.doc_id;
            });
  return docs;
}

std::string JoinProblems(const std::vector<std::string> &problems) {
  std::string out;
  for (const std::string &p : problems) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

// ---------------------------------------------------------------- build

struct BuildFlags {
  std::string input;
  std::string schema;
  std::string scheme = "byte_token";
  std::string suffix;
  std::string tmpl = "default";
  std::string out;
  bool marker_only = false;
  bool no_chain = false;
  int jobs = 1;
};

int BuildSamplesCommand(const BuildFlags &flags, std::ostream &out,
                        std::ostream &err) {
  RelationSchema schema = flags.schema.empty()
                              ? RelationSchema::Coreference()
                              : corpus::LoadSchema(flags.schema);
  samples::SampleOptions options;
  options.scheme = samples::MarkerScheme::FromName(flags.scheme);
  if (!flags.suffix.empty()) options.scheme.suffix = flags.suffix;
  options.marker_only = flags.marker_only;
  if (auto preset = samples::TemplatePreset(flags.tmpl)) {
    options.instruction_template = std::string(*preset);
  } else if (flags.tmpl.find('{') != std::string::npos) {
    options.instruction_template = flags.tmpl;
  } else {
    throw TemplateError("unknown template preset '" + flags.tmpl + "'");
  }

  std::vector<Document> docs = SortedCorpus(flags.input);
  for (const Document &doc : docs) {
    std::vector<std::string> problems = corpus::Validate(doc, schema);
    if (!problems.empty()) {
      throw ValidationError(doc.doc_id, JoinProblems(problems));
    }
  }

  // Each document is built independently; results are merged in doc_id
  // order whatever the shard schedule.
  std::vector<std::vector<samples::MAQSample>> built(docs.size());
  std::vector<std::exception_ptr> failures(docs.size());
  auto build_one = [&](std::size_t i) {
    try {
      const Document &doc = docs[i];
      samples::ChainFn chains;
      dpc::DepGraph graph;
      if (!flags.no_chain && !doc.dep_edges.empty()) {
        graph = dpc::BuildGraph(doc);
        chains = [&doc, &graph](const EventMention &query, const QueryKind &,
                                std::span<const std::string> answers) {
          return dpc::ChainText(doc, graph, query, answers);
        };
      }
      built[i] = samples::BuildSamples(doc, schema, options, chains);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };
  const int jobs = std::max(1, flags.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < docs.size(); ++i) build_one(i);
  } else {
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < docs.size(); i += jobs) build_one(i);
      });
    }
    for (std::thread &t : workers) t.join();
  }
  for (const std::exception_ptr &e : failures) {
    if (e) std::rethrow_exception(e);
  }

  Sink sink(flags.out, out);
  std::size_t total = 0, mentions = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    mentions += docs[i].mentions.size();
    for (const samples::MAQSample &s : built[i]) {
      sink.stream() << samples::SampleToRecord(s) << '\n';
      ++total;
    }
  }
  json summary{{"documents", docs.size()},
               {"k", schema.k()},
               {"mentions", mentions},
               {"samples", total}};
  (sink.to_file() ? out : err) << summary.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- grad-check

inline constexpr double kGradStep = 1e-5;
inline constexpr double kGradTolerance = 1e-4;
inline constexpr double kTieGap = 1e-6;

struct GradInstance {
  loss::Matrix logits;
  loss::LabelSequence label;
  loss::LossConfig cfg;
};

double UnitDouble(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

GradInstance RandomInstance(std::mt19937_64 &rng) {
  GradInstance inst;
  const int vocab = 5 + static_cast<int>(rng() % 6);
  inst.cfg.slot_width = 1 + static_cast<int>(rng() % 4);
  inst.cfg.lambda = rng() % 2 == 0 ? 0.2 : UnitDouble(rng);
  inst.cfg.score_pad = rng() % 4 != 0;
  loss::LabelTokens tokens;
  tokens.terminator = rng() % 2 == 0 ? -1 : vocab - 1;

  auto word = [&] { return 4 + static_cast<int>(rng() % (vocab - 4)); };
  std::vector<int> chain(rng() % 4);
  for (int &t : chain) t = word();
  std::vector<std::vector<int>> answers(rng() % 6);
  for (auto &a : answers) {
    a.resize(1 + rng() % inst.cfg.slot_width);
    for (int &t : a) t = word();
  }
  inst.label = loss::MakeLabelSequence(chain, answers, tokens, inst.cfg);
  inst.logits.assign(inst.label.size(), std::vector<double>(vocab));
  for (auto &row : inst.logits) {
    for (double &z : row) z = -3.0 + 6.0 * UnitDouble(rng);
  }
  return inst;
}

// Gap between the best and second-best slot matching; infinite when the
// matching is unique by construction.
double MatchingGap(const GradInstance &inst) {
  const int m = inst.label.answer_count();
  if (m < 2 || inst.cfg.lambda == 0.0) return INFINITY;
  assignment::CostMatrix cost = loss::MatchCostMatrix(
      loss::Softmax(inst.logits), inst.label, inst.cfg);
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY, second = INFINITY;
  do {
    double c = assignment::CostOf(cost, perm);
    if (c < best) {
      second = best;
      best = c;
    } else if (c < second) {
      second = c;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return second - best;
}

json InstanceToJson(const GradInstance &inst) {
  return json{{"logits", inst.logits},
              {"token_ids", inst.label.token_ids},
              {"slot_starts", inst.label.slot_starts},
              {"slot_width", inst.label.slot_width},
              {"pad_token", inst.label.pad_token},
              {"lambda", inst.cfg.lambda},
              {"score_pad", inst.cfg.score_pad}};
}

int GradCheckCommand(int trials, std::uint64_t seed, bool tamper,
                     std::ostream &out) {
  std::mt19937_64 rng(seed);
  double max_error = 0.0;
  int skipped = 0;
  for (int trial = 0; trial < trials; ++trial) {
    GradInstance inst = RandomInstance(rng);
    if (MatchingGap(inst) < kTieGap) {
      ++skipped;
      continue;
    }
    loss::Matrix analytic = loss::GradLogits(inst.logits, inst.label, inst.cfg);
    if (tamper) analytic[0][0] += 1e-3;
    double worst = 0.0;
    loss::Matrix z = inst.logits;
    for (std::size_t p = 0; p < z.size(); ++p) {
      for (std::size_t v = 0; v < z[p].size(); ++v) {
        const double saved = z[p][v];
        z[p][v] = saved + kGradStep;
        double up = loss::TotalLoss(loss::Softmax(z), inst.label, inst.cfg).total;
        z[p][v] = saved - kGradStep;
        double down =
            loss::TotalLoss(loss::Softmax(z), inst.label, inst.cfg).total;
        z[p][v] = saved;
        double numeric = (up - down) / (2 * kGradStep);
        double scale =
            std::max({std::abs(analytic[p][v]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[p][v] - numeric) / scale);
      }
    }
    max_error = std::max(max_error, worst);
    if (worst > kGradTolerance) {
      json failure{{"pass", false},
                   {"trial", trial},
                   {"rel_error", worst},
                   {"instance", InstanceToJson(inst)}};
      out << failure.dump() << '\n';
      return kExitCheckFailed;
    }
  }
  json report{{"trials", trials},
              {"checked", trials - skipped},
              {"skipped_ties", skipped},
              {"max_rel_error", max_error},
              {"tolerance", kGradTolerance},
              {"pass", true},
              {"vacuous", trials - skipped == 0}};
  out << report.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

std::set<std::string> DefaultTypes(const std::string &task) {
  if (task == "coreference") return {"coreference"};
  if (task == "causal") return {"cause", "precondition"};
  if (task == "subevent") return {"subevent"};
  if (task == "temporal") {
    return {"before", "overlap", "contains", "simultaneous", "begins-on",
            "ends-on"};
  }
  throw Error("unknown task '" + task + "'");
}

json ScoreRecord(const std::string &task, const std::string &metric,
                 const metrics::ScoreTriple &s) {
  return json{{"task", task},
              {"metric", metric},
              {"precision", s.precision},
              {"recall", s.recall},
              {"f1", s.f1}};
}

int EvaluateCommand(const std::string &gold_path, const std::string &pred_path,
                    const std::string &task, const std::string &types_flag,
                    const std::string &schema_path, std::ostream &out) {
  std::set<std::string> types = DefaultTypes(task);
  if (!types_flag.empty()) {
    types.clear();
    std::stringstream ss(types_flag);
    std::string t;
    while (std::getline(ss, t, ',')) {
      if (!t.empty()) types.insert(t);
    }
  }
  RelationSchema schema = schema_path.empty()
                              ? RelationSchema::Coreference()
                              : corpus::LoadSchema(schema_path);
  std::vector<Document> gold = SortedCorpus(gold_path);
  std::map<std::string, metrics::RelationSet> pred;
  {
    std::ifstream in(pred_path, std::ios::binary);
    if (!in) throw Error("cannot read '" + pred_path + "'");
    pred = decoder::ReadPredictions(in);
  }
  std::map<std::string, const Document *> by_id;
  for (const Document &d : gold) by_id[d.doc_id] = &d;
  for (const auto &[doc_id, rels] : pred) {
    const Document *doc = by_id.count(doc_id) ? by_id[doc_id] : nullptr;
    if (doc == nullptr) {
      throw ValidationError(doc_id, "prediction for a document not in gold");
    }
    for (const RelationInstance &r : rels) {
      if (!doc->FindMention(r.head) || !doc->FindMention(r.tail)) {
        throw ValidationError(doc_id, "prediction references unknown mention");
      }
    }
  }

  auto typed = [&types](const metrics::RelationSet &in) {
    metrics::RelationSet out_set;
    for (const RelationInstance &r : in) {
      if (types.count(r.rel_type)) out_set.insert(r);
    }
    return out_set;
  };

  if (task == "coreference") {
    metrics::Counts muc, b3, ceafe;
    metrics::BlancCounts blanc;
    for (const Document &doc : gold) {
      std::vector<std::string> ids;
      for (const EventMention *m : doc.MentionsInTextOrder()) {
        ids.push_back(m->id);
      }
      metrics::RelationSet gold_links = typed(decoder::CanonicalRelations(
          metrics::RelationSet(doc.relations.begin(), doc.relations.end()),
          schema));
      auto it = pred.find(doc.doc_id);
      metrics::RelationSet pred_links =
          it == pred.end()
              ? metrics::RelationSet{}
              : typed(decoder::CanonicalRelations(it->second, schema));
      metrics::ClusterPartition key = decoder::BuildClusters(gold_links, ids);
      metrics::ClusterPartition response =
          decoder::BuildClusters(pred_links, ids);
      muc += metrics::MucCounts(key, response);
      b3 += metrics::BCubedCounts(key, response);
      ceafe += metrics::CeafeCounts(key, response);
      if (ids.size() >= 2) blanc += metrics::BlancPairCounts(key, response);
    }
    out << ScoreRecord(task, "muc", muc.Score()).dump() << '\n';
    out << ScoreRecord(task, "b3", b3.Score()).dump() << '\n';
    out << ScoreRecord(task, "ceaf_e", ceafe.Score()).dump() << '\n';
    out << ScoreRecord(task, "blanc", blanc.Score()).dump() << '\n';
    return kExitOk;
  }

  metrics::Counts micro, pc, cp;
  for (const Document &doc : gold) {
    metrics::RelationSet gold_rels = typed(decoder::CanonicalRelations(
        metrics::RelationSet(doc.relations.begin(), doc.relations.end()),
        schema));
    auto it = pred.find(doc.doc_id);
    metrics::RelationSet pred_rels =
        it == pred.end() ? metrics::RelationSet{}
                         : typed(decoder::CanonicalRelations(it->second, schema));
    micro += metrics::MicroCounts(gold_rels, pred_rels);
    if (task == "subevent") {
      auto head_first = [&doc](const RelationInstance &r) {
        return doc.FindMention(r.head)->span.start <
               doc.FindMention(r.tail)->span.start;
      };
      metrics::RelationFilter parent_child;
      parent_child.accept = head_first;
      metrics::RelationFilter child_parent;
      child_parent.accept = [head_first](const RelationInstance &r) {
        return !head_first(r);
      };
      pc += metrics::MicroCounts(gold_rels, pred_rels, parent_child);
      cp += metrics::MicroCounts(gold_rels, pred_rels, child_parent);
    }
  }
  out << ScoreRecord(task, "micro", micro.Score()).dump() << '\n';
  if (task == "subevent") {
    out << ScoreRecord(task, "pc", pc.Score()).dump() << '\n';
    out << ScoreRecord(task, "cp", cp.Score()).dump() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- analyze

struct CostFlags {
  std::string input;
  std::string schema;
  int k = 0;
  std::string pairing = "unordered";
  double pairwise_latency = 0.0;
  double maq_latency = 0.0;
  bool reference = false;
};

int AnalyzeCostCommand(const CostFlags &flags, std::ostream &out) {
  if (flags.reference) {
    json check{{"check", "reference"},
               {"mentions", analysis::kReferenceMentions},
               {"maq_queries",
                analysis::CountQueries(
                    std::vector<std::int64_t>{analysis::kReferenceMentions}, 1)
                    .queries_maq},
               {"pairwise_queries", analysis::kReferencePairwise},
               {"sum_squares", analysis::kReferenceSumSquares},
               {"consistent", analysis::ReferenceAggregatesConsistent()}};
    out << check.dump() << '\n';
    if (flags.input.empty()) return kExitOk;
  }
  if (flags.input.empty()) throw Error("--input is required");
  int k = flags.k;
  if (k == 0) {
    k = flags.schema.empty() ? 1 : corpus::LoadSchema(flags.schema).k();
  }
  std::vector<std::int64_t> counts;
  for (const Document &doc : SortedCorpus(flags.input)) {
    counts.push_back(static_cast<std::int64_t>(doc.mentions.size()));
  }
  analysis::CostReport report = analysis::CountQueries(
      counts, k, analysis::ParsePairing(flags.pairing));
  json rec = json::parse(analysis::ReportToRecord(report));
  if (flags.pairwise_latency > 0 || flags.maq_latency > 0) {
    rec["latency_ratio"] = analysis::LatencyRatio(
        report, flags.pairwise_latency, flags.maq_latency);
  }
  out << rec.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- experiment

int OrderExperimentCommand(std::uint64_t seed, int samples, int epochs,
                           double lr, double lambda, const std::string &path,
                           std::ostream &out) {
  toy::GeneratorConfig gen;
  gen.seed = seed;
  gen.samples = samples;
  std::vector<samples::MAQSample> data = toy::GenerateSamples(gen);
  toy::TrainConfig cfg;
  cfg.seed = seed;
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.lambda = lambda;
  Sink sink(path, out);
  for (const toy::ExperimentRow &row : toy::OrderExperiment(data, cfg)) {
    sink.stream() << toy::RowToRecord(row) << '\n';
  }
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Multiple-answer question tooling for event relations", "maq"};
  app.require_subcommand(1);

  BuildFlags build;
  CLI::App *build_cmd =
      app.add_subcommand("build-samples", "Write k x n instruction samples");
  build_cmd->add_option("--input", build.input, "Corpus records")->required();
  build_cmd->add_option("--schema", build.schema, "Relation schema JSON");
  build_cmd->add_option("--scheme", build.scheme,
                        "byte_token, numbered or uniform");
  build_cmd->add_option("--suffix", build.suffix, "Closing marker, e.g. </>");
  build_cmd->add_option("--template", build.tmpl,
                        "Preset name or a literal template");
  build_cmd->add_option("--out", build.out, "Output file (default stdout)");
  build_cmd->add_flag("--marker-only", build.marker_only,
                      "Cite answers by marker alone");
  build_cmd->add_flag("--no-chain", build.no_chain,
                      "Leave the dependency chain empty");
  build_cmd->add_option("--jobs", build.jobs, "Worker threads")
      ->check(CLI::PositiveNumber);

  int trials = 100;
  std::uint64_t grad_seed = 0;
  bool tamper = false;
  CLI::App *grad_cmd = app.add_subcommand(
      "grad-check", "Compare loss gradients with finite differences");
  grad_cmd->add_option("--trials", trials, "Random instances")
      ->check(CLI::NonNegativeNumber);
  grad_cmd->add_option("--seed", grad_seed, "Instance seed");
  grad_cmd->add_flag("--tamper", tamper)->group("");

  std::string gold_path, pred_path, task, types, eval_schema;
  CLI::App *eval_cmd =
      app.add_subcommand("evaluate", "Score predictions against gold");
  eval_cmd->add_option("--gold", gold_path, "Gold corpus")->required();
  eval_cmd->add_option("--pred", pred_path, "Prediction records")->required();
  eval_cmd->add_option("--task", task,
                       "coreference, temporal, causal or subevent")
      ->required();
  eval_cmd->add_option("--types", types, "Comma-separated relation types");
  eval_cmd->add_option("--schema", eval_schema, "Relation schema JSON");

  CostFlags cost;
  CLI::App *cost_cmd =
      app.add_subcommand("analyze-cost", "Count inference queries");
  cost_cmd->add_option("--input", cost.input, "Corpus records");
  cost_cmd->add_option("--schema", cost.schema, "Schema giving k");
  cost_cmd->add_option("--k", cost.k, "Query directions per mention")
      ->check(CLI::PositiveNumber);
  cost_cmd->add_option("--pairing", cost.pairing, "unordered or ordered");
  cost_cmd->add_option("--pairwise-latency", cost.pairwise_latency,
                       "Seconds per pairwise query")
      ->check(CLI::PositiveNumber);
  cost_cmd->add_option("--maq-latency", cost.maq_latency,
                       "Seconds per MAQ query")
      ->check(CLI::PositiveNumber);
  cost_cmd->add_flag("--reference", cost.reference,
                     "Check the published MAVEN-ERE aggregates");

  std::uint64_t exp_seed = 0;
  int exp_samples = toy::GeneratorConfig{}.samples;
  int exp_epochs = toy::TrainConfig{}.epochs;
  double exp_lr = toy::TrainConfig{}.learning_rate;
  double exp_lambda = toy::TrainConfig{}.lambda;
  std::string exp_out;
  CLI::App *exp_cmd = app.add_subcommand(
      "order-experiment", "Train the toy model under each answer order");
  exp_cmd->add_option("--seed", exp_seed, "Generator and training seed");
  exp_cmd->add_option("--samples", exp_samples, "Synthetic samples")
      ->check(CLI::Range(1, 1000000));
  exp_cmd->add_option("--epochs", exp_epochs, "Training epochs")
      ->check(CLI::NonNegativeNumber);
  exp_cmd->add_option("--lr", exp_lr, "Learning rate")
      ->check(CLI::PositiveNumber);
  exp_cmd->add_option("--lambda", exp_lambda, "Matching loss weight")
      ->check(CLI::NonNegativeNumber);
  exp_cmd->add_option("--out", exp_out, "Output file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*build_cmd) return BuildSamplesCommand(build, out, err);
    if (*grad_cmd) return GradCheckCommand(trials, grad_seed, tamper, out);
    if (*eval_cmd) {
      return EvaluateCommand(gold_path, pred_path, task, types, eval_schema,
                             out);
    }
    if (*cost_cmd) return AnalyzeCostCommand(cost, out);
    if (*exp_cmd) {
      return OrderExperimentCommand(exp_seed, exp_samples, exp_epochs, exp_lr,
                                    exp_lambda, exp_out, out);
    }
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace cli
}  // namespace maq
