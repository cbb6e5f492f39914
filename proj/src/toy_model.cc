#include "maq/toy_model.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "maq/decoder.h"
#include "maq/errors.h"

namespace maq {
namespace toy {

namespace {

// std distributions are implementation-defined; these are not.
std::uint64_t UniformInt(std::mt19937_64 &rng, std::uint64_t n) {
  return rng() % n;
}

template <typename T>
void Shuffle(std::vector<T> &v, std::mt19937_64 &rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[UniformInt(rng, i)]);
  }
}

std::uint64_t Mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t HashToken(std::string_view token) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::vector<std::string_view> SplitWords(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view QueryMarker(const samples::MAQSample &sample) {
  for (std::string_view w : SplitWords(sample.instruction)) {
    if (decoder::IsMarker(w)) return w;
  }
  return {};
}

constexpr std::string_view kBiasToken = "<bias>";

}  // namespace

OrderPolicy ParseOrderPolicy(std::string_view name) {
  for (OrderPolicy p : kAllPolicies) {
    if (OrderPolicyName(p) == name) return p;
  }
  throw Error("unknown answer order policy '" + std::string(name) + "'");
}

std::string_view OrderPolicyName(OrderPolicy policy) {
  switch (policy) {
    case OrderPolicy::kSequence:
      return "sequence";
    case OrderPolicy::kReverse:
      return "reverse";
    case OrderPolicy::kRandom:
      return "random";
    case OrderPolicy::kDistance:
      return "distance";
    case OrderPolicy::kDict:
      return "dict";
  }
  return "";
}

Vocab::Vocab() {
  for (std::string_view t : {kPadToken, kDelimiterToken, kSeparatorToken,
                             kEndToken, samples::kNoneAnswer}) {
    Add(t);
  }
}

Vocab Vocab::Build(std::span<const samples::MAQSample> dataset) {
  Vocab vocab;
  for (const samples::MAQSample &s : dataset) {
    for (std::string_view w : SplitWords(s.instruction)) vocab.Add(w);
    for (std::string_view w : SplitWords(s.context)) vocab.Add(w);
    for (const decoder::ParsedAnswer &a : decoder::ParseLabel(s.label).answers) {
      vocab.Add(a.marker);
      for (std::string_view w : SplitWords(a.trigger)) vocab.Add(w);
    }
  }
  return vocab;
}

int Vocab::Add(std::string_view token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  int id = size();
  tokens_.emplace_back(token);
  ids_.emplace(std::string(token), id);
  return id;
}

int Vocab::Id(std::string_view token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) {
    throw VocabularyError("token '" + std::string(token) +
                          "' is not in the vocabulary");
  }
  return it->second;
}

bool Vocab::Contains(std::string_view token) const {
  return ids_.find(token) != ids_.end();
}

ToyModel::ToyModel(Vocab vocab, ModelShape shape, std::uint64_t rng_seed)
    : vocab_(std::move(vocab)), shape_(shape), rng_seed_(rng_seed) {
  if (shape_.slot_width < 1 || shape_.max_answers < 1 || shape_.window < 0 ||
      shape_.buckets < 1) {
    throw Error("invalid model shape");
  }
}

std::uint32_t ToyModel::Bucket(std::uint64_t token_hash, int position) const {
  return static_cast<std::uint32_t>(
      Mix(token_hash ^ Mix(static_cast<std::uint64_t>(position))) %
      static_cast<std::uint64_t>(shape_.buckets));
}

Encoded ToyModel::Encode(const samples::MAQSample &sample) const {
  std::vector<std::string_view> instruction = SplitWords(sample.instruction);
  std::vector<std::string_view> context = SplitWords(sample.context);
  for (std::string_view w : instruction) vocab_.Id(w);
  for (std::string_view w : context) vocab_.Id(w);

  Encoded enc;
  enc.token_hashes.push_back(HashToken(kBiasToken));
  for (std::string_view w : instruction) {
    enc.token_hashes.push_back(HashToken(w));
  }
  std::string_view marker = QueryMarker(sample);
  auto at = std::find(context.begin(), context.end(), marker);
  if (!marker.empty() && at != context.end()) {
    long center = at - context.begin();
    long lo = std::max(0L, center - shape_.window);
    long hi = std::min<long>(static_cast<long>(context.size()) - 1,
                             center + shape_.window);
    for (long i = lo; i <= hi; ++i) {
      // Context features live apart from instruction features.
      enc.token_hashes.push_back(Mix(HashToken(context[i]) ^ 0xC0));
    }
  }
  std::sort(enc.token_hashes.begin(), enc.token_hashes.end());
  enc.token_hashes.erase(
      std::unique(enc.token_hashes.begin(), enc.token_hashes.end()),
      enc.token_hashes.end());
  return enc;
}

loss::Matrix ToyModel::Logits(const Encoded &enc, int positions) const {
  const int v = vocab_.size();
  loss::Matrix logits(positions, std::vector<double>(v, 0.0));
  for (int pos = 0; pos < positions; ++pos) {
    for (std::uint64_t h : enc.token_hashes) {
      auto it = weights_.find(Bucket(h, pos));
      if (it == weights_.end()) continue;
      for (int t = 0; t < v; ++t) logits[pos][t] += it->second[t];
    }
  }
  return logits;
}

void ToyModel::Step(const Encoded &enc, const loss::Matrix &grad_logits,
                    double learning_rate) {
  const int v = vocab_.size();
  for (std::size_t pos = 0; pos < grad_logits.size(); ++pos) {
    for (std::uint64_t h : enc.token_hashes) {
      std::vector<double> &w = weights_[Bucket(h, static_cast<int>(pos))];
      if (w.empty()) w.assign(v, 0.0);
      for (int t = 0; t < v; ++t) w[t] -= learning_rate * grad_logits[pos][t];
    }
  }
}

loss::SlotDistribution Forward(const ToyModel &model,
                               const samples::MAQSample &sample) {
  return loss::Softmax(
      model.Logits(model.Encode(sample), model.shape().positions()));
}

std::string Decode(const ToyModel &model, const samples::MAQSample &sample) {
  loss::SlotDistribution dist = Forward(model, sample);
  auto best = [&](int pos) -> const std::string & {
    const std::vector<double> &p = dist.probs[pos];
    int arg = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    return model.vocab().Token(arg);
  };
  const ModelShape &shape = model.shape();
  if (best(1) == samples::kNoneAnswer) {
    return samples::ComposeLabel("", samples::kNoneAnswer);
  }
  std::string answers;
  for (int slot = 0; slot < shape.max_answers; ++slot) {
    int start = 1 + slot * (shape.slot_width + 1);
    if (slot > 0) answers += samples::kAnswerSeparator;
    answers += best(start);
    for (int t = 1; t < shape.slot_width; ++t) {
      const std::string &tok = best(start + t);
      if (tok == kPadToken) continue;
      answers += ' ';
      answers += tok;
    }
    if (best(start + shape.slot_width) != kSeparatorToken) break;
  }
  return samples::ComposeLabel("", answers);
}

bool ExactSetMatch(std::string_view predicted, const samples::MAQSample &gold) {
  auto markers = [](const decoder::ParsedLabel &label,
                    std::set<std::string> &out) {
    for (const decoder::ParsedAnswer &a : label.answers) {
      if (a.marker.empty()) return false;
      out.insert(a.marker);
    }
    return true;
  };
  std::set<std::string> got, want;
  if (!markers(decoder::ParseLabel(predicted), got)) return false;
  markers(decoder::ParseLabel(gold.label), want);
  return got == want;
}

std::vector<int> AnswerOrder(const samples::MAQSample &sample,
                             OrderPolicy policy, std::uint64_t seed,
                             std::size_t index) {
  std::vector<decoder::ParsedAnswer> answers =
      decoder::ParseLabel(sample.label).answers;
  std::vector<int> order(answers.size());
  std::iota(order.begin(), order.end(), 0);
  switch (policy) {
    case OrderPolicy::kSequence:
      break;
    case OrderPolicy::kReverse:
      std::reverse(order.begin(), order.end());
      break;
    case OrderPolicy::kRandom: {
      std::mt19937_64 rng(Mix(seed ^ Mix(index)));
      Shuffle(order, rng);
      break;
    }
    case OrderPolicy::kDistance: {
      std::vector<std::string_view> context = SplitWords(sample.context);
      auto where = [&](std::string_view marker) {
        return static_cast<long>(
            std::find(context.begin(), context.end(), marker) -
            context.begin());
      };
      long query = where(QueryMarker(sample));
      std::vector<long> dist(answers.size());
      for (std::size_t i = 0; i < answers.size(); ++i) {
        dist[i] = std::labs(where(answers[i].marker) - query);
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return dist[a] < dist[b]; });
      break;
    }
    case OrderPolicy::kDict:
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return answers[a].trigger < answers[b].trigger;
      });
      break;
  }
  return order;
}

loss::LabelSequence TargetSequence(const ToyModel &model,
                                   const samples::MAQSample &sample,
                                   std::span<const int> order) {
  const Vocab &vocab = model.vocab();
  const ModelShape &shape = model.shape();
  decoder::ParsedLabel parsed = decoder::ParseLabel(sample.label);
  if (!parsed.chain_text.empty()) {
    throw Error("toy labels carry no dependency chain");
  }
  if (static_cast<int>(parsed.answers.size()) > shape.max_answers) {
    throw Error("label has more answers than the model has slots");
  }
  if (order.size() != parsed.answers.size()) {
    throw ShapeError("answer order does not match the label");
  }
  std::vector<std::vector<int>> answers;
  for (int i : order) {
    const decoder::ParsedAnswer &a = parsed.answers.at(i);
    std::vector<int> ids{vocab.Id(a.marker)};
    for (std::string_view w : SplitWords(a.trigger)) ids.push_back(vocab.Id(w));
    answers.push_back(std::move(ids));
  }
  loss::LabelTokens tokens;
  tokens.delimiter = vocab.Id(kDelimiterToken);
  tokens.separator = vocab.Id(kSeparatorToken);
  tokens.none = vocab.Id(samples::kNoneAnswer);
  tokens.terminator = vocab.Id(kEndToken);
  loss::LossConfig cfg;
  cfg.slot_width = shape.slot_width;
  cfg.pad_token = vocab.Id(kPadToken);
  return loss::MakeLabelSequence({}, answers, tokens, cfg);
}

double ExactSetMatchRate(const ToyModel &model,
                         std::span<const samples::MAQSample> dataset,
                         std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i : indices) {
    if (ExactSetMatch(Decode(model, dataset[i]), dataset[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

TrainResult Train(std::span<const samples::MAQSample> dataset,
                  const TrainConfig &cfg, bool use_bpm) {
  if (dataset.empty()) throw Error("empty training set");
  if (cfg.epochs < 0 || !(cfg.learning_rate > 0) || cfg.lambda < 0) {
    throw Error("invalid training configuration");
  }
  TrainResult result{ToyModel(Vocab::Build(dataset), cfg.shape, cfg.seed),
                     {}, {}, {}};
  ToyModel &model = result.model;
  const std::size_t n = dataset.size();

  std::mt19937_64 rng(Mix(cfg.seed));
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  Shuffle(all, rng);
  std::size_t held = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * cfg.holdout));
  held = std::min(held, n - 1);
  result.eval_indices.assign(all.begin(), all.begin() + held);
  result.train_indices.assign(all.begin() + held, all.end());
  std::sort(result.eval_indices.begin(), result.eval_indices.end());
  std::sort(result.train_indices.begin(), result.train_indices.end());
  if (held == 0) result.eval_indices = result.train_indices;

  std::vector<Encoded> encoded(n);
  std::vector<loss::LabelSequence> targets(n);
  for (std::size_t i : result.train_indices) {
    encoded[i] = model.Encode(dataset[i]);
    std::vector<int> order =
        AnswerOrder(dataset[i], cfg.answer_order_policy, cfg.seed, i);
    targets[i] = TargetSequence(model, dataset[i], order);
  }

  loss::LossConfig loss_cfg;
  loss_cfg.lambda = use_bpm ? cfg.lambda : 0.0;
  loss_cfg.slot_width = cfg.shape.slot_width;
  loss_cfg.pad_token = model.vocab().Id(kPadToken);

  std::vector<std::size_t> visit = result.train_indices;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Shuffle(visit, rng);
    double total = 0.0;
    for (std::size_t i : visit) {
      loss::Matrix logits = model.Logits(encoded[i], targets[i].size());
      loss::LossReport report;
      loss::Matrix grad;
      try {
        grad = loss::GradLogits(logits, targets[i], loss_cfg, &report);
      } catch (const NonFiniteError &e) {
        throw DivergenceError(epoch, e.what());
      }
      if (!std::isfinite(report.total)) {
        throw DivergenceError(epoch, "loss is not finite");
      }
      total += report.total;
      model.Step(encoded[i], grad, cfg.learning_rate);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = total / static_cast<double>(visit.size());
    if (!std::isfinite(stats.loss)) {
      throw DivergenceError(epoch, "loss is not finite");
    }
    stats.exact_set_match =
        ExactSetMatchRate(model, dataset, result.eval_indices);
    result.history.push_back(stats);
  }
  return result;
}

RelationSchema GeneratorSchema() {
  return RelationSchema({RelationQuery{"cause", false, std::nullopt}});
}

std::vector<Document> GenerateDocuments(const GeneratorConfig &cfg) {
  const int mentions_max = 1 + cfg.max_answers + cfg.max_distractors;
  if (cfg.samples < 0 || cfg.scenarios < 1 || cfg.min_answers < 1 ||
      cfg.max_answers < cfg.min_answers || cfg.max_distractors < 0 ||
      cfg.max_gap < 0 || cfg.vocab_size < cfg.scenarios + mentions_max) {
    throw Error("invalid generator configuration");
  }
  std::mt19937_64 rng(Mix(cfg.seed ^ 0x6E));
  std::vector<std::string> words(cfg.vocab_size);
  for (int i = 0; i < cfg.vocab_size; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "v%02d", i);
    words[i] = buf;
  }

  struct Scenario {
    std::vector<std::string> triggers;  // text order
    int query = 0;                      // index into triggers
    std::vector<bool> answer;
  };
  std::vector<int> query_words(cfg.vocab_size);
  std::iota(query_words.begin(), query_words.end(), 0);
  Shuffle(query_words, rng);

  std::vector<Scenario> scenarios(cfg.scenarios);
  for (int s = 0; s < cfg.scenarios; ++s) {
    int query_word = query_words[s];
    int answers = cfg.min_answers +
                  static_cast<int>(UniformInt(
                      rng, static_cast<std::uint64_t>(cfg.max_answers -
                                                      cfg.min_answers + 1)));
    int distractors =
        cfg.max_distractors == 0
            ? 0
            : 1 + static_cast<int>(UniformInt(
                      rng, static_cast<std::uint64_t>(cfg.max_distractors)));
    std::vector<int> pool;
    for (int w = 0; w < cfg.vocab_size; ++w) {
      if (w != query_word) pool.push_back(w);
    }
    Shuffle(pool, rng);
    // 0 = query, 1 = answer, 2 = distractor
    std::vector<std::pair<int, int>> slots{{query_word, 0}};
    for (int i = 0; i < answers + distractors; ++i) {
      slots.emplace_back(pool[i], i < answers ? 1 : 2);
    }
    Shuffle(slots, rng);
    Scenario &sc = scenarios[s];
    for (std::size_t i = 0; i < slots.size(); ++i) {
      sc.triggers.push_back(words[slots[i].first]);
      sc.answer.push_back(slots[i].second == 1);
      if (slots[i].second == 0) sc.query = static_cast<int>(i);
    }
  }

  std::vector<Document> docs;
  docs.reserve(cfg.samples);
  for (int d = 0; d < cfg.samples; ++d) {
    const Scenario &sc = scenarios[UniformInt(rng, scenarios.size())];
    Document doc;
    char id[32];
    std::snprintf(id, sizeof(id), "toy-%05d", d);
    doc.doc_id = id;
    auto filler = [&]() {
      int gap = static_cast<int>(
          UniformInt(rng, static_cast<std::uint64_t>(cfg.max_gap + 1)));
      for (int g = 0; g < gap; ++g) {
        const std::string *w;
        do {
          w = &words[UniformInt(rng, words.size())];
        } while (std::find(sc.triggers.begin(), sc.triggers.end(), *w) !=
                 sc.triggers.end());
        doc.tokens.push_back(*w);
      }
    };
    for (std::size_t m = 0; m < sc.triggers.size(); ++m) {
      filler();
      int at = doc.token_count();
      doc.tokens.push_back(sc.triggers[m]);
      doc.mentions.push_back(
          {"m" + std::to_string(m), {at, at + 1}, sc.triggers[m]});
    }
    filler();
    doc.tokens.push_back(".");
    doc.sentence_spans.push_back({0, doc.token_count()});
    const std::string query_id = "m" + std::to_string(sc.query);
    for (std::size_t m = 0; m < sc.triggers.size(); ++m) {
      if (sc.answer[m]) {
        doc.relations.push_back({"cause", "m" + std::to_string(m), query_id});
      }
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<samples::MAQSample> GenerateSamples(const GeneratorConfig &cfg) {
  RelationSchema schema = GeneratorSchema();
  samples::SampleOptions options;
  std::vector<samples::MAQSample> out;
  for (const Document &doc : GenerateDocuments(cfg)) {
    // The query is the only mention that is the tail of a relation.
    const std::string &query = doc.relations.front().tail;
    for (samples::MAQSample &s :
         samples::BuildSamples(doc, schema, options, nullptr)) {
      if (s.query_mention == query) out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<ExperimentRow> OrderExperiment(
    std::span<const samples::MAQSample> dataset, const TrainConfig &base,
    std::span<const OrderPolicy> policies) {
  std::vector<ExperimentRow> rows;
  for (bool use_bpm : {false, true}) {
    for (OrderPolicy policy : policies) {
      TrainConfig cfg = base;
      cfg.answer_order_policy = policy;
      TrainResult result = Train(dataset, cfg, use_bpm);
      ExperimentRow row;
      row.loss = use_bpm ? "ce+bpm" : "ce";
      row.order = std::string(OrderPolicyName(policy));
      row.exact_set_match = result.history.empty()
                                ? ExactSetMatchRate(result.model, dataset,
                                                    result.eval_indices)
                                : result.history.back().exact_set_match;
      row.seed = base.seed;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string RowToRecord(const ExperimentRow &row) {
  nlohmann::json rec{{"loss", row.loss},
                     {"order", row.order},
                     {"exact_set_match", row.exact_set_match},
                     {"seed", row.seed}};
  return rec.dump();
}

}  // namespace toy
}  // namespace maq
