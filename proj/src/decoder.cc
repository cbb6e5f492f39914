#include "maq/decoder.h"

#include <istream>
#include <numeric>

#include "json.hpp"
#include "maq/errors.h"

namespace maq {
namespace decoder {

namespace {

std::string_view Trim(std::string_view s) {
  const char *ws = " \t\r\n";
  std::size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

bool IsMarker(std::string_view token) {
  return token.size() >= 3 && token.front() == '<' && token.back() == '>' &&
         token[1] != '/' &&
         token.find_first_of(" \t") == std::string_view::npos;
}

ParsedLabel ParseLabel(std::string_view text) {
  ParsedLabel parsed;
  std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) {
    parsed.chain_text = std::string(Trim(text));
    return parsed;
  }
  parsed.chain_text = std::string(Trim(text.substr(0, colon)));
  std::string_view answers = Trim(text.substr(colon + 1));
  if (answers == samples::kNoneAnswer) {
    parsed.is_none = true;
    return parsed;
  }
  while (!answers.empty()) {
    std::size_t comma = answers.find(',');
    std::string_view fragment = Trim(answers.substr(0, comma));
    answers = comma == std::string_view::npos ? std::string_view()
                                              : answers.substr(comma + 1);
    if (fragment.empty()) continue;
    ParsedAnswer answer;
    answer.raw = std::string(fragment);
    std::size_t space = fragment.find_first_of(" \t");
    std::string_view head = fragment.substr(0, space);
    if (IsMarker(head)) {
      answer.marker = std::string(head);
      if (space != std::string_view::npos) {
        answer.trigger = std::string(Trim(fragment.substr(space)));
      }
    } else {
      answer.trigger = answer.raw;
    }
    parsed.answers.push_back(std::move(answer));
  }
  return parsed;
}

Resolution Resolve(const ParsedLabel &parsed,
                   const samples::MarkedContext &ctx) {
  using Kind = ResolveIssue::Kind;
  Resolution out;
  auto add = [&out](const std::string &id) {
    if (std::find(out.mentions.begin(), out.mentions.end(), id) ==
        out.mentions.end()) {
      out.mentions.push_back(id);
    }
  };
  for (const ParsedAnswer &answer : parsed.answers) {
    if (answer.marker.empty()) {
      out.failures.push_back({Kind::kNoMarker, answer.raw});
      continue;
    }
    auto it = ctx.mention_of.find(answer.marker);
    if (it == ctx.mention_of.end()) {
      out.failures.push_back({Kind::kUnknownMarker, answer.raw});
      continue;
    }
    const std::vector<std::string> &candidates = it->second;
    if (candidates.size() == 1) {
      const std::string &id = candidates.front();
      auto trig = ctx.trigger_of.find(id);
      if (!answer.trigger.empty() && trig != ctx.trigger_of.end() &&
          trig->second != answer.trigger) {
        out.flags.push_back({Kind::kTriggerMismatch, answer.raw});
      }
      add(id);
      continue;
    }
    // Shared marker: the trigger must identify exactly one mention.
    std::vector<std::string> matches;
    for (const std::string &id : candidates) {
      auto trig = ctx.trigger_of.find(id);
      if (trig != ctx.trigger_of.end() && trig->second == answer.trigger) {
        matches.push_back(id);
      }
    }
    if (matches.size() == 1) {
      add(matches.front());
    } else {
      out.failures.push_back({Kind::kAmbiguousMarker, answer.raw});
    }
  }
  return out;
}

std::map<std::string, PredictionSet> Assemble(
    std::span<const TaggedResolution> resolutions,
    const RelationSchema &schema) {
  std::map<std::string, PredictionSet> out;
  for (const TaggedResolution &res : resolutions) {
    const QueryKind *kind = schema.FindKind(res.relation);
    if (kind == nullptr) {
      throw UnknownRelation("relation '" + res.relation +
                            "' is not in the schema");
    }
    PredictionSet &set = out[res.doc_id];
    for (const std::string &failure : res.failures) {
      set.partial_failures.push_back(failure);
    }
    for (const std::string &answer : res.answers) {
      if (answer == res.query_mention) {
        set.partial_failures.push_back("self link on '" + answer + "'");
        continue;
      }
      RelationInstance r{kind->relation, answer, res.query_mention};
      if (kind->inverse) std::swap(r.head, r.tail);
      if (kind->symmetric && r.tail < r.head) std::swap(r.head, r.tail);
      set.relations.insert(std::move(r));
    }
  }
  return out;
}

metrics::RelationSet CanonicalRelations(const metrics::RelationSet &relations,
                                        const RelationSchema &schema) {
  metrics::RelationSet out;
  for (const RelationInstance &r : relations) {
    out.insert(corpus::Canonicalize(r, schema));
  }
  return out;
}

metrics::ClusterPartition BuildClusters(const metrics::RelationSet &links,
                                        std::span<const std::string> mentions) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    index.emplace(mentions[i], static_cast<int>(i));
  }
  std::vector<int> parent(mentions.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const RelationInstance &r : links) {
    auto a = index.find(r.head);
    auto b = index.find(r.tail);
    if (a == index.end() || b == index.end()) {
      throw Error("link references unknown mention");
    }
    int ra = find(a->second), rb = find(b->second);
    // Smaller index becomes the root so cluster order is first-member order.
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  metrics::ClusterPartition partition;
  std::map<int, std::size_t> cluster_of_root;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    int root = find(static_cast<int>(i));
    auto [it, fresh] =
        cluster_of_root.emplace(root, partition.clusters.size());
    if (fresh) partition.clusters.emplace_back();
    partition.clusters[it->second].push_back(mentions[i]);
    partition.universe.push_back(mentions[i]);
  }
  return partition;
}

std::string PredictionToRecord(const std::string &doc_id,
                               const metrics::RelationSet &relations) {
  nlohmann::json rec;
  rec["doc_id"] = doc_id;
  rec["relations"] = nlohmann::json::array();
  for (const RelationInstance &r : relations) {
    rec["relations"].push_back(
        {{"type", r.rel_type}, {"head", r.head}, {"tail", r.tail}});
  }
  return rec.dump();
}

std::map<std::string, metrics::RelationSet> ReadPredictions(std::istream &in) {
  std::map<std::string, metrics::RelationSet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      nlohmann::json rec = nlohmann::json::parse(line);
      std::string doc_id = rec.at("doc_id").get<std::string>();
      auto [it, fresh] = out.emplace(doc_id, metrics::RelationSet{});
      if (!fresh) throw ParseError(line_no, "repeated doc_id '" + doc_id + "'");
      for (const auto &r : rec.at("relations")) {
        it->second.insert({r.at("type").get<std::string>(),
                           r.at("head").get<std::string>(),
                           r.at("tail").get<std::string>()});
      }
    } catch (const nlohmann::json::exception &e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace decoder
}  // namespace maq
