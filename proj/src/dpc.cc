#include "maq/dpc.h"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <queue>
#include <set>

#include "maq/errors.h"

namespace maq {
namespace dpc {

DepGraph::DepGraph(int node_count, std::vector<GraphEdge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    edges_[i].rank = static_cast<int>(i);
  }
  std::stable_sort(edges_.begin(), edges_.end(),
                   [](const GraphEdge &a, const GraphEdge &b) {
                     int a_lo = std::min(a.head, a.dep);
                     int b_lo = std::min(b.head, b.dep);
                     if (a_lo != b_lo) return a_lo < b_lo;
                     int a_hi = std::max(a.head, a.dep);
                     int b_hi = std::max(b.head, b.dep);
                     if (a_hi != b_hi) return a_hi < b_hi;
                     return a.rank < b.rank;
                   });
  adjacency_.assign(node_count_, {});
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    GraphEdge &e = edges_[i];
    if (!HasNode(e.head) || !HasNode(e.dep)) {
      throw Error("graph edge endpoint outside node range");
    }
    e.rank = static_cast<int>(i);
    if (e.bridge) ++bridge_count_;
    adjacency_[e.head].push_back({e.dep, static_cast<int>(i)});
    adjacency_[e.dep].push_back({e.head, static_cast<int>(i)});
  }
}

DepGraph BuildGraph(const Document &doc) {
  std::vector<GraphEdge> edges;
  for (const DepEdge &e : doc.dep_edges) {
    edges.push_back({e.head_tok, e.dep_tok, e.label, false, 0});
  }
  if (!doc.dep_edges.empty() && doc.sentence_spans.size() > 1) {
    std::vector<bool> is_dep(doc.token_count(), false);
    std::vector<bool> is_head(doc.token_count(), false);
    for (const DepEdge &e : doc.dep_edges) {
      is_dep[e.dep_tok] = true;
      is_head[e.head_tok] = true;
    }
    std::vector<int> roots;
    for (const TokenSpan &s : doc.sentence_spans) {
      int root = s.start;
      for (int t = s.start; t < s.end; ++t) {
        if (is_head[t] && !is_dep[t]) {
          root = t;
          break;
        }
      }
      roots.push_back(root);
    }
    for (std::size_t i = 0; i + 1 < roots.size(); ++i) {
      edges.push_back(
          {roots[i], roots[i + 1], std::string(kBridgeLabel), true, 0});
    }
  }
  return DepGraph(doc.token_count(), std::move(edges));
}

int DependencyChain::NodeCount() const {
  if (edges.empty()) return terminals.empty() ? 0 : 1;
  std::set<int> nodes;
  for (const ChainEdge &e : edges) {
    nodes.insert(e.head);
    nodes.insert(e.dep);
  }
  return static_cast<int>(nodes.size());
}

namespace {

// Path weight: edge count first, then a preference for early edges. An edge
// of rank r carries a bonus of 2^(E-1-r), so any set holding an earlier edge
// outweighs every set built only from later ones. A larger bonus is better.
// The bonus is a fixed-width big integer so the order is exact.
class Weight {
 public:
  Weight() = default;
  explicit Weight(std::size_t words) : bonus_(words, 0) {}

  static Weight Infinite(std::size_t words) {
    Weight w(words);
    w.edges_ = INT32_MAX;
    return w;
  }
  static Weight ForEdge(int rank, int edge_count, std::size_t words) {
    Weight w(words);
    w.edges_ = 1;
    int bit = edge_count - 1 - rank;
    w.bonus_[bit / 64] = uint64_t{1} << (bit % 64);
    return w;
  }

  bool infinite() const { return edges_ == INT32_MAX; }

  Weight operator+(const Weight &o) const {
    if (infinite() || o.infinite()) return Infinite(bonus_.size());
    Weight sum(bonus_.size());
    sum.edges_ = edges_ + o.edges_;
    uint64_t carry = 0;
    for (std::size_t i = 0; i < bonus_.size(); ++i) {
      uint64_t a = bonus_[i];
      uint64_t s = a + o.bonus_[i];
      uint64_t c1 = s < a ? 1 : 0;
      uint64_t s2 = s + carry;
      uint64_t c2 = s2 < s ? 1 : 0;
      sum.bonus_[i] = s2;
      carry = c1 + c2;
    }
    return sum;
  }

  // Strictly better (lighter).
  bool operator<(const Weight &o) const {
    if (edges_ != o.edges_) return edges_ < o.edges_;
    for (std::size_t i = bonus_.size(); i-- > 0;) {
      if (bonus_[i] != o.bonus_[i]) return bonus_[i] > o.bonus_[i];
    }
    return false;
  }

 private:
  int edges_ = 0;
  std::vector<uint64_t> bonus_;
};

struct Back {
  enum Kind { kNone, kBase, kMerge, kEdge } kind = kNone;
  int submask = 0;  // kMerge
  int from = 0;     // kEdge: predecessor node
  int edge = 0;     // kEdge: edge index
};

class Solver {
 public:
  explicit Solver(const DepGraph &graph) : graph_(graph) {
    const int e = static_cast<int>(graph.edges().size());
    words_ = static_cast<std::size_t>(e + 8) / 64 + 1;
    for (int i = 0; i < e; ++i) {
      edge_weight_.push_back(Weight::ForEdge(i, e, words_));
    }
  }

  // Dreyfus-Wagner over terminal subsets.
  std::set<int> Exact(const std::vector<int> &terminals) {
    const int t = static_cast<int>(terminals.size());
    const int full = (1 << t) - 1;
    const int n = graph_.node_count();
    dp_.assign(full + 1, std::vector<Weight>(n, Weight::Infinite(words_)));
    back_.assign(full + 1, std::vector<Back>(n));
    for (int i = 0; i < t; ++i) {
      int mask = 1 << i;
      dp_[mask][terminals[i]] = Weight(words_);
      back_[mask][terminals[i]].kind = Back::kBase;
      Relax(mask);
    }
    for (int mask = 1; mask <= full; ++mask) {
      if ((mask & (mask - 1)) == 0) continue;
      for (int v = 0; v < n; ++v) {
        // Submasks containing the lowest bit, so each split is seen once.
        int low = mask & -mask;
        for (int sub = (mask - 1) & mask; sub > 0; sub = (sub - 1) & mask) {
          if ((sub & low) == 0) continue;
          Weight w = dp_[sub][v] + dp_[mask ^ sub][v];
          if (w < dp_[mask][v]) {
            dp_[mask][v] = w;
            back_[mask][v] = {Back::kMerge, sub, 0, 0};
          }
        }
      }
      Relax(mask);
    }
    std::set<int> edges;
    Collect(full, terminals[0], edges);
    return edges;
  }

  // Grows a tree from terminals[0], each step attaching the closest
  // remaining terminal by a shortest path.
  std::set<int> Greedy(const std::vector<int> &terminals) {
    const int n = graph_.node_count();
    std::set<int> edges;
    std::vector<bool> in_tree(n, false);
    in_tree[terminals[0]] = true;
    std::vector<bool> connected(terminals.size(), false);
    connected[0] = true;
    for (std::size_t step = 1; step < terminals.size(); ++step) {
      std::vector<Weight> dist(n, Weight::Infinite(words_));
      std::vector<std::pair<int, int>> pred(n, {-1, -1});
      for (int v = 0; v < n; ++v) {
        if (in_tree[v]) dist[v] = Weight(words_);
      }
      Dijkstra(dist, &pred, nullptr);
      int best = -1;
      for (std::size_t i = 0; i < terminals.size(); ++i) {
        if (connected[i]) continue;
        if (best < 0 || dist[terminals[i]] < dist[terminals[best]]) {
          best = static_cast<int>(i);
        }
      }
      connected[best] = true;
      for (int v = terminals[best]; !in_tree[v]; v = pred[v].first) {
        in_tree[v] = true;
        edges.insert(pred[v].second);
      }
    }
    return edges;
  }

 private:
  void Relax(int mask) { Dijkstra(dp_[mask], nullptr, &back_[mask]); }

  void Dijkstra(std::vector<Weight> &dist,
                std::vector<std::pair<int, int>> *pred,
                std::vector<Back> *back) {
    const int n = graph_.node_count();
    std::vector<bool> done(n, false);
    // Dense selection keeps the comparison exact without a heap of big ints.
    for (;;) {
      int u = -1;
      for (int v = 0; v < n; ++v) {
        if (done[v] || dist[v].infinite()) continue;
        if (u < 0 || dist[v] < dist[u]) u = v;
      }
      if (u < 0) break;
      done[u] = true;
      for (auto [v, e] : graph_.adjacency()[u]) {
        if (done[v]) continue;
        Weight w = dist[u] + edge_weight_[e];
        if (w < dist[v]) {
          dist[v] = w;
          if (pred) (*pred)[v] = {u, e};
          if (back) (*back)[v] = {Back::kEdge, 0, u, e};
        }
      }
    }
  }

  void Collect(int mask, int v, std::set<int> &edges) {
    const Back &b = back_[mask][v];
    switch (b.kind) {
      case Back::kBase:
      case Back::kNone:
        return;
      case Back::kMerge:
        Collect(b.submask, v, edges);
        Collect(mask ^ b.submask, v, edges);
        return;
      case Back::kEdge:
        edges.insert(b.edge);
        Collect(mask, b.from, edges);
        return;
    }
  }

  const DepGraph &graph_;
  std::size_t words_ = 1;
  std::vector<Weight> edge_weight_;
  std::vector<std::vector<Weight>> dp_;
  std::vector<std::vector<Back>> back_;
};

std::vector<bool> ComponentOf(const DepGraph &graph, int start) {
  std::vector<bool> seen(graph.node_count(), false);
  std::queue<int> queue;
  seen[start] = true;
  queue.push(start);
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop();
    for (auto [v, e] : graph.adjacency()[u]) {
      if (!seen[v]) {
        seen[v] = true;
        queue.push(v);
      }
    }
  }
  return seen;
}

}  // namespace

DependencyChain Reduce(const DepGraph &graph, std::span<const int> terminals) {
  if (terminals.empty()) throw Error("chain reduction needs a terminal");
  std::vector<int> unique;
  for (int t : terminals) {
    if (!graph.HasNode(t)) {
      throw Error("terminal " + std::to_string(t) + " is not a graph node");
    }
    if (std::find(unique.begin(), unique.end(), t) == unique.end()) {
      unique.push_back(t);
    }
  }

  DependencyChain chain;
  std::vector<bool> reachable = ComponentOf(graph, unique[0]);
  for (int t : unique) {
    if (reachable[t]) {
      chain.terminals.push_back(t);
    } else {
      chain.partial = true;
    }
  }
  if (chain.terminals.size() == 1) return chain;

  Solver solver(graph);
  std::set<int> edge_ids;
  if (static_cast<int>(chain.terminals.size()) <= kExactTerminalLimit) {
    edge_ids = solver.Exact(chain.terminals);
  } else {
    edge_ids = solver.Greedy(chain.terminals);
    chain.exact = false;
  }
  // Edge indices are ranks, so set order is document order.
  for (int id : edge_ids) {
    const GraphEdge &e = graph.edges()[id];
    chain.edges.push_back({e.head, e.label, e.dep});
  }
  return chain;
}

namespace {

std::string Sanitize(std::string text) {
  std::replace(text.begin(), text.end(), ':', '_');
  return text;
}

}  // namespace

std::string RenderChain(const DependencyChain &chain, const Document &doc) {
  std::string out;
  for (const ChainEdge &e : chain.edges) {
    if (!out.empty()) out += " ; ";
    out += Sanitize(doc.tokens.at(e.head));
    out += " -";
    out += Sanitize(e.label);
    out += "-> ";
    out += Sanitize(doc.tokens.at(e.dep));
  }
  return out;
}

std::string ChainText(const Document &doc, const DepGraph &graph,
                      const EventMention &query,
                      std::span<const std::string> answers) {
  std::vector<int> terminals{TerminalOf(query)};
  for (const std::string &id : answers) {
    const EventMention *m = doc.FindMention(id);
    if (m == nullptr) throw Error("unknown mention '" + id + "'");
    terminals.push_back(TerminalOf(*m));
  }
  return RenderChain(Reduce(graph, terminals), doc);
}

}  // namespace dpc
}  // namespace maq
