#ifndef MAQ_DPC_H_
#define MAQ_DPC_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maq/corpus.h"

// Dependency parsing chains: the smallest piece of a document's dependency
// graph that connects a query mention with its answers.
namespace maq {
namespace dpc {

inline constexpr std::string_view kBridgeLabel = "sent_bridge";

// Terminal sets up to this size are reduced exactly; larger sets fall back to
// growing the tree one shortest path at a time.
inline constexpr int kExactTerminalLimit = 4;

struct GraphEdge {
  int head = 0;
  int dep = 0;
  std::string label;
  bool bridge = false;
  // Position in document order: (earliest endpoint, latest endpoint, input
  // index). Lower ranks win ties.
  int rank = 0;
};

class DepGraph {
 public:
  DepGraph() = default;
  // Edges keep their input order as the final tie breaker.
  DepGraph(int node_count, std::vector<GraphEdge> edges);

  int node_count() const { return node_count_; }
  // Sorted by rank.
  const std::vector<GraphEdge> &edges() const { return edges_; }
  // Undirected view: adjacency[v] holds (neighbour, edge index) pairs.
  const std::vector<std::vector<std::pair<int, int>>> &adjacency() const {
    return adjacency_;
  }
  int bridge_count() const { return bridge_count_; }
  bool HasNode(int v) const { return v >= 0 && v < node_count_; }

 private:
  int node_count_ = 0;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;
  int bridge_count_ = 0;
};

// One node per token. When the document has dependency edges and more than
// one sentence, the root tokens of adjacent sentences are joined by a
// "sent_bridge" edge so that cross-sentence chains exist.
DepGraph BuildGraph(const Document &doc);

struct ChainEdge {
  int head = 0;
  std::string label;
  int dep = 0;

  bool operator==(const ChainEdge &) const = default;
};

struct DependencyChain {
  std::vector<ChainEdge> edges;  // document order
  std::vector<int> terminals;    // terminals actually connected
  // Some terminal was unreachable from the first (query) terminal.
  bool partial = false;
  // False when the shortest-path fallback was used.
  bool exact = true;

  int NodeCount() const;
};

// Connects terminals[0] (the query) with the other terminals using the fewest
// nodes, then the fewest edges, then the earliest edges in document order.
// Throws Error when a terminal is not a graph node or the list is empty.
DependencyChain Reduce(const DepGraph &graph, std::span<const int> terminals);

// "head -label-> dep" segments joined by " ; ". Colons in tokens and labels
// are written as '_' so the chain never contains the label delimiter.
std::string RenderChain(const DependencyChain &chain, const Document &doc);

// First token of the mention's span.
inline int TerminalOf(const EventMention &m) { return m.span.start; }

// Rendered chain linking the query mention with the given answer mentions.
std::string ChainText(const Document &doc, const DepGraph &graph,
                      const EventMention &query,
                      std::span<const std::string> answers);

}  // namespace dpc
}  // namespace maq

#endif  // MAQ_DPC_H_
