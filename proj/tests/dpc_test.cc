#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "maq/corpus.h"
#include "maq/dpc.h"
#include "maq/errors.h"
#include "oracles.h"
#include "test_util.h"

namespace maq {
namespace {

using dpc::DepGraph;
using dpc::GraphEdge;

DepGraph GraphOf(int nodes, const std::vector<testing::PlainEdge> &edges) {
  std::vector<GraphEdge> g;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    g.push_back({edges[i].a, edges[i].b, "r" + std::to_string(i), false, 0});
  }
  return DepGraph(nodes, std::move(g));
}

std::vector<std::string> Labels(const dpc::DependencyChain &chain) {
  std::vector<std::string> out;
  for (const dpc::ChainEdge &e : chain.edges) out.push_back(e.label);
  return out;
}

bool Connected(const dpc::DependencyChain &chain, const std::vector<int> &terms) {
  if (chain.edges.empty()) return true;
  std::vector<int> nodes;
  for (const auto &e : chain.edges) {
    nodes.push_back(e.head);
    nodes.push_back(e.dep);
  }
  std::vector<int> reached{nodes[0]};
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto &e : chain.edges) {
      bool h = std::count(reached.begin(), reached.end(), e.head) > 0;
      bool d = std::count(reached.begin(), reached.end(), e.dep) > 0;
      if (h != d) {
        reached.push_back(h ? e.dep : e.head);
        grew = true;
      }
    }
  }
  for (int n : nodes) {
    if (!std::count(reached.begin(), reached.end(), n)) return false;
  }
  for (int t : terms) {
    if (!std::count(reached.begin(), reached.end(), t)) return false;
  }
  return true;
}

TEST_CASE("single terminal gives an empty chain") {
  DepGraph g = GraphOf(3, {{0, 1}, {1, 2}});
  std::vector<int> t{1};
  dpc::DependencyChain chain = dpc::Reduce(g, t);
  CHECK(chain.edges.empty());
  CHECK_FALSE(chain.partial);
  CHECK(chain.NodeCount() == 1);
}

TEST_CASE("appearance order breaks node-count ties") {
  // A=0, C=1, B=2, D=3. r1 and r3 both join A and C; r1 comes first.
  std::vector<GraphEdge> edges{{0, 1, "r1", false, 0},
                               {1, 2, "r2", false, 0},
                               {0, 1, "r3", false, 0},
                               {2, 3, "r4", false, 0}};
  DepGraph g(4, edges);
  std::vector<int> t{0, 2, 3};
  dpc::DependencyChain chain = dpc::Reduce(g, t);
  CHECK(Labels(chain) == std::vector<std::string>{"r1", "r2", "r4"});
  CHECK(chain.exact);

  std::vector<GraphEdge> swapped{edges[2], edges[1], edges[0], edges[3]};
  CHECK(Labels(dpc::Reduce(DepGraph(4, swapped), t)) ==
        std::vector<std::string>{"r3", "r2", "r4"});
}

TEST_CASE("path graph keeps the whole path") {
  DepGraph g = GraphOf(4, {{0, 1}, {1, 2}, {2, 3}});
  std::vector<int> t{0, 3};
  CHECK(dpc::Reduce(g, t).edges.size() == 3);
}

TEST_CASE("unreachable terminals mark the chain partial") {
  DepGraph g = GraphOf(5, {{0, 1}, {3, 4}});
  std::vector<int> t{0, 1, 4};
  dpc::DependencyChain chain = dpc::Reduce(g, t);
  CHECK(chain.partial);
  CHECK(Labels(chain) == std::vector<std::string>{"r0"});
  CHECK(chain.terminals == std::vector<int>{0, 1});
}

TEST_CASE("bad terminals throw") {
  DepGraph g = GraphOf(2, {{0, 1}});
  std::vector<int> none;
  std::vector<int> outside{0, 5};
  CHECK_THROWS_AS(dpc::Reduce(g, none), Error);
  CHECK_THROWS_AS(dpc::Reduce(g, outside), Error);
}

TEST_CASE("reduce matches exhaustive search on random graphs") {
  testing::Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    int nodes = rng.Int(2, 12);
    std::vector<testing::PlainEdge> edges;
    int count = rng.Int(1, std::min(16, nodes * 2));
    for (int i = 0; i < count; ++i) {
      int a = rng.Int(0, nodes - 1), b = rng.Int(0, nodes - 1);
      if (a != b) edges.push_back({a, b});
    }
    if (edges.empty()) edges.push_back({0, 1});
    std::vector<int> terms(rng.Int(1, std::min(4, nodes)));
    for (int &t : terms) t = rng.Int(0, nodes - 1);

    bool all = false;
    std::vector<int> expect = testing::ExhaustiveChain(nodes, edges, terms, all);
    dpc::DependencyChain chain = dpc::Reduce(GraphOf(nodes, edges), terms);
    std::vector<std::string> expect_labels;
    for (int i : expect) expect_labels.push_back("r" + std::to_string(i));
    CHECK(Labels(chain) == expect_labels);
    CHECK(chain.partial == !all);
    CHECK(Connected(chain, chain.terminals));
  }
}

TEST_CASE("many terminals fall back to a connected chain") {
  testing::Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    int nodes = rng.Int(6, 12);
    std::vector<testing::PlainEdge> edges;
    for (int v = 1; v < nodes; ++v) edges.push_back({rng.Int(0, v - 1), v});
    for (int extra = rng.Int(0, 5); extra > 0; --extra) {
      int a = rng.Int(0, nodes - 1), b = rng.Int(0, nodes - 1);
      if (a != b) edges.push_back({a, b});
    }
    std::vector<int> terms(rng.Int(5, 6));
    for (int &t : terms) t = rng.Int(0, nodes - 1);
    dpc::DependencyChain chain = dpc::Reduce(GraphOf(nodes, edges), terms);
    CHECK(Connected(chain, terms));
    CHECK_FALSE(chain.partial);
    std::vector<int> uniq = terms;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    CHECK(chain.exact == (uniq.size() <= 4));
    CHECK(static_cast<int>(chain.edges.size()) == chain.NodeCount() - 1);
  }
}

TEST_CASE("build graph") {
  Document one = testing::MakeDoc("o", {"a", "b", "c", "d"}, {});
  one.dep_edges = {{1, 0, "x"}, {1, 2, "y"}, {2, 3, "z"}};
  DepGraph g1 = dpc::BuildGraph(one);
  CHECK(g1.edges().size() == 3);
  CHECK(g1.bridge_count() == 0);

  std::vector<Document> docs =
      corpus::LoadCorpus(testing::Fixture("corpus.jsonl"));
  DepGraph g2 = dpc::BuildGraph(docs[0]);
  CHECK(g2.edges().size() == docs[0].dep_edges.size() + 1);
  REQUIRE(g2.bridge_count() == 1);
  for (const GraphEdge &e : g2.edges()) {
    if (e.bridge) {
      CHECK(e.head == 2);
      CHECK(e.dep == 8);
      CHECK(e.label == dpc::kBridgeLabel);
    }
  }
  DepGraph g3 = dpc::BuildGraph(docs[1]);
  CHECK(g3.edges().empty());
}

TEST_CASE("render chain") {
  Document doc = testing::MakeDoc("r", {"court", "ruled", "today"}, {});
  dpc::DependencyChain chain;
  CHECK(dpc::RenderChain(chain, doc).empty());
  chain.edges = {{1, "nsubj", 0}};
  CHECK(dpc::RenderChain(chain, doc) == "ruled -nsubj-> court");
  chain.edges.push_back({1, "obl:tmod", 2});
  CHECK(dpc::RenderChain(chain, doc) ==
        "ruled -nsubj-> court ; ruled -obl_tmod-> today");
}

TEST_CASE("chain text crosses sentences through the bridge") {
  std::vector<Document> docs =
      corpus::LoadCorpus(testing::Fixture("corpus.jsonl"));
  const Document &doc = docs[0];
  DepGraph g = dpc::BuildGraph(doc);
  std::vector<std::string> answers{"m2"};
  CHECK(dpc::ChainText(doc, g, *doc.FindMention("m1"), answers) ==
        "ruled -sent_bridge-> angered ; angered -nsubj-> ruling");
}

TEST_CASE("reduce is deterministic") {
  DepGraph g = GraphOf(6, {{0, 1}, {1, 2}, {0, 3}, {3, 2}, {2, 4}, {4, 5}, {1, 5}});
  std::vector<int> t{0, 2, 5};
  dpc::DependencyChain first = dpc::Reduce(g, t);
  for (int i = 0; i < 5; ++i) CHECK(dpc::Reduce(g, t).edges == first.edges);
}

}  // namespace
}  // namespace maq
