#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "sgt/graph_core.hpp"

using namespace sgt;
using namespace sgt::graph;

namespace {

WeightedGraph two_node() {
  WeightedGraph g(2);
  g.set_weight(0, 1, 3.0);
  return g;
}

// a = 0, m = 1, b = 2
WeightedGraph three_node() {
  WeightedGraph g(3);
  g.set_weight(0, 2, 5.0);
  g.set_weight(0, 1, 1.0);
  g.set_weight(1, 2, 1.0);
  return g;
}

}  // namespace

TEST(StdpSolve, TwoNodeBaseCase) {
  const auto stack = stdp_solve(two_node(), 0);
  EXPECT_EQ(stack.level(0)(0, 1), 3.0);
  EXPECT_EQ(stack.level(0)(0, 0), 0.0);
  EXPECT_EQ(stack.level(0)(1, 0), kInfinity);
}

TEST(StdpSolve, ThreeNodeUsesMidpoint) {
  const auto stack = stdp_solve(three_node(), 1);
  EXPECT_EQ(stack.level(1)(0, 2), 2.0);
  EXPECT_EQ(stack.midpoint(1, 0, 2), 1);
  double best = kInfinity;
  for (Node m = 0; m < 3; ++m) best = std::min(best, saturating_add(stack.level(0)(0, m), stack.level(0)(m, 2)));
  EXPECT_EQ(stack.level(1)(0, 2), best);
}

TEST(StdpSolve, MidpointTieGoesToLowestIndex) {
  WeightedGraph g(4);
  g.set_weight(0, 1, 1.0);
  g.set_weight(1, 3, 1.0);
  g.set_weight(0, 2, 1.0);
  g.set_weight(2, 3, 1.0);
  const auto stack = stdp_solve(g, 1);
  EXPECT_EQ(stack.midpoint(1, 0, 3), 1);
}

TEST(StdpSolve, RejectsNegativeWeightsAndDepth) {
  WeightedGraph g(2);
  g.set_weight(0, 1, -1.0);
  EXPECT_THROW(stdp_solve(g, 1), Error);
  EXPECT_THROW(stdp_solve(two_node(), -1), Error);
}

TEST(StdpSolve, MatchesDijkstraAndFloydOnRandomGraphs) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + uniform_index(rng, 61);
    const auto g = random_graph(n, 0.3, 10.0, rng);
    const auto stack = stdp_solve(g, levels_for_exact(n));
    EXPECT_LE(oracle::max_abs_diff(stack.top().values(), dijkstra_apsp(g).values()), 1e-9) << "n=" << n;
    EXPECT_LE(oracle::max_abs_diff(stack.top().values(), floyd_warshall(g).values()), 1e-9) << "n=" << n;
  }
}

TEST(StdpSolve, LevelsAreBoundedEdgeShortestPaths) {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 5);
    const auto g = random_graph(n, 0.5, 10.0, rng);
    const auto stack = stdp_solve(g, 3);
    for (int k = 0; k <= 3; ++k)
      for (Node s = 0; s < static_cast<Node>(n); ++s)
        for (Node t = 0; t < static_cast<Node>(n); ++t) {
          const double want = oracle::bounded_path_cost(g, s, t, 1 << k);
          const double got = stack.level(k)(s, t);
          if (std::isinf(want)) {
            EXPECT_TRUE(std::isinf(got));
          } else {
            EXPECT_NEAR(got, want, 1e-9);
          }
        }
  }
}

TEST(StdpSolve, MonotoneWithZeroDiagonal) {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + uniform_index(rng, 30);
    const auto g = random_graph(n, 0.6, 5.0, rng);
    const auto stack = stdp_solve(g, 6);
    for (int k = 0; k <= 6; ++k)
      for (Node i = 0; i < static_cast<Node>(n); ++i) {
        EXPECT_EQ(stack.level(k)(i, i), 0.0);
        if (k == 0) continue;
        for (Node j = 0; j < static_cast<Node>(n); ++j) EXPECT_LE(stack.level(k)(i, j), stack.level(k - 1)(i, j));
      }
  }
}

TEST(ExtractSubgoalTree, SelfPathIsAllStart) {
  const auto stack = stdp_solve(three_node(), 2);
  const auto tree = extract_subgoal_tree(stack, 1, 1, 2);
  for (Node v : tree.flattened()) EXPECT_EQ(v, 1);
  EXPECT_EQ(path_cost(three_node(), tree.flattened()), 0.0);
}

TEST(ExtractSubgoalTree, ThreeNodeFlattening) {
  const auto g = three_node();
  const auto tree = extract_subgoal_tree(stdp_solve(g, 1), 0, 2, 1);
  ASSERT_EQ(tree.size(), 3u);
  EXPECT_EQ(tree.at(0), 0);
  EXPECT_EQ(tree.at(1), 1);
  EXPECT_EQ(tree.at(2), 2);
  EXPECT_EQ(path_cost(g, tree.flattened()), 2.0);
}

TEST(ExtractSubgoalTree, UnreachableThrows) {
  try {
    extract_subgoal_tree(stdp_solve(two_node(), 1), 1, 0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfiniteValue);
  }
}

TEST(ExtractSubgoalTree, ReconstructionCostMatchesValue) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = random_graph(16, 0.3, 10.0, rng);
    const auto stack = stdp_solve(g, 4);
    const auto dij = dijkstra_apsp(g);
    for (Node s = 0; s < 16; ++s)
      for (Node t = 0; t < 16; ++t) {
        if (std::isinf(stack.level(4)(s, t))) continue;
        const auto tree = extract_subgoal_tree(stack, s, t, 4);
        EXPECT_EQ(tree.size(), 17u);
        EXPECT_NEAR(path_cost(g, tree.flattened()), stack.level(4)(s, t), 1e-9);
        EXPECT_NEAR(path_cost(g, tree.flattened()), dij(s, t), 1e-9);
      }
  }
}

TEST(FloydWarshall, SmallGraphs) {
  const auto two = floyd_warshall(two_node());
  EXPECT_EQ(two(0, 1), 3.0);
  EXPECT_EQ(two(1, 0), kInfinity);
  EXPECT_EQ(two(1, 1), 0.0);
  EXPECT_EQ(floyd_warshall(three_node())(0, 2), 2.0);
}

TEST(Dijkstra, SmallGraphs) {
  const auto one = dijkstra_apsp(WeightedGraph(1));
  EXPECT_EQ(one(0, 0), 0.0);
  EXPECT_EQ(dijkstra_apsp(three_node())(0, 2), 2.0);
  WeightedGraph chain(5);
  for (Node i = 0; i < 4; ++i) chain.set_weight(i, i + 1, 1.0);
  EXPECT_EQ(dijkstra_apsp(chain)(0, 4), 4.0);
}

TEST(Dijkstra, NegativeWeightKind) {
  WeightedGraph g(2);
  g.set_weight(0, 1, -2.0);
  try {
    dijkstra_apsp(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeWeight);
  }
}

TEST(PathCost, Examples) {
  const Node a[] = {0};
  EXPECT_EQ(path_cost(three_node(), a), 0.0);
  const Node amb[] = {0, 1, 2};
  EXPECT_EQ(path_cost(three_node(), amb), 2.0);
  const Node aab[] = {0, 0, 1};
  EXPECT_EQ(path_cost(two_node(), aab), 3.0);
}

TEST(GraphIo, RoundTrip) {
  Rng rng(15);
  const auto g = random_graph(9, 0.4, 10.0, rng);
  std::stringstream ss;
  write_graph(ss, g);
  const auto back = read_graph(ss);
  ASSERT_EQ(back.size(), g.size());
  for (Node i = 0; i < 9; ++i)
    for (Node j = 0; j < 9; ++j) EXPECT_EQ(back.weight(i, j), g.weight(i, j));
}

TEST(GraphIo, RejectsMalformed) {
  std::stringstream bad("3\n0 1 x\n");
  EXPECT_THROW(read_graph(bad), Error);
  std::stringstream empty("");
  EXPECT_THROW(read_graph(empty), Error);
}

TEST(Saturation, InfinityAbsorbs) {
  EXPECT_EQ(saturating_add(kInfinity, 3.0), kInfinity);
  EXPECT_EQ(saturating_add(2.0, 3.0), 5.0);
}
