#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "sgt/common.hpp"
#include "sgt/subgoal_tree.hpp"

namespace sgt::graph {

using Node = std::int32_t;

/// Directed, logically complete graph. Missing edges carry kInfinity and the
/// diagonal is pinned to 0. Storage does not reject negative weights so that
/// algorithms can report them with their own error kind; validate() enforces
/// the full invariant set.
class WeightedGraph {
 public:
  explicit WeightedGraph(std::size_t n);

  std::size_t size() const { return n_; }
  double weight(Node i, Node j) const { return w_[index(i, j)]; }
  void set_weight(Node i, Node j, double w);

  /// Throws InvalidInput unless every finite weight is >= 0 and nothing is NaN.
  void validate() const;

 private:
  std::size_t index(Node i, Node j) const;

  std::size_t n_;
  std::vector<double> w_;
};

class ValueTable {
 public:
  ValueTable(std::size_t n, int depth);

  std::size_t size() const { return n_; }
  int depth() const { return depth_; }
  double operator()(Node i, Node j) const { return v_[static_cast<std::size_t>(i) * n_ + j]; }
  double& operator()(Node i, Node j) { return v_[static_cast<std::size_t>(i) * n_ + j]; }
  std::span<const double> values() const { return v_; }

 private:
  std::size_t n_;
  int depth_;
  std::vector<double> v_;
};

inline constexpr Node kNoMidpoint = -1;

/// V_0 .. V_K together with one minimizing midpoint per (k, s, s') for k >= 1.
class ValueStack {
 public:
  int max_depth() const { return static_cast<int>(tables_.size()) - 1; }
  std::size_t size() const { return tables_.empty() ? 0 : tables_.front().size(); }
  const ValueTable& level(int k) const { return tables_.at(static_cast<std::size_t>(k)); }
  const ValueTable& top() const { return tables_.back(); }
  Node midpoint(int k, Node s, Node g) const;

 private:
  friend ValueStack stdp_solve(const WeightedGraph& graph, int k_max);

  std::vector<ValueTable> tables_;
  std::vector<std::vector<Node>> midpoints_;  // midpoints_[k - 1] for level k
};

/// Sub-goal tree dynamic programming: V_k(s,s') = min_m V_{k-1}(s,m) + V_{k-1}(m,s'),
/// i.e. the shortest path using at most 2^k edges. Midpoint ties go to the
/// lowest node index.
ValueStack stdp_solve(const WeightedGraph& graph, int k_max);

/// Smallest k with 2^k >= n, the depth at which V_k is the true APSP table.
int levels_for_exact(std::size_t n);

/// Follows recorded midpoints from level k down to 0. Throws InfiniteValue if
/// g is not reachable from s within 2^k edges.
SubGoalTree<Node> extract_subgoal_tree(const ValueStack& stack, Node s, Node g, int k);

ValueTable floyd_warshall(const WeightedGraph& graph);

/// Single-source Dijkstra from every node. Throws NegativeWeight.
ValueTable dijkstra_apsp(const WeightedGraph& graph);

/// Sum of edge weights along a node sequence; repeated nodes are free.
double path_cost(const WeightedGraph& graph, std::span<const Node> path);

/// Text format: first line n, then one "i j w" line per finite edge.
WeightedGraph read_graph(std::istream& in);
void write_graph(std::ostream& out, const WeightedGraph& graph);

/// Uniform weights in [0, max_weight] on every off-diagonal pair, then each
/// edge dropped (set to infinity) with probability drop_fraction.
WeightedGraph random_graph(std::size_t n, double drop_fraction, double max_weight, Rng& rng);

}  // namespace sgt::graph
