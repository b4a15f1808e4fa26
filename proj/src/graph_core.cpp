#include "sgt/graph_core.hpp"

#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>

namespace sgt::graph {

WeightedGraph::WeightedGraph(std::size_t n) : n_(n), w_(n * n, kInfinity) {
  if (n == 0) throw Error(ErrorKind::InvalidInput, "graph must have at least one node");
  for (std::size_t i = 0; i < n; ++i) w_[i * n + i] = 0.0;
}

std::size_t WeightedGraph::index(Node i, Node j) const {
  if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n_ || static_cast<std::size_t>(j) >= n_) {
    throw Error(ErrorKind::InvalidInput, "node index out of range");
  }
  return static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j);
}

void WeightedGraph::set_weight(Node i, Node j, double w) {
  if (std::isnan(w)) throw Error(ErrorKind::InvalidInput, "edge weight is NaN");
  if (i == j) {
    if (w != 0.0) throw Error(ErrorKind::InvalidInput, "self edge weight must be 0");
    return;
  }
  w_[index(i, j)] = w;
}

void WeightedGraph::validate() const {
  for (double w : w_) {
    if (std::isnan(w) || w < 0.0) throw Error(ErrorKind::InvalidInput, "graph has a negative or NaN weight");
  }
}

ValueTable::ValueTable(std::size_t n, int depth) : n_(n), depth_(depth), v_(n * n, kInfinity) {}

Node ValueStack::midpoint(int k, Node s, Node g) const {
  if (k < 1 || k > max_depth()) throw Error(ErrorKind::InvalidInput, "midpoints exist only for levels 1..K");
  return midpoints_[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(s) * size() + g];
}

int levels_for_exact(std::size_t n) {
  int k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

ValueStack stdp_solve(const WeightedGraph& graph, int k_max) {
  if (k_max < 0) throw Error(ErrorKind::InvalidInput, "k_max must be non-negative");
  graph.validate();
  const std::size_t n = graph.size();
  const auto nodes = static_cast<Node>(n);

  ValueStack stack;
  stack.tables_.reserve(static_cast<std::size_t>(k_max) + 1);
  ValueTable base(n, 0);
  for (Node s = 0; s < nodes; ++s)
    for (Node t = 0; t < nodes; ++t) base(s, t) = (s == t) ? 0.0 : graph.weight(s, t);
  stack.tables_.push_back(std::move(base));

  for (int k = 1; k <= k_max; ++k) {
    const ValueTable& prev = stack.tables_.back();
    ValueTable next(n, k);
    std::vector<Node> mids(n * n, kNoMidpoint);
    // Rows are independent given the completed previous level.
    parallel_for(n, [&](std::size_t row) {
      const auto s = static_cast<Node>(row);
      for (Node t = 0; t < nodes; ++t) {
        if (s == t) {
          next(s, t) = 0.0;
          mids[row * n + t] = s;
          continue;
        }
        double best = kInfinity;
        Node arg = kNoMidpoint;
        for (Node m = 0; m < nodes; ++m) {
          const double v = saturating_add(prev(s, m), prev(m, t));
          if (v < best) {
            best = v;
            arg = m;
          }
        }
        next(s, t) = best;
        mids[row * n + t] = arg;
      }
    });
    stack.tables_.push_back(std::move(next));
    stack.midpoints_.push_back(std::move(mids));
  }
  return stack;
}

SubGoalTree<Node> extract_subgoal_tree(const ValueStack& stack, Node s, Node g, int k) {
  if (k < 0 || k > stack.max_depth()) throw Error(ErrorKind::InvalidInput, "tree depth exceeds stack depth");
  const auto n = static_cast<Node>(stack.size());
  if (s < 0 || g < 0 || s >= n || g >= n) throw Error(ErrorKind::InvalidInput, "node index out of range");
  if (std::isinf(stack.level(k)(s, g))) {
    throw Error(ErrorKind::InfiniteValue, "no path within 2^k steps from " + std::to_string(s) + " to " +
                                              std::to_string(g));
  }
  SubGoalTree<Node> tree(k, s, g);
  // Level-from-root L corresponds to value level k - L.
  tree.for_each_internal([&](int level, std::size_t, std::size_t lo, std::size_t hi) {
    const Node a = tree.at(lo);
    const Node b = tree.at(hi);
    tree.at((lo + hi) / 2) = (a == b) ? a : stack.midpoint(k - level, a, b);
  });
  return tree;
}

ValueTable floyd_warshall(const WeightedGraph& graph) {
  graph.validate();
  const auto n = static_cast<Node>(graph.size());
  ValueTable d(graph.size(), -1);
  for (Node s = 0; s < n; ++s)
    for (Node t = 0; t < n; ++t) d(s, t) = graph.weight(s, t);
  for (Node m = 0; m < n; ++m)
    for (Node s = 0; s < n; ++s) {
      if (std::isinf(d(s, m))) continue;
      for (Node t = 0; t < n; ++t) {
        const double via = saturating_add(d(s, m), d(m, t));
        if (via < d(s, t)) d(s, t) = via;
      }
    }
  return d;
}

ValueTable dijkstra_apsp(const WeightedGraph& graph) {
  const auto n = static_cast<Node>(graph.size());
  for (Node s = 0; s < n; ++s)
    for (Node t = 0; t < n; ++t) {
      const double w = graph.weight(s, t);
      if (std::isnan(w)) throw Error(ErrorKind::InvalidInput, "graph has a NaN weight");
      if (w < 0.0) throw Error(ErrorKind::NegativeWeight, "Dijkstra requires non-negative weights");
    }

  ValueTable d(graph.size(), -1);
  using Entry = std::pair<double, Node>;
  for (Node src = 0; src < n; ++src) {
    std::vector<double> dist(graph.size(), kInfinity);
    std::vector<bool> done(graph.size(), false);
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    dist[src] = 0.0;
    open.emplace(0.0, src);
    while (!open.empty()) {
      const auto [du, u] = open.top();
      open.pop();
      if (done[u]) continue;
      done[u] = true;
      for (Node v = 0; v < n; ++v) {
        const double w = graph.weight(u, v);
        if (v == u || std::isinf(w)) continue;
        if (du + w < dist[v]) {
          dist[v] = du + w;
          open.emplace(dist[v], v);
        }
      }
    }
    for (Node t = 0; t < n; ++t) d(src, t) = dist[t];
  }
  return d;
}

double path_cost(const WeightedGraph& graph, std::span<const Node> path) {
  if (path.empty()) throw Error(ErrorKind::InvalidInput, "path must be non-empty");
  double cost = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i] == path[i - 1]) continue;
    cost = saturating_add(cost, graph.weight(path[i - 1], path[i]));
  }
  return cost;
}

WeightedGraph read_graph(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first != std::string::npos && line[first] != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw Error(ErrorKind::InvalidInput, "graph file is empty");
  long long n = 0;
  {
    std::istringstream header(line);
    if (!(header >> n) || n < 1) throw Error(ErrorKind::InvalidInput, "graph header must be a positive node count");
  }
  WeightedGraph graph(static_cast<std::size_t>(n));
  std::size_t line_no = 1;
  while (next_line()) {
    ++line_no;
    std::istringstream row(line);
    long long i = 0;
    long long j = 0;
    double w = 0.0;
    if (!(row >> i >> j >> w) || i < 0 || j < 0 || i >= n || j >= n) {
      throw Error(ErrorKind::InvalidInput, "malformed edge line " + std::to_string(line_no) + ": " + line);
    }
    graph.set_weight(static_cast<Node>(i), static_cast<Node>(j), w);
  }
  return graph;
}

void write_graph(std::ostream& out, const WeightedGraph& graph) {
  const auto n = static_cast<Node>(graph.size());
  out << n << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Node i = 0; i < n; ++i)
    for (Node j = 0; j < n; ++j) {
      if (i == j || std::isinf(graph.weight(i, j))) continue;
      out << i << ' ' << j << ' ' << graph.weight(i, j) << '\n';
    }
}

WeightedGraph random_graph(std::size_t n, double drop_fraction, double max_weight, Rng& rng) {
  WeightedGraph graph(n);
  const auto nodes = static_cast<Node>(n);
  for (Node i = 0; i < nodes; ++i)
    for (Node j = 0; j < nodes; ++j) {
      if (i == j) continue;
      const double w = uniform01(rng) * max_weight;
      if (uniform01(rng) >= drop_fraction) graph.set_weight(i, j, w);
    }
  return graph;
}

}  // namespace sgt::graph
