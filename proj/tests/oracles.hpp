#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "sgt/common.hpp"
#include "sgt/graph_core.hpp"
#include "sgt/kdtree.hpp"
#include "sgt/mdn.hpp"

namespace oracle {

// Cheapest path from s to g using at most max_edges edges, by enumerating
// every simple path. With non-negative weights a cycle never helps, so simple
// paths are enough.
inline double bounded_path_cost(const sgt::graph::WeightedGraph& g, int s, int goal, int max_edges) {
  if (s == goal) return 0.0;
  const int n = static_cast<int>(g.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> used(n, false);
  std::function<void(int, double, int)> dfs = [&](int at, double cost, int edges) {
    if (at == goal) {
      best = std::min(best, cost);
      return;
    }
    if (edges == max_edges) return;
    for (int next = 0; next < n; ++next) {
      if (used[next] || next == at) continue;
      const double w = g.weight(at, next);
      if (w == std::numeric_limits<double>::infinity()) continue;
      used[next] = true;
      dfs(next, cost + w, edges + 1);
      used[next] = false;
    }
  };
  used[s] = true;
  dfs(s, 0.0, 0);
  return best;
}

inline std::vector<sgt::approx::Neighbor> linear_scan(std::span<const double> points, std::size_t dim,
                                                      std::span<const double> q, std::size_t k) {
  std::vector<sgt::approx::Neighbor> all;
  for (std::size_t i = 0; i < points.size() / dim; ++i) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = points[i * dim + c] - q[c];
      d2 += d * d;
    }
    all.push_back({static_cast<std::uint32_t>(i), d2});
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  });
  all.resize(std::min(k, all.size()));
  return all;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

// Analytic MDN gradient against central differences on one random small
// network and batch; returns the worst relative error. Gradients smaller
// than floor * max(1, |loss|) are compared absolutely, since central
// differences cannot resolve them against rounding in the loss.
inline double mdn_gradient_error(std::uint64_t seed, double eps = 1e-5, double floor = 1e-6) {
  sgt::Rng rng(seed);
  const std::size_t d_in = 2 + sgt::uniform_index(rng, 4);
  const std::size_t modes = 1 + sgt::uniform_index(rng, 3);
  const std::size_t batch = 1 + sgt::uniform_index(rng, 6);
  sgt::approx::MdnModel model(d_in, modes, 8, rng());
  for (auto& p : model.params()) p += 0.1 * (sgt::uniform01(rng) - 0.5);
  std::vector<double> cond(batch * d_in), target(batch * 2);
  for (auto& c : cond) c = sgt::uniform01(rng);
  for (auto& t : target) t = sgt::uniform01(rng);
  std::vector<double> grad(model.num_params());
  const double loss_scale = std::max(1.0, std::abs(model.nll(cond, target, batch, grad)));
  double worst = 0.0;
  auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + eps;
    const double up = model.nll(cond, target, batch);
    params[i] = keep - eps;
    const double down = model.nll(cond, target, batch);
    params[i] = keep;
    const double fd = (up - down) / (2.0 * eps);
    const double scale = std::max({std::abs(fd), std::abs(grad[i]), floor * loss_scale});
    worst = std::max(worst, std::abs(fd - grad[i]) / scale);
  }
  return worst;
}

}  // namespace oracle
