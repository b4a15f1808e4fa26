#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "sgt/common.hpp"
#include "sgt/env2d.hpp"
#include "sgt/kdtree.hpp"
#include "sgt/knn.hpp"
#include "sgt/subgoal_tree.hpp"

namespace sgt::rl {

/// Candidate set for the midpoint search. The default is a res x res lattice of
/// cell centres over the unit square in row-major order (row = y).
class MidpointGrid {
 public:
  static MidpointGrid uniform(int resolution = 50);
  /// The uniform lattice restricted to cells whose centre has a dataset state
  /// within a quarter cell, i.e. cells the data shows to be valid states.
  static MidpointGrid supported(int resolution, const env::TransitionDataset& data);
  explicit MidpointGrid(std::vector<Point2> points, int resolution = 0);

  int resolution() const { return resolution_; }
  std::span<const Point2> points() const { return points_; }
  std::size_t size() const { return points_.size(); }

 private:
  int resolution_;
  std::vector<Point2> points_;
};

inline std::array<double, 4> pair_input(const Point2& s, const Point2& g) { return {s.x, s.y, g.x, g.y}; }

/// V(s, g) from a fitted pairwise value model.
inline double pair_value(const approx::KnnModel& v, const Point2& s, const Point2& g) {
  return v.predict(pair_input(s, g));
}

struct GridMinimum {
  std::size_t index = 0;
  Point2 point;
  double value = kInfinity;
};

/// min over candidates m of value(s, m) + value(m, g); ties resolve to the
/// first candidate in grid order. `value` must be non-negative, which lets the
/// second query be skipped whenever the first term alone cannot win.
template <class ValueFn>
GridMinimum min_over_grid(ValueFn&& value, const Point2& s, const Point2& g, std::span<const Point2> grid) {
  GridMinimum best;
  if (!grid.empty()) best.point = grid.front();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double head = value(s, grid[i]);
    if (!(head < best.value)) continue;
    const double total = head + value(grid[i], g);
    if (total < best.value) {
      best = {i, grid[i], total};
    }
  }
  return best;
}

GridMinimum min_over_grid(const approx::KnnModel& v, const Point2& s, const Point2& g, const MidpointGrid& grid);

/// V_0 fit data: observed moves (s, s') -> c, random state pairs -> c_max and
/// self pairs (s, s) -> 0. Blocked moves (s' == s) are self-loops and are
/// left out because V(s, s) is 0 by definition. Throws BadCmax when c_max
/// does not exceed every fitted cost.
approx::KnnModel fit_v0(const env::TransitionDataset& data, double c_max, std::size_t n_random, std::size_t n_self,
                        std::uint64_t seed, std::size_t knn_k = 5);

struct ApproxValueStack {
  std::vector<approx::KnnModel> levels;  // V_0 .. V_K
  double c_max = 10.0;
  MidpointGrid grid = MidpointGrid::uniform(50);

  int max_depth() const { return static_cast<int>(levels.size()) - 1; }
  double value(int k, const Point2& s, const Point2& g) const { return pair_value(levels.at(static_cast<std::size_t>(k)), s, g); }
};

struct ApproxStdpConfig {
  int levels = 5;
  double c_max = 10.0;
  std::size_t n_goal_pairs = 10000;
  std::size_t n_random = 0;  // 0: |D| / 5
  std::size_t n_self = 0;    // 0: |D| / 5
  std::size_t knn_k = 5;
  int grid_resolution = 50;
  bool grid_support = true;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

using GoalPairSource = std::function<std::vector<std::pair<Point2, Point2>>(int level)>;

/// Level recursion shared by the continuous algorithm and the discrete bridge:
/// for k = 1..levels, targets min_m V_{k-1}(s, m) + V_{k-1}(m, g) over `grid`
/// for the pairs drawn at that level, then a fresh KNN fit.
ApproxValueStack approx_stdp_levels(approx::KnnModel v0, int levels, const MidpointGrid& grid,
                                    const GoalPairSource& pairs, std::size_t knn_k, double c_max, unsigned workers = 0);

ApproxValueStack approx_stdp(const env::TransitionDataset& data, const ApproxStdpConfig& cfg);

/// Sub-goal tree of 2D points: the root midpoint minimises over V_{depth-1},
/// children over V_{depth-2}, down to V_0.
SubGoalTree<Point2> extract_tree_approx(const ApproxValueStack& stack, const Point2& s, const Point2& g, int depth);

void save_stack(const ApproxValueStack& stack, const std::filesystem::path& dir);
ApproxValueStack load_stack(const std::filesystem::path& dir);

}  // namespace sgt::rl
