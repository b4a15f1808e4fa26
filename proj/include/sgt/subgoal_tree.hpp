#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sgt/common.hpp"

namespace sgt {

/// A complete binary midpoint tree of depth K, stored as its in-order
/// flattening: element 0 is the start, element 2^K the goal, and the node
/// covering flattened interval [lo, hi] sits at (lo + hi) / 2.
template <class State>
class SubGoalTree {
 public:
  SubGoalTree(int depth, const State& start, const State& goal)
      : depth_(depth), nodes_((std::size_t{1} << depth) + 1, start) {
    if (depth < 0 || depth > 30) throw Error(ErrorKind::InvalidInput, "sub-goal tree depth out of range");
    nodes_.back() = goal;
  }

  int depth() const { return depth_; }
  std::size_t size() const { return nodes_.size(); }
  const State& start() const { return nodes_.front(); }
  const State& goal() const { return nodes_.back(); }

  std::span<const State> flattened() const { return nodes_; }
  State& at(std::size_t i) { return nodes_.at(i); }
  const State& at(std::size_t i) const { return nodes_.at(i); }

  /// Visits every internal node top-down: fn(level_from_root, segment_index,
  /// lo, hi) where the node to fill is (lo + hi) / 2.
  template <class Fn>
  void for_each_internal(Fn&& fn) const {
    const std::size_t span = nodes_.size() - 1;
    for (int level = 0; level < depth_; ++level) {
      const std::size_t width = span >> level;
      const std::size_t count = std::size_t{1} << level;
      for (std::size_t j = 0; j < count; ++j) fn(level, j, j * width, (j + 1) * width);
    }
  }

 private:
  int depth_;
  std::vector<State> nodes_;
};

}  // namespace sgt
