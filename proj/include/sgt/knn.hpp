#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "sgt/kdtree.hpp"

namespace sgt::approx {

/// K-nearest-neighbour regressor: the prediction is the unweighted mean of
/// the K nearest targets (Euclidean), ties broken by insertion order.
/// Immutable after fitting and safe for concurrent queries.
class KnnModel {
 public:
  KnnModel() = default;

  /// points: n x dim row-major; targets: n x target_dim row-major.
  /// Throws EmptyData when fewer than k points are given.
  static KnnModel fit(std::vector<double> points, std::size_t dim, std::vector<double> targets,
                      std::size_t target_dim, std::size_t k);

  std::size_t dim() const { return dim_; }
  std::size_t target_dim() const { return target_dim_; }
  std::size_t k() const { return k_; }
  std::size_t size() const { return target_dim_ ? targets_.size() / target_dim_ : 0; }

  std::span<const double> points() const { return points_; }
  std::span<const double> targets() const { return targets_; }
  std::span<const double> target(std::size_t i) const {
    return std::span<const double>(targets_).subspan(i * target_dim_, target_dim_);
  }

  /// Scalar-target prediction.
  double predict(std::span<const double> x) const;
  /// Vector-target prediction into `out` (size target_dim).
  void predict(std::span<const double> x, std::span<double> out) const;

  /// The k nearest stored points in (distance, index) order.
  std::size_t neighbors(std::span<const double> x, Neighbor* out) const;

  nlohmann::json to_json() const;
  static KnnModel from_json(const nlohmann::json& j);

 private:
  std::size_t dim_ = 0;
  std::size_t target_dim_ = 0;
  std::size_t k_ = 0;
  std::vector<double> points_;
  std::vector<double> targets_;
  KdTree tree_;
};

}  // namespace sgt::approx
