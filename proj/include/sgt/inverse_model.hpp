#pragma once

#include "sgt/common.hpp"
#include "sgt/env2d.hpp"
#include "sgt/knn.hpp"

namespace sgt::approx {

/// f(s, s') -> u by majority vote over the K nearest observed moves; vote
/// ties go to the smallest action index.
class InverseModel {
 public:
  InverseModel() = default;
  explicit InverseModel(KnnModel knn) : knn_(std::move(knn)) {}

  int query(const Point2& s, const Point2& s_next) const;
  const KnnModel& knn() const { return knn_; }

 private:
  KnnModel knn_;
};

/// Fits on the non-colliding tuples only; throws EmptyData when fewer than k remain.
InverseModel inverse_fit(const env::TransitionDataset& data, std::size_t k = 5);

}  // namespace sgt::approx
