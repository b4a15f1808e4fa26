#include "sgt/knn.hpp"

#include <array>
#include <cmath>

#include "sgt/common.hpp"

namespace sgt::approx {

KnnModel KnnModel::fit(std::vector<double> points, std::size_t dim, std::vector<double> targets,
                       std::size_t target_dim, std::size_t k) {
  if (dim == 0 || target_dim == 0) throw Error(ErrorKind::InvalidInput, "dimensions must be positive");
  if (k == 0 || k > kMaxNeighbors) throw Error(ErrorKind::InvalidInput, "neighbour count must be in 1..64");
  if (points.size() % dim != 0 || targets.size() % target_dim != 0 ||
      points.size() / dim != targets.size() / target_dim) {
    throw Error(ErrorKind::InvalidInput, "points and targets are inconsistent");
  }
  const std::size_t n = points.size() / dim;
  if (n == 0 || n < k) throw Error(ErrorKind::EmptyData, "KNN fit needs at least k points");
  for (double v : points)
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "non-finite KNN input");

  KnnModel m;
  m.dim_ = dim;
  m.target_dim_ = target_dim;
  m.k_ = k;
  m.tree_ = KdTree(points, dim);
  m.points_ = std::move(points);
  m.targets_ = std::move(targets);
  return m;
}

std::size_t KnnModel::neighbors(std::span<const double> x, Neighbor* out) const {
  if (x.size() != dim_) throw Error(ErrorKind::InvalidInput, "KNN query dimension mismatch");
  return tree_.knn(x, k_, out);
}

double KnnModel::predict(std::span<const double> x) const {
  if (target_dim_ != 1) throw Error(ErrorKind::InvalidInput, "scalar predict on a vector-target model");
  std::array<Neighbor, kMaxNeighbors> nb;
  const std::size_t count = neighbors(x, nb.data());
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += targets_[nb[i].index];
  return sum / static_cast<double>(count);
}

void KnnModel::predict(std::span<const double> x, std::span<double> out) const {
  if (out.size() != target_dim_) throw Error(ErrorKind::InvalidInput, "output size mismatch");
  std::array<Neighbor, kMaxNeighbors> nb;
  const std::size_t count = neighbors(x, nb.data());
  for (auto& v : out) v = 0.0;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t t = 0; t < target_dim_; ++t) out[t] += targets_[nb[i].index * target_dim_ + t];
  for (auto& v : out) v /= static_cast<double>(count);
}

nlohmann::json KnnModel::to_json() const {
  return {{"d", dim_}, {"K", k_}, {"target_dim", target_dim_}, {"points", points_}, {"targets", targets_}};
}

KnnModel KnnModel::from_json(const nlohmann::json& j) {
  try {
    const auto dim = j.at("d").get<std::size_t>();
    const auto k = j.at("K").get<std::size_t>();
    const auto target_dim = j.value("target_dim", std::size_t{1});
    return fit(j.at("points").get<std::vector<double>>(), dim, j.at("targets").get<std::vector<double>>(), target_dim, k);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("bad KNN snapshot: ") + e.what());
  }
}

}  // namespace sgt::approx
