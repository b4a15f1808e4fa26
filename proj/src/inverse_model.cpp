#include "sgt/inverse_model.hpp"

#include <array>

namespace sgt::approx {

InverseModel inverse_fit(const env::TransitionDataset& data, std::size_t k) {
  std::vector<double> points;
  std::vector<double> targets;
  for (const auto& t : data) {
    if (t.s_next == t.s) continue;
    points.insert(points.end(), {t.s.x, t.s.y, t.s_next.x, t.s_next.y});
    targets.push_back(static_cast<double>(t.u));
  }
  if (targets.size() < k) throw Error(ErrorKind::EmptyData, "not enough collision-free transitions for the inverse model");
  return InverseModel(KnnModel::fit(std::move(points), 4, std::move(targets), 1, k));
}

int InverseModel::query(const Point2& s, const Point2& s_next) const {
  const std::array<double, 4> x{s.x, s.y, s_next.x, s_next.y};
  std::array<Neighbor, kMaxNeighbors> nb;
  const std::size_t count = knn_.neighbors(x, nb.data());
  std::array<int, env::kNumActions> votes{};
  for (std::size_t i = 0; i < count; ++i) ++votes[static_cast<std::size_t>(knn_.target(nb[i].index)[0])];
  int best = 0;
  for (int u = 1; u < env::kNumActions; ++u)
    if (votes[static_cast<std::size_t>(u)] > votes[static_cast<std::size_t>(best)]) best = u;
  return best;
}

}  // namespace sgt::approx
