#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "sgt/common.hpp"
#include "sgt/env2d.hpp"
#include "sgt/knn.hpp"

namespace sgt::rl {

inline std::array<double, 5> q_input(const Point2& s, int u, const Point2& g) {
  return {s.x, s.y, static_cast<double>(u) / 7.0, g.x, g.y};
}

/// Goal-conditioned Q(s, u, g) over inputs (s, u/7, g).
struct QModel {
  approx::KnnModel knn;
  double delta = 0.15;

  double value(const Point2& s, int u, const Point2& g) const { return knn.predict(q_input(s, u, g)); }

  nlohmann::json to_json() const { return {{"delta", delta}, {"knn", knn.to_json()}}; }
  static QModel from_json(const nlohmann::json& j);
};

/// argmin over the eight values; ties go to the smallest action.
int argmin_action(const std::array<double, env::kNumActions>& q);
int q_greedy_action(const QModel& q, const Point2& s, const Point2& g);

struct FittedQConfig {
  int iterations = 20;
  double delta = 0.15;
  std::size_t n_goals = 10000;
  std::size_t knn_k = 5;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

/// One backup target: c + min_u' Q(s', u', g) when s' is farther than delta
/// from g, c alone otherwise.
double fitted_q_target(const QModel& q, const env::TransitionTuple& t, const Point2& g);

QModel fitted_q(const env::TransitionDataset& data, const FittedQConfig& cfg);

struct FwValueModel {
  approx::KnnModel knn;

  double value(const Point2& s, const Point2& g) const;
};

struct FwConfig {
  int iterations = 8;
  double c_max = 10.0;
  std::size_t n_goal_pairs = 10000;
  std::size_t n_random = 0;  // 0: |D| / 5
  std::size_t n_self = 0;    // 0: |D| / 5
  std::size_t knn_k = 5;
  std::size_t n_probe = 1000;
  bool fit_self = true;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

struct FwResult {
  FwValueModel model;
  std::vector<double> probe_std;  // entry i: after i relaxation rounds
};

FwResult approx_fw(const env::TransitionDataset& data, const FwConfig& cfg);

void write_dispersion_csv(std::ostream& out, const std::vector<double>& probe_std);

double population_std(const std::vector<double>& v);

}  // namespace sgt::rl
