#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sgt/baselines_rl.hpp"
#include "sgt/env2d.hpp"
#include "sgt/stdp_rl.hpp"

using namespace sgt;
using namespace sgt::rl;

namespace {

// Q with one stored point per action at (s, u, g), value values[u].
QModel tabular_q(const Point2& s, const Point2& g, const std::array<double, 8>& values, double delta) {
  std::vector<double> pts;
  for (int u = 0; u < 8; ++u) {
    const auto x = q_input(s, u, g);
    pts.insert(pts.end(), x.begin(), x.end());
  }
  return {approx::KnnModel::fit(pts, 5, std::vector<double>(values.begin(), values.end()), 1, 1), delta};
}

const env::TransitionDataset& rl_data() {
  static const auto data = env::sample_transitions(env::make_workspace("rl"), 40000, 71);
  return data;
}

}  // namespace

TEST(QInput, ActionScaledToUnitInterval) {
  const auto x = q_input({0.1, 0.2}, 7, {0.3, 0.4});
  EXPECT_EQ(x[2], 1.0);
  EXPECT_EQ(q_input({0.1, 0.2}, 0, {0.3, 0.4})[2], 0.0);
}

TEST(FittedQTarget, GoalReachedGivesCost) {
  const Point2 s{0.5, 0.5}, g{0.6, 0.5};
  const auto q = tabular_q({0.525, 0.5}, g, {9, 9, 9, 9, 9, 9, 9, 9}, 0.15);
  EXPECT_EQ(fitted_q_target(q, {s, 0, 0.025, {0.525, 0.5}}, g), 0.025);
}

TEST(FittedQTarget, MinimumOverNextActions) {
  const Point2 next{0.525, 0.5}, g{0.9, 0.5};
  const auto q = tabular_q(next, g, {8, 7, 6, 2.5, 4, 3, 9, 5}, 0.15);
  EXPECT_EQ(fitted_q_target(q, {{0.5, 0.5}, 0, 0.025, next}, g), 0.025 + 2.5);
  EXPECT_EQ(fitted_q_target(q, {next, 0, 10.0, next}, g), 10.0 + 2.5);
}

TEST(FittedQ, SingleTransitionOneIteration) {
  const env::TransitionDataset data{{{0.5, 0.5}, 0, 0.025, {0.525, 0.5}}};
  FittedQConfig cfg;
  cfg.iterations = 1;
  cfg.n_goals = 1;
  cfg.knn_k = 1;
  cfg.delta = 0.01;
  const auto q = fitted_q(data, cfg);
  // Goal is the tuple's own start, 0.025 away from s': one backup of 0.025.
  EXPECT_EQ(q.value({0.2, 0.2}, 3, {0.7, 0.7}), 0.05);
  cfg.delta = 0.15;
  EXPECT_EQ(fitted_q(data, cfg).value({0.2, 0.2}, 3, {0.7, 0.7}), 0.025);
}

TEST(FittedQ, TargetsNonNegativeAndSnapshot) {
  FittedQConfig cfg;
  cfg.iterations = 3;
  cfg.n_goals = 2000;
  cfg.seed = 72;
  const auto q = fitted_q(rl_data(), cfg);
  for (double t : q.knn.targets()) EXPECT_GE(t, 0.0);
  const auto back = QModel::from_json(q.to_json());
  EXPECT_EQ(back.delta, q.delta);
  EXPECT_EQ(back.value({0.1, 0.1}, 2, {0.3, 0.3}), q.value({0.1, 0.1}, 2, {0.3, 0.3}));
}

TEST(FittedQ, GreedyReachesNearbyGoals) {
  FittedQConfig cfg;
  cfg.seed = 73;
  const auto q = fitted_q(rl_data(), cfg);
  const auto ws = env::make_workspace("rl");
  Rng rng(74);
  int reached = 0, trials = 0;
  while (trials < 100) {
    const Point2 s = env::sample_free_point(ws, rng);
    const Point2 g = env::sample_free_point(ws, rng);
    if (distance(s, g) >= 0.2 || env::collides(ws, s, g)) continue;
    ++trials;
    Point2 cur = s;
    for (int t = 0; t < 40 && distance(cur, g) > cfg.delta; ++t) cur = env::step(ws, cur, q_greedy_action(q, cur, g)).next;
    reached += distance(cur, g) <= cfg.delta;
  }
  EXPECT_GE(reached, 80);
}

TEST(ArgminAction, ConstantPicksZero) {
  EXPECT_EQ(argmin_action({3, 3, 3, 3, 3, 3, 3, 3}), 0);
  EXPECT_EQ(argmin_action({3, 1, 3, 1, 3, 3, 3, 3}), 1);
}

TEST(ArgminAction, InvariantUnderShift) {
  Rng rng(75);
  for (int i = 0; i < 500; ++i) {
    std::array<double, 8> q{}, shifted{};
    const double c = (uniform01(rng) - 0.5) * 100.0;
    for (int u = 0; u < 8; ++u) {
      q[u] = std::floor(uniform01(rng) * 4.0);
      shifted[u] = q[u] + c;
    }
    EXPECT_EQ(argmin_action(q), argmin_action(shifted));
  }
}

TEST(ArgminAction, GeometricDistanceToGoal) {
  const auto ws = env::make_workspace("empty");
  const Point2 s{0.5, 0.5};
  for (int target = 0; target < 8; ++target) {
    const Point2 g = s + env::action_displacement(target) * 8.0;
    std::array<double, 8> q{};
    for (int u = 0; u < 8; ++u) q[u] = distance(env::step(ws, s, u).next, g);
    EXPECT_EQ(argmin_action(q), target);
  }
}

TEST(QGreedy, Deterministic) {
  const auto q = tabular_q({0.5, 0.5}, {0.8, 0.8}, {5, 4, 3, 2, 1, 2, 3, 4}, 0.15);
  EXPECT_EQ(q_greedy_action(q, {0.5, 0.5}, {0.8, 0.8}), 4);
  EXPECT_EQ(q_greedy_action(q, {0.5, 0.5}, {0.8, 0.8}), 4);
}

TEST(ApproxFw, RelaxationNeverRaisesValues) {
  FwConfig cfg;
  cfg.iterations = 1;
  cfg.n_goal_pairs = 3000;
  cfg.seed = 76;
  const auto& data = rl_data();
  const auto res = approx_fw(data, cfg);
  const auto v0 = fit_v0(data, cfg.c_max, data.size() / 5, data.size() / 5, cfg.seed, cfg.knn_k);
  const auto pts = res.model.knn.points();
  const auto targets = res.model.knn.targets();
  for (std::size_t i = 0; i < cfg.n_goal_pairs; ++i) {
    const double before = v0.predict(pts.subspan(i * 4, 4));
    EXPECT_LE(targets[i], before);
    EXPECT_GE(targets[i], 0.0);
  }
  ASSERT_EQ(res.probe_std.size(), 2u);
}

TEST(ApproxFw, DispersionLogShape) {
  FwConfig cfg;
  cfg.iterations = 3;
  cfg.n_goal_pairs = 1000;
  cfg.n_probe = 200;
  cfg.seed = 77;
  const auto res = approx_fw(rl_data(), cfg);
  ASSERT_EQ(res.probe_std.size(), 4u);
  for (double s : res.probe_std) EXPECT_GE(s, 0.0);
  std::stringstream ss;
  write_dispersion_csv(ss, res.probe_std);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "iter,probe_std");
  int rows = 0;
  while (std::getline(ss, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(PopulationStd, KnownValues) {
  EXPECT_EQ(population_std({}), 0.0);
  EXPECT_EQ(population_std({3.0, 3.0, 3.0}), 0.0);
  EXPECT_NEAR(population_std({2, 4, 4, 4, 5, 5, 7, 9}), 2.0, 1e-15);
}
