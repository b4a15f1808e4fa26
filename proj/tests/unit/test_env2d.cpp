#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sgt/env2d.hpp"

using namespace sgt;
using namespace sgt::env;

namespace {

// Point at arclength `target` along the polyline, walked independently of resample().
Point2 at_arclength(const std::vector<Point2>& pts, double target) {
  double acc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double len = distance(pts[i - 1], pts[i]);
    if (acc + len >= target && len > 0.0) return lerp(pts[i - 1], pts[i], (target - acc) / len);
    acc += len;
  }
  return pts.back();
}

double polyline_length(const std::vector<Point2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

}  // namespace

TEST(Step, FreeMoveEast) {
  const auto ws = make_workspace("center");
  const auto r = step(ws, {0.1, 0.1}, 0);
  EXPECT_DOUBLE_EQ(r.next.x, 0.125);
  EXPECT_DOUBLE_EQ(r.next.y, 0.1);
  EXPECT_EQ(r.cost, 0.025);
}

TEST(Step, DiagonalMove) {
  const auto ws = make_workspace("center");
  const auto r = step(ws, {0.1, 0.1}, 1);
  EXPECT_NEAR(r.next.x, 0.1 + 0.025 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(r.next.y, 0.1 + 0.025 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(r.cost, 0.025);
}

TEST(Step, BlockedMoveStaysPut) {
  const auto ws = make_workspace("center");
  const auto r = step(ws, {0.39, 0.5}, 0);
  EXPECT_EQ(r.next, (Point2{0.39, 0.5}));
  EXPECT_EQ(r.cost, 10.0);
}

TEST(Step, LeavingTheSquareIsBlocked) {
  const auto ws = make_workspace("empty");
  const auto r = step(ws, {0.99, 0.5}, 0);
  EXPECT_EQ(r.next, (Point2{0.99, 0.5}));
  EXPECT_EQ(r.cost, 10.0);
}

TEST(Step, RejectsStateInObstacleAndBadAction) {
  const auto ws = make_workspace("center");
  EXPECT_THROW(step(ws, {0.5, 0.5}, 0), Error);
  EXPECT_THROW(step(ws, {0.1, 0.1}, 8), Error);
}

TEST(Step, PropertiesOnRandomStates) {
  for (const char* name : {"center", "rl", "simple", "hard"}) {
    const auto ws = make_workspace(name);
    Rng rng(21);
    for (int i = 0; i < 5000; ++i) {
      const Point2 s = sample_free_point(ws, rng);
      const int u = static_cast<int>(uniform_index(rng, kNumActions));
      const auto a = step(ws, s, u);
      const auto b = step(ws, s, u);
      EXPECT_EQ(a.next, b.next);
      EXPECT_EQ(a.cost, b.cost);
      EXPECT_TRUE(a.cost == 0.025 || a.cost == 10.0);
      EXPECT_TRUE(ws.in_free_space(a.next)) << name;
    }
  }
}

TEST(Collides, Examples) {
  const auto ws = make_workspace("center");
  EXPECT_FALSE(collides(ws, {0.1, 0.1}, {0.2, 0.1}));
  EXPECT_TRUE(collides(ws, {0.3, 0.5}, {0.7, 0.5}));
  EXPECT_TRUE(collides(ws, {0.4, 0.4}, {0.4, 0.6}));
}

TEST(Collides, AgreesWithDenseSampling) {
  const auto ws = make_workspace("rl");
  Rng rng(22);
  for (int i = 0; i < 2000; ++i) {
    const Point2 a{uniform01(rng), uniform01(rng)};
    const Point2 b{uniform01(rng), uniform01(rng)};
    bool hit = false;
    for (int t = 0; t <= 4000 && !hit; ++t) {
      const Point2 p = lerp(a, b, t / 4000.0);
      for (const auto& r : ws.obstacles()) hit = hit || r.contains(p);
    }
    // Dense sampling can only miss grazing contacts.
    if (hit) EXPECT_TRUE(collides(ws, a, b));
  }
}

TEST(BlockedLength, CrossingCenterObstacle) {
  const auto ws = make_workspace("center");
  EXPECT_NEAR(blocked_length(ws, {0.1, 0.5}, {0.9, 0.5}), 0.2, 1e-12);
  EXPECT_NEAR(blocked_length(ws, {0.9, 0.5}, {1.1, 0.5}), 0.1, 1e-12);
}

TEST(SampleTransitions, Reproducible) {
  const auto ws = make_workspace("rl");
  const auto a = sample_transitions(ws, 1, 5);
  const auto b = sample_transitions(ws, 1, 5);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].s, b[0].s);
  EXPECT_EQ(a[0].u, b[0].u);
  EXPECT_EQ(a[0].s_next, b[0].s_next);
}

TEST(SampleTransitions, CollisionFractionMatchesSweptArea) {
  // A move from s is blocked when s lies in the obstacle swept back along the
  // move, or within the move's reach of the square's edge.
  const double w = 0.2;
  const double h = 0.2;
  double expected = 0.0;
  for (int u = 0; u < kNumActions; ++u) {
    const double dx = std::abs(kStepLength * std::cos(u * M_PI / 4.0));
    const double dy = std::abs(kStepLength * std::sin(u * M_PI / 4.0));
    const double swept = dx * h + dy * w;
    const double edge = 1.0 - (1.0 - dx) * (1.0 - dy);
    expected += (swept + edge) / (1.0 - w * h) / kNumActions;
  }
  const auto data = sample_transitions(make_workspace("center"), 400000, 23);
  double hits = 0.0;
  for (const auto& t : data) hits += t.c == 10.0;
  EXPECT_NEAR(hits / data.size(), expected, 0.003);
}

TEST(SampleTransitions, CsvRoundTrip) {
  const auto data = sample_transitions(make_workspace("rl"), 200, 24);
  std::stringstream ss;
  write_transitions_csv(ss, data);
  const auto back = read_transitions_csv(ss);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].s, data[i].s);
    EXPECT_EQ(back[i].u, data[i].u);
    EXPECT_EQ(back[i].c, data[i].c);
    EXPECT_EQ(back[i].s_next, data[i].s_next);
  }
}

TEST(ExpertPlan, SameStartAndGoal) {
  const auto traj = expert_plan(make_workspace("center"), {0.2, 0.2}, {0.2, 0.2});
  ASSERT_EQ(traj.states.size(), 2u);
  EXPECT_EQ(traj.arclength(), 0.0);
}

TEST(ExpertPlan, DetoursAroundCenter) {
  const auto ws = make_workspace("center");
  const auto traj = expert_plan(ws, {0.1, 0.5}, {0.9, 0.5});
  EXPECT_EQ(traj.states.front(), (Point2{0.1, 0.5}));
  EXPECT_EQ(traj.states.back(), (Point2{0.9, 0.5}));
  for (std::size_t i = 1; i < traj.states.size(); ++i) EXPECT_FALSE(collides(ws, traj.states[i - 1], traj.states[i]));
  EXPECT_GT(traj.arclength(), 0.8);
}

TEST(ExpertPlan, ShortcutNoLongerThanLattice) {
  const auto ws = make_workspace("rl");
  Rng rng(25);
  for (int i = 0; i < 20; ++i) {
    const Point2 s = sample_free_point(ws, rng);
    const Point2 g = sample_free_point(ws, rng);
    const auto raw = expert_plan_unsmoothed(ws, s, g);
    const auto smooth = expert_plan(ws, s, g);
    EXPECT_LE(smooth.arclength(), 1.5 * raw.arclength() + 1e-12);
    for (std::size_t j = 1; j < smooth.states.size(); ++j)
      EXPECT_FALSE(collides(ws, smooth.states[j - 1], smooth.states[j]));
  }
}

TEST(Resample, StraightLine) {
  const auto r = resample({{{0.0, 0.0}, {1.0, 0.0}}}, 4);
  ASSERT_EQ(r.states.size(), 5u);
  for (int i = 0; i <= 4; ++i) EXPECT_NEAR(r.states[i].x, i / 4.0, 1e-15);
}

TEST(Resample, ZeroLength) {
  const auto r = resample({{{0.3, 0.3}, {0.3, 0.3}}}, 32);
  ASSERT_EQ(r.states.size(), 33u);
  for (const auto& p : r.states) EXPECT_EQ(p, (Point2{0.3, 0.3}));
}

TEST(Resample, LShapeMidpoint) {
  const auto r = resample({{{0.0, 0.0}, {0.5, 0.0}, {0.5, 0.5}}}, 2);
  ASSERT_EQ(r.states.size(), 3u);
  EXPECT_NEAR(r.states[1].x, 0.5, 1e-12);
  EXPECT_NEAR(r.states[1].y, 0.0, 1e-12);
}

TEST(Resample, UniformArclengthOnRandomPolylines) {
  Rng rng(26);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point2> pts;
    const int n = 2 + static_cast<int>(uniform_index(rng, 6));
    for (int i = 0; i < n; ++i) pts.push_back({uniform01(rng), uniform01(rng)});
    const int T = 1 << (1 + uniform_index(rng, 5));
    const auto r = resample({pts}, T);
    ASSERT_EQ(r.horizon(), T);
    EXPECT_EQ(r.states.front(), pts.front());
    EXPECT_EQ(r.states.back(), pts.back());
    const double len = polyline_length(pts);
    for (int i = 0; i <= T; ++i) {
      const Point2 want = at_arclength(pts, len * i / T);
      EXPECT_NEAR(r.states[i].x, want.x, 1e-9);
      EXPECT_NEAR(r.states[i].y, want.y, 1e-9);
    }
  }
}

TEST(Resample, RejectsBadHorizon) { EXPECT_THROW(resample({{{0, 0}, {1, 1}}}, 6), Error); }

TEST(GenerateDemos, ShapeAndCollisionFree) {
  for (const char* name : {"simple", "hard"}) {
    const auto ws = make_workspace(name);
    const auto demos = generate_demos(ws, 10, 32, 27);
    ASSERT_EQ(demos.trajectories.size(), 10u);
    for (const auto& t : demos.trajectories) {
      ASSERT_EQ(t.states.size(), 33u);
      for (std::size_t i = 1; i < t.states.size(); ++i) EXPECT_FALSE(collides(ws, t.states[i - 1], t.states[i]));
    }
  }
}

TEST(GenerateDemos, CsvRoundTrip) {
  const auto demos = generate_demos(make_workspace("simple"), 5, 8, 28);
  std::stringstream ss;
  write_demos_csv(ss, demos);
  const auto back = read_demos_csv(ss, "simple");
  ASSERT_EQ(back.trajectories.size(), 5u);
  EXPECT_EQ(back.horizon, 8);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(back.trajectories[i].states, demos.trajectories[i].states);
}

TEST(Workspace, JsonRoundTripAndValidation) {
  const auto ws = make_workspace("hard");
  const auto back = Workspace::from_json(ws.to_json());
  ASSERT_EQ(back.obstacles().size(), ws.obstacles().size());
  for (std::size_t i = 0; i < ws.obstacles().size(); ++i) EXPECT_EQ(back.obstacles()[i], ws.obstacles()[i]);
  EXPECT_THROW(make_workspace("nowhere"), Error);
  EXPECT_THROW(Workspace("bad", {{0.5, 0.5, 0.4, 0.6}}), Error);
}
