#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sgt/harness.hpp"

using namespace sgt;
using namespace sgt::harness;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidInput;
}

struct SmallModels {
  env::TransitionDataset data;
  rl::ApproxValueStack stack;
  approx::InverseModel inverse;
  rl::QModel q;
};

const SmallModels& small_models() {
  static const SmallModels m = [] {
    SmallModels out;
    out.data = env::sample_transitions(env::make_workspace("rl"), 20000, 101);
    rl::ApproxStdpConfig sc;
    sc.levels = 3;
    sc.n_goal_pairs = 2000;
    sc.grid_resolution = 20;
    sc.seed = 102;
    out.stack = rl::approx_stdp(out.data, sc);
    out.inverse = approx::inverse_fit(out.data);
    rl::FittedQConfig qc;
    qc.iterations = 2;
    qc.n_goals = 2000;
    qc.seed = 103;
    out.q = rl::fitted_q(out.data, qc);
    return out;
  }();
  return m;
}

}  // namespace

TEST(Config, DefaultsMatchDocumentedValues) {
  const auto c = parse_config(nlohmann::json::object());
  EXPECT_EQ(c.workspace, "rl");
  EXPECT_EQ(c.data.n_transitions, 125000u);
  EXPECT_EQ(c.stdp.levels, 5);
  EXPECT_EQ(c.stdp.c_max, 10.0);
  EXPECT_EQ(c.stdp.n_goal_pairs, 10000u);
  EXPECT_EQ(c.stdp.knn_k, 5u);
  EXPECT_EQ(c.stdp.grid_resolution, 50);
  EXPECT_EQ(c.fittedq.iterations, 20);
  EXPECT_EQ(c.fittedq.delta, 0.15);
  EXPECT_EQ(c.fw.iterations, 8);
  EXPECT_EQ(c.demos.n_train, 10000u);
  EXPECT_EQ(c.demos.n_val, 1000u);
  EXPECT_EQ(c.demos.n_test, 200u);
  EXPECT_EQ(c.demos.horizon, 32);
  EXPECT_EQ(c.il.width, 64u);
  EXPECT_EQ(c.il.batch, 50u);
  EXPECT_EQ(c.eval_rl.n_pairs, 200u);
  EXPECT_EQ(c.eval_rl.threshold, 0.15);
  EXPECT_EQ(c.eval_rl.subgoal_budget, 40);
  EXPECT_EQ(c.eval_rl.episode_budget, 800);
}

TEST(Config, RoundTripAndHash) {
  auto c = parse_config(nlohmann::json::parse(R"({"workspace": "center", "stdp": {"levels": 3}, "eval_rl": {"tree_depth": 3}, "heatmap": {"levels": [0, 3]}, "il": {"modes": 2}})"));
  EXPECT_EQ(c.workspace, "center");
  EXPECT_EQ(c.stdp.levels, 3);
  const auto back = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  c.eval_rl.seed += 1;
  EXPECT_NE(config_hash(c), config_hash(back));
}

TEST(Config, RejectsBadInput) {
  for (const char* text : {R"({"bogus": 1})", R"({"stdp": {"levels": "five"}})", R"({"stdp": {"levels": 0}})",
                           R"({"demos": {"horizon": 30}})", R"({"il": {"representations": ["sgt", "nope"]}})",
                           R"({"eval_rl": {"threshold": -1}})", R"({"stdp": {"unknown": 1}})", R"([1, 2])"}) {
    EXPECT_EQ(kind_of([&] { parse_config(nlohmann::json::parse(text)); }), ErrorKind::ConfigError) << text;
  }
  EXPECT_EQ(kind_of([] { load_config("/nonexistent/config.json"); }), ErrorKind::ConfigError);
}

TEST(TrackSubgoals, StartNearGoal) {
  const auto ws = env::make_workspace("empty");
  const Point2 path[2] = {{0.5, 0.5}, {0.6, 0.5}};
  const auto ep = track_subgoals(ws, path, [](const Point2&, const Point2&) { return 0; });
  EXPECT_EQ(ep.steps, 0);
  EXPECT_LE(ep.final_distance, 0.15);
  EXPECT_FALSE(ep.collided);
}

TEST(TrackSubgoals, StraightCorridorWithInverseModel) {
  const auto ws = env::make_workspace("empty");
  const auto inv = approx::inverse_fit(env::sample_transitions(ws, 40000, 104));
  const Point2 path[3] = {{0.1, 0.5}, {0.5, 0.5}, {0.9, 0.5}};
  const auto ep = track_subgoals(ws, path, [&](const Point2& s, const Point2& t) {
    return inv.query(s, s + (t - s) * (env::kStepLength / distance(s, t)));
  });
  EXPECT_LE(ep.final_distance, 0.15);
  EXPECT_FALSE(ep.collided);
}

TEST(TrackSubgoals, BudgetsBoundSteps) {
  const auto ws = env::make_workspace("center");
  // Always pushes west: never reaches anything to the east.
  const Point2 path[4] = {{0.1, 0.1}, {0.9, 0.1}, {0.9, 0.9}, {0.1, 0.9}};
  const auto ep = track_subgoals(ws, path, [](const Point2&, const Point2&) { return 4; }, {0.15, 40, 100});
  EXPECT_EQ(ep.steps, 100);
  EXPECT_TRUE(ep.collided);
  const auto longer = track_subgoals(ws, path, [](const Point2&, const Point2&) { return 4; }, {0.15, 40, 800});
  EXPECT_EQ(longer.steps, 800);
}

TEST(EvaluationPairs, PureFunctionOfSeed) {
  const auto ws = env::make_workspace("rl");
  const auto a = evaluation_pairs(ws, 50, 7);
  const auto b = evaluation_pairs(ws, 50, 7);
  const auto c = evaluation_pairs(ws, 80, 7);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_EQ(a[i], c[i]);
    EXPECT_TRUE(ws.in_free_space(a[i].first));
    EXPECT_TRUE(ws.in_free_space(a[i].second));
  }
  EXPECT_NE(evaluation_pairs(ws, 1, 8)[0], a[0]);
}

TEST(EvalRl, ReportShapeAndRanges) {
  const auto& m = small_models();
  EvalRlSection cfg;
  cfg.n_pairs = 30;
  cfg.tree_depth = 3;
  const auto rep = eval_rl(env::make_workspace("rl"), {&m.stack, &m.inverse, &m.q}, cfg);
  ASSERT_EQ(rep.rows.size(), 3u);
  ASSERT_EQ(rep.episodes.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(rep.rows[r].method, cfg.methods[r]);
    EXPECT_EQ(rep.rows[r].n, 30u);
    EXPECT_GE(rep.rows[r].avg_dist, 0.0);
    EXPECT_GE(rep.rows[r].avg_collision_rate, 0.0);
    EXPECT_LE(rep.rows[r].avg_collision_rate, 1.0);
    for (std::size_t i = 0; i < 30; ++i) {
      const auto& [s, g] = rep.pairs[i];
      const auto& e = rep.episodes[r][i];
      if (distance(s, g) <= 0.15) EXPECT_LE(e.final_distance, 0.15);
      EXPECT_LE(e.steps, cfg.episode_budget);
    }
  }
}

TEST(EvalRl, MissingModels) {
  EvalRlSection cfg;
  cfg.n_pairs = 2;
  EXPECT_EQ(kind_of([&] { eval_rl(env::make_workspace("rl"), {}, cfg); }), ErrorKind::MissingArtifact);
}

TEST(EvalIl, CountersOnUntrainedModels) {
  const auto ws = env::make_workspace("simple");
  const auto test = env::generate_demos(ws, 5, 32, 105);
  il::BcConfig cfg;
  const approx::MdnModel m4(4, 1, 16, 106), m5(5, 1, 16, 107);
  const auto sgt = eval_il(ws, {il::Representation::Sgt, &m4}, test, cfg, 1);
  EXPECT_EQ(sgt.mean_calls, 31.0);
  EXPECT_EQ(sgt.max_depth, 5.0);
  const auto direct = eval_il(ws, {il::Representation::Direct, &m5}, test, cfg, 1);
  EXPECT_EQ(direct.max_depth, 1.0);
  const auto seq = eval_il(ws, {il::Representation::Sequential, &m4}, test, cfg, 1);
  EXPECT_LE(seq.max_depth, 32.0);
  for (const auto& row : {sgt, direct, seq}) {
    EXPECT_GE(row.success_rate, 0.0);
    EXPECT_LE(row.success_rate, 1.0);
    EXPECT_GE(row.severity, 0.0);
    EXPECT_LE(row.severity, 1.0);
  }
}

TEST(Reports, HeadersAndHashColumn) {
  std::stringstream rl_out, il_out;
  write_rl_report(rl_out, {{"q", 0.5, 0.25, 200}}, "abcd");
  write_il_report(il_out, {{"sgt", 0.9, 0.001, 0.02}}, "abcd");
  std::string line;
  std::getline(rl_out, line);
  EXPECT_EQ(line, "method,avg_dist,avg_collision_rate,n,config_hash");
  std::getline(rl_out, line);
  EXPECT_EQ(line, "q,0.5,0.25,200,abcd");
  std::getline(il_out, line);
  EXPECT_EQ(line, "method,success_rate,pred_time_s,severity,config_hash");
  std::getline(il_out, line);
  EXPECT_EQ(line.substr(line.size() - 5), ",abcd");
}

TEST(Heatmap, CsvRoundTripIsBitwise) {
  Rng rng(108);
  std::vector<double> v(50 * 50);
  for (auto& x : v) x = uniform01(rng) * 10.0 / 3.0;
  std::stringstream ss;
  write_heatmap_csv(ss, v, 50);
  EXPECT_EQ(read_heatmap_csv(ss), v);
}

TEST(Heatmap, ConstantMapIsUniform) {
  const std::vector<double> v(9, 4.2);
  std::stringstream ss;
  write_pgm(ss, v, 3);
  EXPECT_EQ(ss.str(), "P2\n3 3\n255\n0 0 0\n0 0 0\n0 0 0\n");
}

TEST(Heatmap, PgmScalingAndOrientation) {
  const std::vector<double> v{0.0, 1.0, 2.0, 4.0};  // row 0 is y = 0.25
  std::stringstream ss;
  write_pgm(ss, v, 2);
  EXPECT_EQ(ss.str(), "P2\n2 2\n255\n128 255\n0 64\n");
}

TEST(Heatmap, ValuesFollowStack) {
  const auto& m = small_models();
  const auto v = heatmap_values(m.stack, {0.9, 0.9}, 2, 10);
  ASSERT_EQ(v.size(), 100u);
  EXPECT_EQ(v[0], m.stack.value(2, {0.05, 0.05}, {0.9, 0.9}));
  EXPECT_EQ(v[10 * 9 + 3], m.stack.value(2, {0.35, 0.95}, {0.9, 0.9}));
  EXPECT_EQ(reachable_fraction(std::vector<double>{1, 2, 9, 10}, 9.0), 0.5);
}

TEST(GraphSuite, DefaultConfigPasses) {
  const auto rep = verify_graph_suite(VerifyGraphSection{});
  EXPECT_EQ(rep.graphs, 100u);
  EXPECT_TRUE(rep.passed());
}
