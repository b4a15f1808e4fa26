#include "sgt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "sgt/graph_core.hpp"

namespace sgt::harness {

namespace {

using nlohmann::json;

/// Reads one JSON object field by field and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    const std::string where = path_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(where, "must be a boolean");
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) fail(where, "must be a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(where, "must be an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(where, "must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(where, "must be a string");
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); }))
        fail(where, "must be an array of strings");
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_integer(); }))
        fail(where, "must be an array of integers");
    } else if constexpr (std::is_same_v<T, Point2>) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(where, "must be a [x, y] pair");
      out = {v[0].get<double>(), v[1].get<double>()};
    }
    if constexpr (!std::is_same_v<T, Point2>) out = v.get<T>();
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) fail(path_ + "." + key, "is not a known setting");
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::ConfigError, where + " " + what);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) Section::fail(where, what);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig c;
  Section top(j, "config");
  top.get("workspace", c.workspace);
  top.get("run_dir", c.run_dir);
  top.get("workers", c.workers);

  if (const json* s = top.child("data")) {
    Section d(*s, "data");
    d.get("n_transitions", c.data.n_transitions);
    d.get("seed", c.data.seed);
    d.finish();
  }
  if (const json* s = top.child("stdp")) {
    Section d(*s, "stdp");
    d.get("levels", c.stdp.levels);
    d.get("c_max", c.stdp.c_max);
    d.get("n_goal_pairs", c.stdp.n_goal_pairs);
    d.get("n_random", c.stdp.n_random);
    d.get("n_self", c.stdp.n_self);
    d.get("knn_k", c.stdp.knn_k);
    d.get("grid", c.stdp.grid_resolution);
    d.get("grid_support", c.stdp.grid_support);
    d.get("seed", c.stdp.seed);
    d.finish();
  }
  if (const json* s = top.child("fittedq")) {
    Section d(*s, "fittedq");
    d.get("iterations", c.fittedq.iterations);
    d.get("delta", c.fittedq.delta);
    d.get("n_goals", c.fittedq.n_goals);
    d.get("knn_k", c.fittedq.knn_k);
    d.get("seed", c.fittedq.seed);
    d.finish();
  }
  if (const json* s = top.child("fw")) {
    Section d(*s, "fw");
    d.get("iterations", c.fw.iterations);
    d.get("c_max", c.fw.c_max);
    d.get("n_goal_pairs", c.fw.n_goal_pairs);
    d.get("n_random", c.fw.n_random);
    d.get("n_self", c.fw.n_self);
    d.get("knn_k", c.fw.knn_k);
    d.get("n_probe", c.fw.n_probe);
    d.get("fit_self", c.fw.fit_self);
    d.get("seed", c.fw.seed);
    d.finish();
  }
  if (const json* s = top.child("demos")) {
    Section d(*s, "demos");
    d.get("workspace", c.demos.workspace);
    d.get("n_train", c.demos.n_train);
    d.get("n_val", c.demos.n_val);
    d.get("n_test", c.demos.n_test);
    d.get("horizon", c.demos.horizon);
    d.get("seed", c.demos.seed);
    d.finish();
  }
  if (const json* s = top.child("il")) {
    Section d(*s, "il");
    d.get("representations", c.il.representations);
    d.get("modes", c.il.modes);
    d.get("width", c.il.width);
    d.get("steps", c.il.steps);
    d.get("batch", c.il.batch);
    d.get("lr", c.il.lr);
    d.get("eval_every", c.il.eval_every);
    d.get("stop_on_collision", c.il.stop_on_collision);
    d.get("seed", c.il.seed);
    d.finish();
  }
  if (const json* s = top.child("eval_rl")) {
    Section d(*s, "eval_rl");
    d.get("methods", c.eval_rl.methods);
    d.get("n_pairs", c.eval_rl.n_pairs);
    d.get("tree_depth", c.eval_rl.tree_depth);
    d.get("threshold", c.eval_rl.threshold);
    d.get("subgoal_budget", c.eval_rl.subgoal_budget);
    d.get("episode_budget", c.eval_rl.episode_budget);
    d.get("seed", c.eval_rl.seed);
    d.finish();
  }
  if (const json* s = top.child("heatmap")) {
    Section d(*s, "heatmap");
    d.get("goal", c.heatmap.goal);
    d.get("levels", c.heatmap.levels);
    d.finish();
  }
  if (const json* s = top.child("verify_graph")) {
    Section d(*s, "verify_graph");
    d.get("n_graphs", c.verify_graph.n_graphs);
    d.get("min_n", c.verify_graph.min_n);
    d.get("max_n", c.verify_graph.max_n);
    d.get("drop_fraction", c.verify_graph.drop_fraction);
    d.get("max_weight", c.verify_graph.max_weight);
    d.get("seed", c.verify_graph.seed);
    d.finish();
  }
  top.finish();

  try {
    env::make_workspace(c.workspace);
    env::make_workspace(c.demos.workspace);
  } catch (const Error& e) {
    Section::fail("config.workspace", e.what());
  }
  require(!c.run_dir.empty(), "config.run_dir", "must not be empty");
  require(c.data.n_transitions >= 1, "data.n_transitions", "must be at least 1");
  require(c.stdp.levels >= 1 && c.stdp.levels <= 20, "stdp.levels", "must be in 1..20");
  require(c.stdp.c_max > 0.0, "stdp.c_max", "must be positive");
  require(c.stdp.n_goal_pairs >= c.stdp.knn_k, "stdp.n_goal_pairs", "must be at least knn_k");
  require(c.stdp.knn_k >= 1 && c.stdp.knn_k <= 64, "stdp.knn_k", "must be in 1..64");
  require(c.stdp.grid_resolution >= 1, "stdp.grid", "must be positive");
  require(c.fittedq.iterations >= 0, "fittedq.iterations", "must be non-negative");
  require(c.fittedq.delta > 0.0, "fittedq.delta", "must be positive");
  require(c.fittedq.knn_k >= 1 && c.fittedq.knn_k <= 64, "fittedq.knn_k", "must be in 1..64");
  require(c.fittedq.n_goals >= c.fittedq.knn_k, "fittedq.n_goals", "must be at least knn_k");
  require(c.fw.iterations >= 0, "fw.iterations", "must be non-negative");
  require(c.fw.c_max > 0.0, "fw.c_max", "must be positive");
  require(c.fw.knn_k >= 1 && c.fw.knn_k <= 64, "fw.knn_k", "must be in 1..64");
  require(c.fw.n_probe >= 1, "fw.n_probe", "must be at least 1");
  require(env::is_power_of_two(c.demos.horizon), "demos.horizon", "must be a power of two");
  require(c.demos.n_train >= 1, "demos.n_train", "must be at least 1");
  for (const auto& r : c.il.representations) {
    try {
      il::parse_representation(r);
    } catch (const Error& e) {
      Section::fail("il.representations", e.what());
    }
  }
  require(c.il.modes >= 1, "il.modes", "must be at least 1");
  require(c.il.width >= 1, "il.width", "must be at least 1");
  require(c.il.batch >= 1, "il.batch", "must be at least 1");
  require(c.il.eval_every >= 1, "il.eval_every", "must be at least 1");
  require(c.il.lr > 0.0, "il.lr", "must be positive");
  for (const auto& m : c.eval_rl.methods)
    require(m == "sgt_im" || m == "sgt_q" || m == "q", "eval_rl.methods", "has unknown method '" + m + "'");
  require(c.eval_rl.n_pairs >= 1, "eval_rl.n_pairs", "must be at least 1");
  require(c.eval_rl.tree_depth >= 0 && c.eval_rl.tree_depth <= c.stdp.levels, "eval_rl.tree_depth",
          "must be in 0..stdp.levels");
  require(c.eval_rl.threshold > 0.0, "eval_rl.threshold", "must be positive");
  require(c.eval_rl.subgoal_budget >= 1 && c.eval_rl.episode_budget >= 1, "eval_rl", "budgets must be positive");
  for (int k : c.heatmap.levels) require(k >= 0 && k <= c.stdp.levels, "heatmap.levels", "must be in 0..stdp.levels");
  require(c.verify_graph.min_n >= 1 && c.verify_graph.min_n <= c.verify_graph.max_n, "verify_graph.min_n",
          "must be in 1..max_n");
  require(c.verify_graph.drop_fraction >= 0.0 && c.verify_graph.drop_fraction <= 1.0, "verify_graph.drop_fraction",
          "must be in [0, 1]");
  require(c.verify_graph.max_weight >= 0.0, "verify_graph.max_weight", "must be non-negative");

  c.stdp.workers = c.fittedq.workers = c.fw.workers = c.workers;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& c) {
  return {
      {"workspace", c.workspace},
      {"run_dir", c.run_dir},
      {"workers", c.workers},
      {"data", {{"n_transitions", c.data.n_transitions}, {"seed", c.data.seed}}},
      {"stdp",
       {{"levels", c.stdp.levels},
        {"c_max", c.stdp.c_max},
        {"n_goal_pairs", c.stdp.n_goal_pairs},
        {"n_random", c.stdp.n_random},
        {"n_self", c.stdp.n_self},
        {"knn_k", c.stdp.knn_k},
        {"grid", c.stdp.grid_resolution},
        {"grid_support", c.stdp.grid_support},
        {"seed", c.stdp.seed}}},
      {"fittedq",
       {{"iterations", c.fittedq.iterations},
        {"delta", c.fittedq.delta},
        {"n_goals", c.fittedq.n_goals},
        {"knn_k", c.fittedq.knn_k},
        {"seed", c.fittedq.seed}}},
      {"fw",
       {{"iterations", c.fw.iterations},
        {"c_max", c.fw.c_max},
        {"n_goal_pairs", c.fw.n_goal_pairs},
        {"n_random", c.fw.n_random},
        {"n_self", c.fw.n_self},
        {"knn_k", c.fw.knn_k},
        {"n_probe", c.fw.n_probe},
        {"fit_self", c.fw.fit_self},
        {"seed", c.fw.seed}}},
      {"demos",
       {{"workspace", c.demos.workspace},
        {"n_train", c.demos.n_train},
        {"n_val", c.demos.n_val},
        {"n_test", c.demos.n_test},
        {"horizon", c.demos.horizon},
        {"seed", c.demos.seed}}},
      {"il",
       {{"representations", c.il.representations},
        {"modes", c.il.modes},
        {"width", c.il.width},
        {"steps", c.il.steps},
        {"batch", c.il.batch},
        {"lr", c.il.lr},
        {"eval_every", c.il.eval_every},
        {"stop_on_collision", c.il.stop_on_collision},
        {"seed", c.il.seed}}},
      {"eval_rl",
       {{"methods", c.eval_rl.methods},
        {"n_pairs", c.eval_rl.n_pairs},
        {"tree_depth", c.eval_rl.tree_depth},
        {"threshold", c.eval_rl.threshold},
        {"subgoal_budget", c.eval_rl.subgoal_budget},
        {"episode_budget", c.eval_rl.episode_budget},
        {"seed", c.eval_rl.seed}}},
      {"heatmap", {{"goal", {c.heatmap.goal.x, c.heatmap.goal.y}}, {"levels", c.heatmap.levels}}},
      {"verify_graph",
       {{"n_graphs", c.verify_graph.n_graphs},
        {"min_n", c.verify_graph.min_n},
        {"max_n", c.verify_graph.max_n},
        {"drop_fraction", c.verify_graph.drop_fraction},
        {"max_weight", c.verify_graph.max_weight},
        {"seed", c.verify_graph.seed}}},
  };
}

std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a64(config_to_json(cfg).dump())); }

Episode track_subgoals(const env::Workspace& ws, std::span<const Point2> subgoals, const Controller& controller,
                       const TrackOptions& opts) {
  if (subgoals.empty()) throw Error(ErrorKind::InvalidInput, "no sub-goals to track");
  Episode ep;
  Point2 cur = subgoals.front();
  for (std::size_t i = 1; i < subgoals.size(); ++i) {
    const Point2 target = subgoals[i];
    const bool last = i + 1 == subgoals.size();
    int used = 0;
    while (distance(cur, target) > opts.threshold && ep.steps < opts.episode_budget &&
           (last || used < opts.subgoal_budget)) {
      const auto r = env::step(ws, cur, controller(cur, target));
      if (r.cost == env::kCollisionCost) ep.collided = true;
      cur = r.next;
      ++used;
      ++ep.steps;
    }
  }
  ep.final_state = cur;
  ep.final_distance = distance(cur, subgoals.back());
  return ep;
}

std::vector<std::pair<Point2, Point2>> evaluation_pairs(const env::Workspace& ws, std::size_t n, std::uint64_t seed) {
  std::vector<std::pair<Point2, Point2>> pairs(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, 9, i));
    pairs[i].first = env::sample_free_point(ws, rng);
    pairs[i].second = env::sample_free_point(ws, rng);
  }
  return pairs;
}

RlEvalReport eval_rl(const env::Workspace& ws, const RlModels& models, const EvalRlSection& cfg, unsigned workers) {
  RlEvalReport report;
  report.pairs = evaluation_pairs(ws, cfg.n_pairs, cfg.seed);
  const TrackOptions opts{cfg.threshold, cfg.subgoal_budget, cfg.episode_budget};
  for (const auto& method : cfg.methods) {
    const bool uses_tree = method != "q";
    const bool uses_im = method == "sgt_im";
    if (uses_tree && !models.stack) throw Error(ErrorKind::MissingArtifact, "method " + method + " needs a value stack");
    if (uses_im && !models.inverse) throw Error(ErrorKind::MissingArtifact, "method " + method + " needs an inverse model");
    if (!uses_im && !models.q) throw Error(ErrorKind::MissingArtifact, "method " + method + " needs a Q model");
    Controller controller;
    if (uses_im) {
      controller = [&](const Point2& s, const Point2& t) { return models.inverse->query(s, t); };
    } else {
      controller = [&](const Point2& s, const Point2& t) { return rl::q_greedy_action(*models.q, s, t); };
    }
    std::vector<Episode> episodes(report.pairs.size());
    parallel_for(
        report.pairs.size(),
        [&](std::size_t i) {
          const auto& [s, g] = report.pairs[i];
          if (uses_tree) {
            const auto tree = rl::extract_tree_approx(*models.stack, s, g, cfg.tree_depth);
            episodes[i] = track_subgoals(ws, tree.flattened(), controller, opts);
          } else {
            const Point2 path[2] = {s, g};
            episodes[i] = track_subgoals(ws, path, controller, opts);
          }
        },
        workers);
    RlRow row{method, 0.0, 0.0, episodes.size()};
    for (const auto& e : episodes) {
      row.avg_dist += e.final_distance;
      row.avg_collision_rate += e.collided ? 1.0 : 0.0;
    }
    row.avg_dist /= static_cast<double>(episodes.size());
    row.avg_collision_rate /= static_cast<double>(episodes.size());
    report.rows.push_back(row);
    report.episodes.push_back(std::move(episodes));
  }
  return report;
}

IlRow eval_il(const env::Workspace& ws, const IlModelRef& ref, const env::DemoSet& test, const il::BcConfig& cfg,
              std::uint64_t seed, std::vector<il::PredictedTrajectory>* out) {
  if (test.trajectories.empty()) throw Error(ErrorKind::EmptyData, "no test demonstrations");
  if (!ref.model) throw Error(ErrorKind::MissingArtifact, "no trained model for " + std::string(il::to_string(ref.representation)));
  IlRow row{std::string(il::to_string(ref.representation))};
  const auto n = static_cast<double>(test.trajectories.size());
  for (std::size_t i = 0; i < test.trajectories.size(); ++i) {
    const auto& st = test.trajectories[i].states;
    auto pred = il::predict(ref.representation, *ref.model, st.front(), st.back(), cfg, derive_seed(seed, 10, i));
    il::assemble_and_score(ws, pred, cfg.stop_on_collision);
    row.success_rate += pred.success ? 1.0 : 0.0;
    row.pred_time_s += pred.wall_s;
    row.severity += pred.severity;
    row.mean_calls += pred.calls;
    row.max_depth = std::max(row.max_depth, static_cast<double>(pred.depth));
    if (out) out->push_back(std::move(pred));
  }
  row.success_rate /= n;
  row.pred_time_s /= n;
  row.severity /= n;
  row.mean_calls /= n;
  return row;
}

void write_rl_report(std::ostream& out, const std::vector<RlRow>& rows, const std::string& hash) {
  out << "method,avg_dist,avg_collision_rate,n,config_hash\n";
  out.precision(10);
  for (const auto& r : rows)
    out << r.method << ',' << r.avg_dist << ',' << r.avg_collision_rate << ',' << r.n << ',' << hash << '\n';
}

void write_il_report(std::ostream& out, const std::vector<IlRow>& rows, const std::string& hash) {
  out << "method,success_rate,pred_time_s,severity,config_hash\n";
  out.precision(10);
  for (const auto& r : rows)
    out << r.method << ',' << r.success_rate << ',' << r.pred_time_s << ',' << r.severity << ',' << hash << '\n';
}

std::vector<double> heatmap_values(const rl::ApproxValueStack& stack, const Point2& g, int k, int resolution) {
  if (k < 0 || k > stack.max_depth()) throw Error(ErrorKind::InvalidInput, "heatmap level out of range");
  const auto grid = rl::MidpointGrid::uniform(resolution);
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = stack.value(k, grid.points()[i], g);
  return v;
}

double reachable_fraction(std::span<const double> values, double threshold) {
  if (values.empty()) return 0.0;
  const auto hits = std::count_if(values.begin(), values.end(), [&](double v) { return v < threshold; });
  return static_cast<double>(hits) / static_cast<double>(values.size());
}

void write_heatmap_csv(std::ostream& out, std::span<const double> values, int resolution) {
  const auto res = static_cast<std::size_t>(resolution);
  if (values.size() != res * res) throw Error(ErrorKind::InvalidInput, "heatmap size mismatch");
  out.precision(17);
  for (std::size_t r = 0; r < res; ++r) {
    for (std::size_t c = 0; c < res; ++c) out << (c ? "," : "") << values[r * res + c];
    out << '\n';
  }
}

std::vector<double> read_heatmap_csv(std::istream& in) {
  std::vector<double> v;
  std::string line;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t n = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidInput, "bad heatmap cell '" + cell + "'");
      }
      ++n;
    }
    if (cols && n != cols) throw Error(ErrorKind::InvalidInput, "ragged heatmap CSV");
    cols = n;
  }
  return v;
}

void write_pgm(std::ostream& out, std::span<const double> values, int resolution) {
  const auto res = static_cast<std::size_t>(resolution);
  if (values.size() != res * res) throw Error(ErrorKind::InvalidInput, "heatmap size mismatch");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  out << "P2\n" << res << ' ' << res << "\n255\n";
  // Image rows run top to bottom, so the highest y comes first.
  for (std::size_t r = res; r-- > 0;) {
    for (std::size_t c = 0; c < res; ++c) {
      const double t = range > 0.0 ? (values[r * res + c] - lo) / range : 0.0;
      out << (c ? " " : "") << static_cast<int>(std::lround(t * 255.0));
    }
    out << '\n';
  }
}

GraphSuiteReport verify_graph_suite(const VerifyGraphSection& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  GraphSuiteReport rep;
  auto diff = [](double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return a == b ? 0.0 : kInfinity;
    return std::abs(a - b);
  };
  for (std::size_t gi = 0; gi < cfg.n_graphs; ++gi) {
    Rng rng(derive_seed(cfg.seed, gi));
    const std::size_t n = cfg.min_n + uniform_index(rng, cfg.max_n - cfg.min_n + 1);
    const auto graph = graph::random_graph(n, cfg.drop_fraction, cfg.max_weight, rng);
    const int k = graph::levels_for_exact(n);
    const auto stack = graph::stdp_solve(graph, k);
    const auto dj = graph::dijkstra_apsp(graph);
    const auto fw = graph::floyd_warshall(graph);
    const auto nn = static_cast<graph::Node>(n);
    for (graph::Node i = 0; i < nn; ++i) {
      for (graph::Node j = 0; j < nn; ++j) {
        rep.max_diff_dijkstra = std::max(rep.max_diff_dijkstra, diff(stack.top()(i, j), dj(i, j)));
        rep.max_diff_floyd = std::max(rep.max_diff_floyd, diff(stack.top()(i, j), fw(i, j)));
        for (int l = 0; l <= k; ++l) {
          if (i == j && stack.level(l)(i, j) != 0.0) rep.diagonal_zero = false;
          if (l > 0 && stack.level(l)(i, j) > stack.level(l - 1)(i, j)) rep.monotone = false;
        }
        if (std::isfinite(stack.top()(i, j))) {
          const auto tree = graph::extract_subgoal_tree(stack, i, j, k);
          if (diff(graph::path_cost(graph, tree.flattened()), stack.top()(i, j)) > 1e-9) rep.reconstruction = false;
        }
      }
    }
    ++rep.graphs;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace sgt::harness
