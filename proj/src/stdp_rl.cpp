#include "sgt/stdp_rl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace sgt::rl {

namespace {

void append_pair(std::vector<double>& points, const Point2& s, const Point2& g) {
  points.insert(points.end(), {s.x, s.y, g.x, g.y});
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingArtifact, "missing artifact " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidInput, "bad JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

MidpointGrid MidpointGrid::uniform(int resolution) {
  if (resolution < 1) throw Error(ErrorKind::InvalidInput, "grid resolution must be positive");
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int row = 0; row < resolution; ++row)
    for (int col = 0; col < resolution; ++col)
      pts.push_back({(col + 0.5) / resolution, (row + 0.5) / resolution});
  return MidpointGrid(std::move(pts), resolution);
}

MidpointGrid MidpointGrid::supported(int resolution, const env::TransitionDataset& data) {
  if (data.empty()) throw Error(ErrorKind::EmptyData, "transition dataset is empty");
  std::vector<double> states;
  states.reserve(data.size() * 2);
  for (const auto& t : data) states.insert(states.end(), {t.s.x, t.s.y});
  const approx::KdTree tree(states, 2);
  const double radius = 0.25 / resolution;
  const auto lattice = uniform(resolution);
  std::vector<Point2> kept;
  for (const auto& p : lattice.points()) {
    approx::Neighbor nb;
    const double q[2] = {p.x, p.y};
    tree.knn(q, 1, &nb);
    if (nb.dist2 <= radius * radius) kept.push_back(p);
  }
  if (kept.empty()) throw Error(ErrorKind::EmptyData, "no grid cell is supported by the data");
  return MidpointGrid(std::move(kept), resolution);
}

MidpointGrid::MidpointGrid(std::vector<Point2> points, int resolution)
    : resolution_(resolution), points_(std::move(points)) {
  if (points_.empty()) throw Error(ErrorKind::InvalidInput, "midpoint grid is empty");
}

GridMinimum min_over_grid(const approx::KnnModel& v, const Point2& s, const Point2& g, const MidpointGrid& grid) {
  return min_over_grid([&](const Point2& a, const Point2& b) { return pair_value(v, a, b); }, s, g, grid.points());
}

approx::KnnModel fit_v0(const env::TransitionDataset& data, double c_max, std::size_t n_random, std::size_t n_self,
                        std::uint64_t seed, std::size_t knn_k) {
  if (data.empty()) throw Error(ErrorKind::EmptyData, "transition dataset is empty");
  std::vector<double> points;
  std::vector<double> targets;
  points.reserve((data.size() + n_random + n_self) * 4);
  double max_cost = 0.0;
  for (const auto& t : data) {
    if (t.s_next == t.s) continue;
    max_cost = std::max(max_cost, t.c);
    append_pair(points, t.s, t.s_next);
    targets.push_back(t.c);
  }
  if (!(c_max > max_cost)) {
    throw Error(ErrorKind::BadCmax, "C_max " + std::to_string(c_max) + " must exceed the largest observed cost " +
                                        std::to_string(max_cost));
  }
  Rng rng(derive_seed(seed, 0));
  for (std::size_t i = 0; i < n_random; ++i) {
    const Point2 s = data[uniform_index(rng, data.size())].s;
    const Point2 r = data[uniform_index(rng, data.size())].s;
    append_pair(points, s, r);
    targets.push_back(c_max);
  }
  for (std::size_t i = 0; i < n_self; ++i) {
    const Point2 s = data[uniform_index(rng, data.size())].s;
    append_pair(points, s, s);
    targets.push_back(0.0);
  }
  return approx::KnnModel::fit(std::move(points), 4, std::move(targets), 1, knn_k);
}

ApproxValueStack approx_stdp_levels(approx::KnnModel v0, int levels, const MidpointGrid& grid,
                                    const GoalPairSource& pairs, std::size_t knn_k, double c_max, unsigned workers) {
  if (levels < 0) throw Error(ErrorKind::InvalidInput, "level count must be non-negative");
  ApproxValueStack stack{{}, c_max, grid};
  stack.levels.push_back(std::move(v0));
  for (int k = 1; k <= levels; ++k) {
    const auto goal_pairs = pairs(k);
    if (goal_pairs.empty()) throw Error(ErrorKind::EmptyData, "no goal pairs for level " + std::to_string(k));
    const approx::KnnModel& prev = stack.levels.back();
    std::vector<double> targets(goal_pairs.size());
    parallel_for(
        goal_pairs.size(),
        [&](std::size_t i) { targets[i] = min_over_grid(prev, goal_pairs[i].first, goal_pairs[i].second, grid).value; },
        workers);
    const double bound = std::ldexp(c_max, k);
    std::vector<double> points;
    points.reserve(goal_pairs.size() * 4);
    for (std::size_t i = 0; i < goal_pairs.size(); ++i) {
      if (!(targets[i] >= 0.0 && targets[i] <= bound)) {
        throw Error(ErrorKind::NumericalFailure, "level " + std::to_string(k) + " target " +
                                                     std::to_string(targets[i]) + " outside [0, 2^k C_max]");
      }
      append_pair(points, goal_pairs[i].first, goal_pairs[i].second);
    }
    stack.levels.push_back(approx::KnnModel::fit(std::move(points), 4, std::move(targets), 1, knn_k));
  }
  return stack;
}

ApproxValueStack approx_stdp(const env::TransitionDataset& data, const ApproxStdpConfig& cfg) {
  if (cfg.levels < 1) throw Error(ErrorKind::InvalidInput, "approximate STDP needs at least one level");
  if (data.empty()) throw Error(ErrorKind::EmptyData, "transition dataset is empty");
  const std::size_t n_random = cfg.n_random ? cfg.n_random : data.size() / 5;
  const std::size_t n_self = cfg.n_self ? cfg.n_self : data.size() / 5;
  auto v0 = fit_v0(data, cfg.c_max, n_random, n_self, cfg.seed, cfg.knn_k);
  GoalPairSource pairs = [&](int level) {
    Rng rng(derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(level)));
    std::vector<std::pair<Point2, Point2>> out(cfg.n_goal_pairs);
    for (auto& [s, g] : out) {
      s = data[uniform_index(rng, data.size())].s;
      g = data[uniform_index(rng, data.size())].s;
    }
    return out;
  };
  auto grid = cfg.grid_support ? MidpointGrid::supported(cfg.grid_resolution, data)
                               : MidpointGrid::uniform(cfg.grid_resolution);
  return approx_stdp_levels(std::move(v0), cfg.levels, grid, pairs, cfg.knn_k, cfg.c_max, cfg.workers);
}

SubGoalTree<Point2> extract_tree_approx(const ApproxValueStack& stack, const Point2& s, const Point2& g, int depth) {
  if (depth < 0 || depth > stack.max_depth()) throw Error(ErrorKind::InvalidInput, "tree depth exceeds stack depth");
  SubGoalTree<Point2> tree(depth, s, g);
  tree.for_each_internal([&](int level, std::size_t, std::size_t lo, std::size_t hi) {
    const auto& v = stack.levels[static_cast<std::size_t>(depth - 1 - level)];
    tree.at((lo + hi) / 2) = min_over_grid(v, tree.at(lo), tree.at(hi), stack.grid).point;
  });
  return tree;
}

void save_stack(const ApproxValueStack& stack, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json grid_points = nlohmann::json::array();
  const auto res = static_cast<std::size_t>(stack.grid.resolution());
  if (stack.grid.size() != res * res)
    for (const auto& p : stack.grid.points()) grid_points.push_back({p.x, p.y});
  nlohmann::json manifest{{"K", stack.max_depth()}, {"C_max", stack.c_max}, {"grid", stack.grid.resolution()}};
  if (!grid_points.empty()) manifest["grid_points"] = grid_points;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  for (int k = 0; k <= stack.max_depth(); ++k) {
    std::ofstream out(dir / ("level_" + std::to_string(k) + ".json"));
    out << stack.levels[static_cast<std::size_t>(k)].to_json().dump() << '\n';
    if (!out) throw Error(ErrorKind::IoError, "failed writing stack level " + std::to_string(k));
  }
}

ApproxValueStack load_stack(const std::filesystem::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  const int levels = manifest.at("K").get<int>();
  const int res = manifest.at("grid").get<int>();
  ApproxValueStack stack;
  stack.c_max = manifest.at("C_max").get<double>();
  if (manifest.contains("grid_points")) {
    std::vector<Point2> pts;
    for (const auto& p : manifest.at("grid_points")) pts.push_back({p[0].get<double>(), p[1].get<double>()});
    stack.grid = MidpointGrid(std::move(pts), res);
  } else {
    stack.grid = MidpointGrid::uniform(res);
  }
  for (int k = 0; k <= levels; ++k)
    stack.levels.push_back(approx::KnnModel::from_json(read_json(dir / ("level_" + std::to_string(k) + ".json"))));
  return stack;
}

}  // namespace sgt::rl
