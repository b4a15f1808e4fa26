#include "sgt/env2d.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>

namespace sgt::env {

namespace {

constexpr Rect kUnitSquare{0.0, 0.0, 1.0, 1.0};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidInput, "bad number '" + s + "' on line " + std::to_string(line_no));
  }
}

void expect_header(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InvalidInput, "missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw Error(ErrorKind::InvalidInput, "unexpected CSV header '" + line + "'");
}

}  // namespace

Workspace::Workspace(std::string name, std::vector<Rect> obstacles)
    : name_(std::move(name)), obstacles_(std::move(obstacles)) {
  for (const Rect& r : obstacles_) {
    const bool ok = 0.0 <= r.x_min && r.x_min < r.x_max && r.x_max <= 1.0 && 0.0 <= r.y_min &&
                    r.y_min < r.y_max && r.y_max <= 1.0;
    if (!ok) throw Error(ErrorKind::InvalidInput, "obstacle must satisfy 0 <= min < max <= 1 on both axes");
    if (r == kUnitSquare) throw Error(ErrorKind::InvalidInput, "obstacle may not cover the whole square");
  }
}

bool Workspace::in_free_space(const Point2& p) const { return in_free_space(p, 0.0); }

bool Workspace::in_free_space(const Point2& p, double clearance) const {
  if (!kUnitSquare.contains(p)) return false;
  return std::none_of(obstacles_.begin(), obstacles_.end(),
                      [&](const Rect& r) { return r.inflated(clearance).contains(p); });
}

nlohmann::json Workspace::to_json() const {
  nlohmann::json obs = nlohmann::json::array();
  for (const Rect& r : obstacles_) obs.push_back({r.x_min, r.y_min, r.x_max, r.y_max});
  return {{"name", name_}, {"obstacles", obs}};
}

Workspace Workspace::from_json(const nlohmann::json& j) {
  try {
    std::vector<Rect> obs;
    for (const auto& o : j.at("obstacles")) {
      if (o.size() != 4) throw Error(ErrorKind::InvalidInput, "obstacle needs 4 coordinates");
      obs.push_back({o[0].get<double>(), o[1].get<double>(), o[2].get<double>(), o[3].get<double>()});
    }
    return Workspace(j.at("name").get<std::string>(), std::move(obs));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("bad workspace JSON: ") + e.what());
  }
}

Workspace make_workspace(std::string_view name) {
  if (name == "center") return Workspace("center", {{0.4, 0.4, 0.6, 0.6}});
  if (name == "rl") return Workspace("rl", {{0.2, 0.0, 0.45, 0.7}, {0.55, 0.3, 0.8, 1.0}});
  if (name == "simple") return Workspace("simple", {{0.45, 0.0, 0.55, 0.4}, {0.45, 0.6, 0.55, 1.0}});
  if (name == "hard") {
    // Two walls, each with a low and a high gap: four routes left to right.
    return Workspace("hard", {{0.3, 0.0, 0.35, 0.15},
                              {0.3, 0.3, 0.35, 0.7},
                              {0.3, 0.85, 0.35, 1.0},
                              {0.65, 0.0, 0.7, 0.15},
                              {0.65, 0.3, 0.7, 0.7},
                              {0.65, 0.85, 0.7, 1.0}});
  }
  if (name == "empty") return Workspace("empty", {});
  throw Error(ErrorKind::InvalidInput, "unknown workspace '" + std::string(name) + "'");
}

std::optional<std::pair<double, double>> clip_segment(const Point2& a, const Point2& b, const Rect& r) {
  double t0 = 0.0;
  double t1 = 1.0;
  const std::array<std::array<double, 4>, 2> axes{{{a.x, b.x - a.x, r.x_min, r.x_max},
                                                   {a.y, b.y - a.y, r.y_min, r.y_max}}};
  for (const auto& [p, d, lo, hi] : axes) {
    if (d == 0.0) {
      if (p < lo || p > hi) return std::nullopt;
      continue;
    }
    double ta = (lo - p) / d;
    double tb = (hi - p) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

bool collides(const Workspace& ws, const Point2& a, const Point2& b) {
  return std::any_of(ws.obstacles().begin(), ws.obstacles().end(),
                     [&](const Rect& r) { return clip_segment(a, b, r).has_value(); });
}

bool segment_blocked(const Workspace& ws, const Point2& a, const Point2& b) {
  // The square is convex, so both endpoints inside keeps the whole segment in.
  return !kUnitSquare.contains(a) || !kUnitSquare.contains(b) || collides(ws, a, b);
}

double blocked_length(const Workspace& ws, const Point2& a, const Point2& b) {
  const double length = distance(a, b);
  if (length == 0.0) return 0.0;
  std::vector<std::pair<double, double>> spans;
  if (auto inside = clip_segment(a, b, kUnitSquare)) {
    if (inside->first > 0.0) spans.emplace_back(0.0, inside->first);
    if (inside->second < 1.0) spans.emplace_back(inside->second, 1.0);
  } else {
    return length;
  }
  for (const Rect& r : ws.obstacles())
    if (auto hit = clip_segment(a, b, r)) spans.push_back(*hit);
  std::sort(spans.begin(), spans.end());
  double covered = 0.0;
  double cur_lo = 0.0;
  double cur_hi = -1.0;
  for (const auto& [lo, hi] : spans) {
    if (lo > cur_hi) {
      if (cur_hi > cur_lo) covered += cur_hi - cur_lo;
      cur_lo = lo;
      cur_hi = hi;
    } else {
      cur_hi = std::max(cur_hi, hi);
    }
  }
  if (cur_hi > cur_lo) covered += cur_hi - cur_lo;
  return std::min(1.0, covered) * length;
}

Point2 action_displacement(int u) {
  if (u < 0 || u >= kNumActions) throw Error(ErrorKind::InvalidInput, "action index must be in 0..7");
  // Exact unit vectors at 45 degree increments; std::cos would leave 1e-17
  // residue on the axis-aligned moves.
  constexpr double h = 0.70710678118654752440;
  static constexpr std::array<Point2, kNumActions> kDirs{
      {{1, 0}, {h, h}, {0, 1}, {-h, h}, {-1, 0}, {-h, -h}, {0, -1}, {h, -h}}};
  return kDirs[static_cast<std::size_t>(u)] * kStepLength;
}

StepResult step(const Workspace& ws, const Point2& s, int u) {
  if (!ws.in_free_space(s)) throw Error(ErrorKind::InvalidState, "state is not in free space");
  const Point2 candidate = s + action_displacement(u);
  if (segment_blocked(ws, s, candidate)) return {s, kCollisionCost};
  return {candidate, kFreeCost};
}

Point2 sample_free_point(const Workspace& ws, Rng& rng, const Rect* region, double clearance) {
  const Rect box = region ? *region : kUnitSquare;
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    const Point2 p{box.x_min + (box.x_max - box.x_min) * uniform01(rng),
                   box.y_min + (box.y_max - box.y_min) * uniform01(rng)};
    if (ws.in_free_space(p, clearance)) return p;
  }
  throw Error(ErrorKind::InvalidInput, "could not sample a free point in the requested region");
}

TransitionDataset sample_transitions(const Workspace& ws, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::InvalidInput, "transition count must be positive");
  TransitionDataset data(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    TransitionTuple& t = data[i];
    t.s = sample_free_point(ws, rng);
    t.u = static_cast<int>(uniform_index(rng, kNumActions));
    const StepResult r = step(ws, t.s, t.u);
    t.s_next = r.next;
    t.c = r.cost;
  });
  return data;
}

void write_transitions_csv(std::ostream& out, const TransitionDataset& data) {
  out << "sx,sy,u,c,spx,spy\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& t : data)
    out << t.s.x << ',' << t.s.y << ',' << t.u << ',' << t.c << ',' << t.s_next.x << ',' << t.s_next.y << '\n';
}

TransitionDataset read_transitions_csv(std::istream& in) {
  expect_header(in, "sx,sy,u,c,spx,spy");
  TransitionDataset data;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 6) throw Error(ErrorKind::InvalidInput, "expected 6 fields on line " + std::to_string(line_no));
    TransitionTuple t;
    t.s = {parse_double(f[0], line_no), parse_double(f[1], line_no)};
    t.u = static_cast<int>(parse_double(f[2], line_no));
    t.c = parse_double(f[3], line_no);
    t.s_next = {parse_double(f[4], line_no), parse_double(f[5], line_no)};
    if (t.u < 0 || t.u >= kNumActions) throw Error(ErrorKind::InvalidInput, "action out of range");
    data.push_back(t);
  }
  return data;
}

double Trajectory::arclength() const {
  double total = 0.0;
  for (std::size_t i = 1; i < states.size(); ++i) total += distance(states[i - 1], states[i]);
  return total;
}

namespace {

/// Lattice of cell centres with precomputed 8-neighbour edge validity; built
/// once per (workspace, options) and reused across queries.
class LatticePlanner {
 public:
  LatticePlanner(const Workspace& ws, int grid, double clearance)
      : grid_(grid), clearance_(clearance) {
    if (grid < 2) throw Error(ErrorKind::InvalidInput, "planner grid must be at least 2");
    for (const Rect& r : ws.obstacles()) inflated_.push_back(r.inflated(clearance));
    const std::size_t cells = static_cast<std::size_t>(grid) * grid;
    free_.assign(cells, false);
    edges_.assign(cells, 0);
    for (int j = 0; j < grid; ++j)
      for (int i = 0; i < grid; ++i) free_[id(i, j)] = point_ok(center(i, j));
    for (int j = 0; j < grid; ++j)
      for (int i = 0; i < grid; ++i) {
        if (!free_[id(i, j)]) continue;
        for (int d = 0; d < 8; ++d) {
          const int ni = i + kDi[d];
          const int nj = j + kDj[d];
          if (ni < 0 || nj < 0 || ni >= grid || nj >= grid || !free_[id(ni, nj)]) continue;
          if (segment_ok(center(i, j), center(ni, nj))) edges_[id(i, j)] |= static_cast<std::uint8_t>(1u << d);
        }
      }
  }

  double clearance() const { return clearance_; }

  bool point_ok(const Point2& p) const {
    if (!kUnitSquare.contains(p)) return false;
    return std::none_of(inflated_.begin(), inflated_.end(), [&](const Rect& r) { return r.contains(p); });
  }

  bool segment_ok(const Point2& a, const Point2& b) const {
    if (!kUnitSquare.contains(a) || !kUnitSquare.contains(b)) return false;
    return std::none_of(inflated_.begin(), inflated_.end(),
                        [&](const Rect& r) { return clip_segment(a, b, r).has_value(); });
  }

  /// Lattice path s -> cells -> g, or nullopt when none exists.
  std::optional<std::vector<Point2>> search(const Point2& s, const Point2& g) const {
    const auto start_cells = visible_cells(s);
    const auto goal_cells = visible_cells(g);
    if (start_cells.empty() || goal_cells.empty()) return std::nullopt;

    const std::size_t cells = free_.size();
    const std::size_t goal_node = cells;  // virtual terminal node
    std::vector<double> cost(cells + 1, kInfinity);
    std::vector<std::int64_t> parent(cells + 1, -1);
    std::vector<double> goal_link(cells, kInfinity);
    for (auto c : goal_cells) goal_link[c] = distance(cell_center(c), g);

    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    for (auto c : start_cells) {
      const double d = distance(s, cell_center(c));
      if (d < cost[c]) {
        cost[c] = d;
        open.emplace(d + distance(cell_center(c), g), c);
      }
    }
    std::vector<bool> closed(cells + 1, false);
    while (!open.empty()) {
      const auto [f, node] = open.top();
      open.pop();
      if (closed[node]) continue;
      closed[node] = true;
      if (node == goal_node) break;
      if (goal_link[node] < kInfinity) {
        const double via = cost[node] + goal_link[node];
        if (via < cost[goal_node]) {
          cost[goal_node] = via;
          parent[goal_node] = static_cast<std::int64_t>(node);
          open.emplace(via, goal_node);
        }
      }
      const int i = static_cast<int>(node % grid_);
      const int j = static_cast<int>(node / grid_);
      for (int d = 0; d < 8; ++d) {
        if (!(edges_[node] & (1u << d))) continue;
        const std::size_t nb = id(i + kDi[d], j + kDj[d]);
        const double step_cost = (d % 2 == 0) ? 1.0 / grid_ : std::sqrt(2.0) / grid_;
        const double via = cost[node] + step_cost;
        if (via < cost[nb]) {
          cost[nb] = via;
          parent[nb] = static_cast<std::int64_t>(node);
          open.emplace(via + distance(cell_center(nb), g), nb);
        }
      }
    }
    if (parent[goal_node] < 0) return std::nullopt;
    std::vector<Point2> path{g};
    for (auto node = parent[goal_node]; node >= 0; node = parent[static_cast<std::size_t>(node)])
      path.push_back(cell_center(static_cast<std::size_t>(node)));
    path.push_back(s);
    std::reverse(path.begin(), path.end());
    return path;
  }

  std::vector<Point2> shortcut(const std::vector<Point2>& path) const {
    std::vector<Point2> out{path.front()};
    std::size_t i = 0;
    const std::size_t last = path.size() - 1;
    while (i < last) {
      std::size_t j = last;
      while (j > i + 1 && !segment_ok(path[i], path[j])) --j;
      out.push_back(path[j]);
      i = j;
    }
    return out;
  }

 private:
  // Direction d: even = axis move, odd = diagonal.
  static constexpr std::array<int, 8> kDi{1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr std::array<int, 8> kDj{0, 1, 1, 1, 0, -1, -1, -1};

  std::size_t id(int i, int j) const { return static_cast<std::size_t>(j) * grid_ + static_cast<std::size_t>(i); }
  Point2 center(int i, int j) const { return {(i + 0.5) / grid_, (j + 0.5) / grid_}; }
  Point2 cell_center(std::size_t c) const {
    return center(static_cast<int>(c % grid_), static_cast<int>(c / grid_));
  }

  std::vector<std::size_t> visible_cells(const Point2& p) const {
    const int ci = std::clamp(static_cast<int>(p.x * grid_), 0, grid_ - 1);
    const int cj = std::clamp(static_cast<int>(p.y * grid_), 0, grid_ - 1);
    std::vector<std::size_t> found;
    for (int radius = 1; radius <= 4 && found.empty(); ++radius) {
      for (int j = cj - radius; j <= cj + radius; ++j)
        for (int i = ci - radius; i <= ci + radius; ++i) {
          if (i < 0 || j < 0 || i >= grid_ || j >= grid_) continue;
          const std::size_t c = id(i, j);
          if (free_[c] && segment_ok(p, center(i, j))) found.push_back(c);
        }
    }
    return found;
  }

  int grid_;
  double clearance_;
  std::vector<Rect> inflated_;
  std::vector<bool> free_;
  std::vector<std::uint8_t> edges_;
};

std::vector<LatticePlanner> build_planners(const Workspace& ws, const ExpertOptions& opts) {
  // The planning margin is tried first; the bare geometry is the fallback for
  // endpoints inside the margin or passages the margin closes.
  std::vector<LatticePlanner> planners;
  planners.emplace_back(ws, opts.grid, opts.clearance);
  if (opts.clearance > 0.0) planners.emplace_back(ws, opts.grid, 0.0);
  return planners;
}

std::vector<Point2> plan_polyline(const Workspace& ws, const std::vector<LatticePlanner>& planners, const Point2& s,
                                  const Point2& g, bool smooth) {
  if (!ws.in_free_space(s) || !ws.in_free_space(g))
    throw Error(ErrorKind::InvalidState, "expert endpoints must lie in free space");
  if (s == g) return {s, g};
  for (const LatticePlanner& planner : planners) {
    if (!planner.point_ok(s) || !planner.point_ok(g)) continue;
    if (planner.segment_ok(s, g)) return {s, g};
    auto path = planner.search(s, g);
    if (!path) continue;
    return smooth ? planner.shortcut(*path) : *path;
  }
  throw Error(ErrorKind::Unreachable, "no lattice path between the requested states");
}

}  // namespace

Trajectory expert_plan(const Workspace& ws, const Point2& s, const Point2& g, const ExpertOptions& opts) {
  return {plan_polyline(ws, build_planners(ws, opts), s, g, true)};
}

Trajectory expert_plan_unsmoothed(const Workspace& ws, const Point2& s, const Point2& g, const ExpertOptions& opts) {
  return {plan_polyline(ws, build_planners(ws, opts), s, g, false)};
}

bool is_power_of_two(int t) { return t > 0 && (t & (t - 1)) == 0; }

Trajectory resample(const Trajectory& traj, int horizon) {
  if (!is_power_of_two(horizon)) throw Error(ErrorKind::InvalidInput, "horizon must be a power of two");
  if (traj.states.empty()) throw Error(ErrorKind::InvalidInput, "cannot resample an empty trajectory");
  const auto& pts = traj.states;
  std::vector<double> cumulative(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cumulative[i] = cumulative[i - 1] + distance(pts[i - 1], pts[i]);
  const double total = cumulative.back();

  Trajectory out;
  out.states.resize(static_cast<std::size_t>(horizon) + 1, pts.front());
  out.states.back() = pts.back();
  if (total == 0.0) return out;
  std::size_t seg = 1;
  for (int t = 1; t < horizon; ++t) {
    const double target = total * t / horizon;
    while (seg + 1 < pts.size() && cumulative[seg] < target) ++seg;
    const double len = cumulative[seg] - cumulative[seg - 1];
    const double frac = len > 0.0 ? (target - cumulative[seg - 1]) / len : 0.0;
    out.states[static_cast<std::size_t>(t)] = lerp(pts[seg - 1], pts[seg], std::clamp(frac, 0.0, 1.0));
  }
  return out;
}

std::pair<Rect, Rect> demo_regions(const Workspace& ws) {
  if (ws.name() == "simple") return {{0.0, 0.0, 0.45, 1.0}, {0.55, 0.0, 1.0, 1.0}};
  if (ws.name() == "hard") return {{0.0, 0.0, 0.3, 1.0}, {0.7, 0.0, 1.0, 1.0}};
  return {kUnitSquare, kUnitSquare};
}

DemoSet generate_demos(const Workspace& ws, std::size_t n, int horizon, std::uint64_t seed, const DemoOptions& opts) {
  if (n == 0) throw Error(ErrorKind::InvalidInput, "demo count must be positive");
  if (!is_power_of_two(horizon)) throw Error(ErrorKind::InvalidInput, "horizon must be a power of two");
  const auto [start_region, goal_region] = demo_regions(ws);
  DemoSet demos{ws.name(), horizon, std::vector<Trajectory>(n)};
  const auto planners = build_planners(ws, opts.expert);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    for (int attempt = 0; attempt < opts.max_attempts_per_demo; ++attempt) {
      const Point2 s = sample_free_point(ws, rng, &start_region, opts.expert.clearance);
      const Point2 g = sample_free_point(ws, rng, &goal_region, opts.expert.clearance);
      Trajectory traj = resample(Trajectory{plan_polyline(ws, planners, s, g, true)}, horizon);
      bool clean = true;
      for (std::size_t t = 1; t < traj.states.size() && clean; ++t)
        clean = !segment_blocked(ws, traj.states[t - 1], traj.states[t]);
      if (clean) {
        demos.trajectories[i] = std::move(traj);
        return;
      }
    }
    throw Error(ErrorKind::Unreachable, "could not produce a collision-free demonstration");
  });
  return demos;
}

void write_demos_csv(std::ostream& out, const DemoSet& demos) {
  out << "traj_id,t,x,y\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < demos.trajectories.size(); ++i) {
    const auto& states = demos.trajectories[i].states;
    for (std::size_t t = 0; t < states.size(); ++t) out << i << ',' << t << ',' << states[t].x << ',' << states[t].y << '\n';
  }
}

DemoSet read_demos_csv(std::istream& in, std::string workspace) {
  expect_header(in, "traj_id,t,x,y");
  std::map<long long, std::vector<std::pair<long long, Point2>>> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() < 4) throw Error(ErrorKind::InvalidInput, "expected 4 fields on line " + std::to_string(line_no));
    rows[static_cast<long long>(parse_double(f[0], line_no))].emplace_back(
        static_cast<long long>(parse_double(f[1], line_no)),
        Point2{parse_double(f[2], line_no), parse_double(f[3], line_no)});
  }
  DemoSet demos{std::move(workspace), 0, {}};
  for (auto& [id, pts] : rows) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Trajectory traj;
    for (const auto& [t, p] : pts) traj.states.push_back(p);
    if (demos.trajectories.empty()) demos.horizon = traj.horizon();
    else if (traj.horizon() != demos.horizon) throw Error(ErrorKind::InvalidInput, "demos have mixed horizons");
    demos.trajectories.push_back(std::move(traj));
  }
  return demos;
}

}  // namespace sgt::env
