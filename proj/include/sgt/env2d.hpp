#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sgt/common.hpp"

namespace sgt::env {

inline constexpr int kNumActions = 8;
inline constexpr double kStepLength = 0.025;
inline constexpr double kFreeCost = 0.025;
inline constexpr double kCollisionCost = 10.0;

/// Closed axis-aligned rectangle inside the unit square.
struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool contains(const Point2& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  Rect inflated(double margin) const { return {x_min - margin, y_min - margin, x_max + margin, y_max + margin}; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

class Workspace {
 public:
  Workspace(std::string name, std::vector<Rect> obstacles);

  const std::string& name() const { return name_; }
  std::span<const Rect> obstacles() const { return obstacles_; }

  /// Inside the closed unit square and outside every (closed) obstacle.
  bool in_free_space(const Point2& p) const;
  /// Distance-based variant: also keeps `clearance` away from obstacles.
  bool in_free_space(const Point2& p, double clearance) const;

  nlohmann::json to_json() const;
  static Workspace from_json(const nlohmann::json& j);

 private:
  std::string name_;
  std::vector<Rect> obstacles_;
};

/// Built-in layouts: "center", "rl", "simple", "hard", "empty".
Workspace make_workspace(std::string_view name);

/// Parametric sub-interval [t0, t1] of segment a->b lying in the closed rect.
std::optional<std::pair<double, double>> clip_segment(const Point2& a, const Point2& b, const Rect& r);

/// True iff the closed segment touches any obstacle.
bool collides(const Workspace& ws, const Point2& a, const Point2& b);

/// collides() extended with leaving the unit square; this is the test used for
/// scoring predicted trajectories whose points may stray outside.
bool segment_blocked(const Workspace& ws, const Point2& a, const Point2& b);

/// Length of the part of a->b inside obstacles or outside the unit square.
double blocked_length(const Workspace& ws, const Point2& a, const Point2& b);

Point2 action_displacement(int u);

struct StepResult {
  Point2 next;
  double cost = 0.0;
};

/// Moves 0.025 along direction 45deg * u; a blocked move leaves the state in
/// place at cost 10. Throws InvalidState if s is not in free space.
StepResult step(const Workspace& ws, const Point2& s, int u);

struct TransitionTuple {
  Point2 s;
  int u = 0;
  double c = 0.0;
  Point2 s_next;
};

using TransitionDataset = std::vector<TransitionTuple>;

/// Uniform free state by rejection, restricted to `region` when given.
Point2 sample_free_point(const Workspace& ws, Rng& rng, const Rect* region = nullptr, double clearance = 0.0);

/// Each tuple: s uniform over free space, u uniform over actions, (s', c) from
/// step(). Tuple i uses its own generator derived from (seed, i).
TransitionDataset sample_transitions(const Workspace& ws, std::size_t n, std::uint64_t seed);

void write_transitions_csv(std::ostream& out, const TransitionDataset& data);
TransitionDataset read_transitions_csv(std::istream& in);

struct Trajectory {
  std::vector<Point2> states;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
  double arclength() const;
};

struct ExpertOptions {
  int grid = 100;
  // Planning margin kept around obstacles; the final path is still checked
  // against the real geometry.
  double clearance = 0.0;
};

/// 8-connected A* on a grid x grid lattice of cell centres followed by greedy
/// shortcutting. Throws Unreachable when the lattice offers no route.
Trajectory expert_plan(const Workspace& ws, const Point2& s, const Point2& g, const ExpertOptions& opts = {});

/// Raw (pre-shortcut) lattice path, exposed for comparison in tests.
Trajectory expert_plan_unsmoothed(const Workspace& ws, const Point2& s, const Point2& g,
                                  const ExpertOptions& opts = {});

bool is_power_of_two(int t);

/// Arclength-uniform linear interpolation to exactly horizon + 1 states.
Trajectory resample(const Trajectory& traj, int horizon);

struct DemoSet {
  std::string workspace;
  int horizon = 0;
  std::vector<Trajectory> trajectories;
};

struct DemoOptions {
  ExpertOptions expert{100, 0.03};
  int max_attempts_per_demo = 50;
};

/// Start/goal regions used for demonstrations: left/right rooms on "simple"
/// and "hard", the whole square elsewhere.
std::pair<Rect, Rect> demo_regions(const Workspace& ws);

DemoSet generate_demos(const Workspace& ws, std::size_t n, int horizon, std::uint64_t seed,
                       const DemoOptions& opts = {});

void write_demos_csv(std::ostream& out, const DemoSet& demos);
DemoSet read_demos_csv(std::istream& in, std::string workspace = {});

}  // namespace sgt::env
