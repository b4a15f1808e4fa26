#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgt/baselines_rl.hpp"
#include "sgt/env2d.hpp"
#include "sgt/il.hpp"
#include "sgt/inverse_model.hpp"
#include "sgt/stdp_rl.hpp"

namespace sgt::harness {

struct DataSection {
  std::size_t n_transitions = 125000;
  std::uint64_t seed = 1;
};

struct DemoSection {
  std::string workspace = "simple";
  std::size_t n_train = 10000;
  std::size_t n_val = 1000;
  std::size_t n_test = 200;
  int horizon = 32;
  std::uint64_t seed = 2;
};

struct IlSection {
  std::vector<std::string> representations{"sequential", "sgt", "direct"};
  std::size_t modes = 1;
  std::size_t width = 64;
  std::size_t steps = 30000;
  std::size_t batch = 50;
  double lr = 1e-3;
  std::size_t eval_every = 500;
  bool stop_on_collision = false;
  std::uint64_t seed = 6;
};

struct EvalRlSection {
  std::vector<std::string> methods{"sgt_im", "sgt_q", "q"};
  std::size_t n_pairs = 200;
  int tree_depth = 5;
  double threshold = 0.15;
  int subgoal_budget = 40;
  int episode_budget = 800;
  std::uint64_t seed = 7;
};

struct HeatmapSection {
  Point2 goal{0.9, 0.9};
  std::vector<int> levels{0, 1, 2, 3, 4, 5};
};

struct VerifyGraphSection {
  std::size_t n_graphs = 100;
  std::size_t min_n = 4;
  std::size_t max_n = 64;
  double drop_fraction = 0.3;
  double max_weight = 10.0;
  std::uint64_t seed = 8;
};

struct RunConfig {
  std::string workspace = "rl";
  std::string run_dir = "runs/default";
  unsigned workers = 0;
  DataSection data;
  rl::ApproxStdpConfig stdp;
  rl::FittedQConfig fittedq;
  rl::FwConfig fw;
  DemoSection demos;
  IlSection il;
  EvalRlSection eval_rl;
  HeatmapSection heatmap;
  VerifyGraphSection verify_graph;
};

/// Checks keys, types and ranges; throws ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

struct TrackOptions {
  double threshold = 0.15;
  int subgoal_budget = 40;
  int episode_budget = 800;
};

struct Episode {
  Point2 final_state;
  double final_distance = 0.0;
  bool collided = false;
  int steps = 0;
};

using Controller = std::function<int(const Point2& s, const Point2& target)>;

/// Visits the sub-goals after the start in order, stepping the controller
/// until within the threshold or out of budget. Intermediate sub-goals get
/// subgoal_budget steps; the final goal may use what remains of the episode.
Episode track_subgoals(const env::Workspace& ws, std::span<const Point2> subgoals, const Controller& controller,
                       const TrackOptions& opts = {});

std::vector<std::pair<Point2, Point2>> evaluation_pairs(const env::Workspace& ws, std::size_t n, std::uint64_t seed);

struct RlModels {
  const rl::ApproxValueStack* stack = nullptr;
  const approx::InverseModel* inverse = nullptr;
  const rl::QModel* q = nullptr;
};

struct RlRow {
  std::string method;
  double avg_dist = 0.0;
  double avg_collision_rate = 0.0;
  std::size_t n = 0;
};

struct RlEvalReport {
  std::vector<RlRow> rows;
  std::vector<std::pair<Point2, Point2>> pairs;
  std::vector<std::vector<Episode>> episodes;  // per method, per pair
};

/// Methods: "sgt_im" (STDP tree + inverse model), "sgt_q" (STDP tree + greedy
/// Q), "q" (greedy Q straight at the goal).
RlEvalReport eval_rl(const env::Workspace& ws, const RlModels& models, const EvalRlSection& cfg, unsigned workers = 0);

struct IlRow {
  std::string method;
  double success_rate = 0.0;
  double pred_time_s = 0.0;
  double severity = 0.0;
  double mean_calls = 0.0;
  double max_depth = 0.0;
};

struct IlModelRef {
  il::Representation representation;
  const approx::MdnModel* model;
};

/// Predicts for every (start, goal) of the test demos; timing is single
/// threaded so wall times compare like for like.
IlRow eval_il(const env::Workspace& ws, const IlModelRef& ref, const env::DemoSet& test, const il::BcConfig& cfg,
              std::uint64_t seed, std::vector<il::PredictedTrajectory>* out = nullptr);

void write_rl_report(std::ostream& out, const std::vector<RlRow>& rows, const std::string& hash);
void write_il_report(std::ostream& out, const std::vector<IlRow>& rows, const std::string& hash);

/// V_k(cell centre, g) over a res x res grid, row-major with row = y.
std::vector<double> heatmap_values(const rl::ApproxValueStack& stack, const Point2& g, int k, int resolution = 50);
double reachable_fraction(std::span<const double> values, double threshold);
void write_heatmap_csv(std::ostream& out, std::span<const double> values, int resolution);
std::vector<double> read_heatmap_csv(std::istream& in);
/// Plain PGM, min-max scaled to 0..255; a constant map is written as all 0.
void write_pgm(std::ostream& out, std::span<const double> values, int resolution);

struct GraphSuiteReport {
  std::size_t graphs = 0;
  double max_diff_dijkstra = 0.0;
  double max_diff_floyd = 0.0;
  bool monotone = true;
  bool diagonal_zero = true;
  bool reconstruction = true;
  double seconds = 0.0;

  bool passed(double tol = 1e-9) const {
    return max_diff_dijkstra <= tol && max_diff_floyd <= tol && monotone && diagonal_zero && reconstruction;
  }
};

/// Random graphs through stdp_solve, Dijkstra and Floyd-Warshall.
GraphSuiteReport verify_graph_suite(const VerifyGraphSection& cfg);

}  // namespace sgt::harness
