#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "sgt/common.hpp"
#include "sgt/env2d.hpp"
#include "sgt/mdn.hpp"
#include "sgt/subgoal_tree.hpp"

namespace sgt::il {

enum class Representation { Sequential, Sgt, Direct };

std::string_view to_string(Representation r);
Representation parse_representation(std::string_view name);

struct BcConfig {
  Representation representation = Representation::Sgt;
  std::size_t modes = 1;
  int horizon = 32;
  std::size_t width = 64;
  approx::TrainOptions train;
  std::size_t val_samples_per_demo = 2;
  bool stop_on_collision = false;
  double goal_tolerance = 0.05;
  std::uint64_t seed = 0;

  int depth() const;
};

std::size_t condition_dim(Representation r);

/// Draws (demo, index) pairs uniformly and emits the representation's
/// (condition, target) rows:
///   sequential (s_t, g) -> s_{t+1}
///   sgt        (s_a, s_b) -> s_{(a+b)/2}, b - a even and >= 2
///   direct     (s_0, g, t/T) -> s_t, 0 < t < T
approx::BatchSampler make_sampler(Representation r, const env::DemoSet& demos);

/// The SGT index sampler on its own: a uniform, then an even gap uniform over
/// the gaps that fit.
std::pair<int, int> sample_sgt_indices(Rng& rng, int horizon);

/// Fixed validation rows drawn with the same sampler.
approx::MdnData make_validation(Representation r, const env::DemoSet& demos, std::size_t per_demo,
                                std::uint64_t seed);

struct TrainedBc {
  approx::MdnModel model;
  approx::TrainLog log;
};

TrainedBc train_bc(const env::DemoSet& train, const env::DemoSet& validation, const BcConfig& cfg);
TrainedBc train_sequential(const env::DemoSet& train, const env::DemoSet& validation, BcConfig cfg);
TrainedBc train_sgt(const env::DemoSet& train, const env::DemoSet& validation, BcConfig cfg);
TrainedBc train_direct(const env::DemoSet& train, const env::DemoSet& validation, BcConfig cfg);

struct PredictedTrajectory {
  std::vector<Point2> states;
  std::vector<bool> segment_collides;
  bool success = true;
  double severity = 0.0;
  double wall_s = 0.0;
  int calls = 0;
  int depth = 0;
};

/// Rolls the model forward from s until within `tolerance` of g or
/// `max_steps` calls, then appends g.
PredictedTrajectory predict_sequential(const approx::MdnModel& model, const Point2& s, const Point2& g, int max_steps,
                                       std::uint64_t seed, double tolerance = 0.05);

/// Depth-first midpoint expansion, one model call per node.
PredictedTrajectory predict_sgt_recursive(const approx::MdnModel& model, const Point2& s, const Point2& g, int depth,
                                          std::uint64_t seed);
/// Level-by-level expansion with one batched model call per level. Node
/// (level, segment) samples its mode from derive_seed(seed, level, segment) in
/// both variants, so the two produce identical states.
PredictedTrajectory predict_sgt_parallel(const approx::MdnModel& model, const Point2& s, const Point2& g, int depth,
                                         std::uint64_t seed);

/// All T - 1 interior states from one batched call.
PredictedTrajectory predict_direct(const approx::MdnModel& model, const Point2& s, const Point2& g, int horizon,
                                   std::uint64_t seed);

PredictedTrajectory predict(Representation r, const approx::MdnModel& model, const Point2& s, const Point2& g,
                            const BcConfig& cfg, std::uint64_t seed);

/// Fills collision flags, success and severity. With stop_on_collision the
/// path is cut before its first blocked segment and joined straight to its
/// last state.
void assemble_and_score(const env::Workspace& ws, PredictedTrajectory& traj, bool stop_on_collision = false);

void write_predictions_csv(std::ostream& out, const std::vector<PredictedTrajectory>& trajs);

}  // namespace sgt::il
