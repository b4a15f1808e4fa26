#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "sgt/common.hpp"

namespace sgt::approx {

inline constexpr double kMinLogStd = -6.907755278982137;  // log 1e-3
inline constexpr double kMaxLogStd = 0.0;                 // log 1

/// Per-mode mixture parameters for one condition.
struct MixtureMode {
  double weight = 0.0;
  Point2 mean;
  Point2 std;
};

/// Mixture density network: 4 ReLU hidden layers feeding, per mode, a weight
/// logit, a 2D mean and a 2D log-std clamped to [kMinLogStd, kMaxLogStd].
class MdnModel {
 public:
  MdnModel() = default;
  MdnModel(std::size_t d_in, std::size_t modes, std::size_t width, std::uint64_t seed, std::size_t hidden_layers = 4);

  std::size_t d_in() const { return sizes_.front(); }
  std::size_t modes() const { return modes_; }
  std::span<const std::size_t> layer_sizes() const { return sizes_; }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::uint64_t step_count() const { return steps_; }
  void set_step_count(std::uint64_t s) { steps_ = s; }

  /// Mixture for `batch` conditions stored row-major (batch x d_in).
  /// Every row is computed with the same arithmetic as a batch of one, so
  /// results do not depend on how queries are grouped.
  void mixture(std::span<const double> cond, std::size_t batch, std::vector<MixtureMode>& out) const;
  std::vector<MixtureMode> mixture(std::span<const double> cond) const;

  /// Mean negative log-likelihood over a batch; when `grad` is non-empty it
  /// receives d(loss)/d(params).
  double nll(std::span<const double> cond, std::span<const double> target, std::size_t batch,
             std::span<double> grad = {}) const;

  nlohmann::json to_json() const;
  static MdnModel from_json(const nlohmann::json& j);

 private:
  std::size_t out_dim() const { return modes_ * 5; }
  void forward(std::span<const double> cond, std::size_t batch, std::vector<std::vector<double>>& acts) const;

  std::vector<std::size_t> sizes_;
  std::size_t modes_ = 0;
  std::vector<std::size_t> offsets_;  // weight block start per layer; biases follow
  std::vector<double> params_;
  std::uint64_t steps_ = 0;
};

/// Fixed set of (condition, target) rows.
struct MdnData {
  std::size_t d_in = 0;
  std::vector<double> cond;    // n x d_in
  std::vector<double> target;  // n x 2

  std::size_t size() const { return d_in ? cond.size() / d_in : 0; }
  void add(std::span<const double> c, const Point2& t);
};

/// Fills `batch` rows of conditions and targets.
using BatchSampler = std::function<void(Rng& rng, std::size_t batch, double* cond, double* target)>;

struct TrainOptions {
  std::size_t steps = 20000;
  std::size_t batch = 50;
  double lr = 1e-3;
  double lr_decay = 0.8;
  double min_lr = 1e-5;
  int patience = 6;
  std::size_t eval_every = 500;
  double clip_norm = 200.0;
  std::uint64_t seed = 0;
};

struct TrainRecord {
  std::size_t step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  double best_val = kInfinity;
  std::size_t best_step = 0;
  double final_val = kInfinity;
};

/// Adam with global-norm clipping; validation NLL every eval_every steps drives
/// the plateau decay and the best-parameter checkpoint, which is restored at
/// the end. With an empty validation set the last parameters are kept.
TrainLog mdn_train(MdnModel& model, const BatchSampler& sampler, const MdnData& validation, const TrainOptions& opts);
TrainLog mdn_train(MdnModel& model, const MdnData& train, const MdnData& validation, const TrainOptions& opts);

/// Picks a mode by its weight and returns that mode's mean.
Point2 mdn_sample(const std::vector<MixtureMode>& mixture, Rng& rng);
Point2 mdn_sample(const MdnModel& model, std::span<const double> cond, Rng& rng);

}  // namespace sgt::approx
