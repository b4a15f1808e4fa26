#include "sgt/mdn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sgt::approx {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kInitLogStd = -2.0;

double clamp_log_std(double z) { return std::clamp(z, kMinLogStd, kMaxLogStd); }
bool log_std_active(double z) { return z > kMinLogStd && z < kMaxLogStd; }

}  // namespace

MdnModel::MdnModel(std::size_t d_in, std::size_t modes, std::size_t width, std::uint64_t seed,
                   std::size_t hidden_layers)
    : modes_(modes) {
  if (d_in == 0 || modes == 0 || width == 0) throw Error(ErrorKind::InvalidInput, "MDN sizes must be positive");
  sizes_.push_back(d_in);
  for (std::size_t i = 0; i < hidden_layers; ++i) sizes_.push_back(width);
  sizes_.push_back(out_dim());
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t fan_in = sizes_[l];
    const bool last = l + 2 == sizes_.size();
    const double scale = (last ? 1.0 : std::sqrt(6.0)) / std::sqrt(static_cast<double>(fan_in));
    double* w = params_.data() + offsets_[l];
    for (std::size_t i = 0; i < sizes_[l + 1] * fan_in; ++i) w[i] = (2.0 * uniform01(rng) - 1.0) * scale;
    if (!last) continue;
    // Log-std rows start well inside the clamp so their gradient is live.
    double* bias = w + sizes_[l + 1] * fan_in;
    for (std::size_t j = 0; j < modes_; ++j)
      for (std::size_t f = 3; f < 5; ++f) {
        for (std::size_t i = 0; i < fan_in; ++i) w[(j * 5 + f) * fan_in + i] *= 0.1;
        bias[j * 5 + f] = kInitLogStd;
      }
  }
}

void MdnModel::forward(std::span<const double> cond, std::size_t batch, std::vector<std::vector<double>>& acts) const {
  // Activations are stored feature-major (feature x batch) so the inner loop
  // runs over the batch; each element still sums its inputs in index order.
  const std::size_t layers = sizes_.size() - 1;
  acts.resize(layers + 1);
  acts[0].resize(sizes_[0] * batch);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < sizes_[0]; ++i) acts[0][i * batch + b] = cond[b * sizes_[0] + i];
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n_in = sizes_[l];
    const std::size_t n_out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* bias = w + n_out * n_in;
    const double* x = acts[l].data();
    auto& y = acts[l + 1];
    y.resize(n_out * batch);
    for (std::size_t o = 0; o < n_out; ++o) {
      double* yo = y.data() + o * batch;
      for (std::size_t b = 0; b < batch; ++b) yo[b] = bias[o];
      for (std::size_t i = 0; i < n_in; ++i) {
        const double wi = w[o * n_in + i];
        const double* xi = x + i * batch;
        for (std::size_t b = 0; b < batch; ++b) yo[b] += wi * xi[b];
      }
      if (l + 1 < layers)
        for (std::size_t b = 0; b < batch; ++b) yo[b] = std::max(yo[b], 0.0);
    }
  }
}

void MdnModel::mixture(std::span<const double> cond, std::size_t batch, std::vector<MixtureMode>& out) const {
  if (cond.size() != batch * d_in()) throw Error(ErrorKind::InvalidInput, "MDN condition size mismatch");
  std::vector<std::vector<double>> acts;
  forward(cond, batch, acts);
  const auto& z = acts.back();
  out.resize(batch * modes_);
  for (std::size_t b = 0; b < batch; ++b) {
    double top = -kInfinity;
    for (std::size_t j = 0; j < modes_; ++j) top = std::max(top, z[(j * 5) * batch + b]);
    double norm = 0.0;
    for (std::size_t j = 0; j < modes_; ++j) norm += std::exp(z[(j * 5) * batch + b] - top);
    for (std::size_t j = 0; j < modes_; ++j) {
      auto at = [&](std::size_t f) { return z[(j * 5 + f) * batch + b]; };
      MixtureMode& m = out[b * modes_ + j];
      m.weight = std::exp(at(0) - top) / norm;
      m.mean = {at(1), at(2)};
      m.std = {std::exp(clamp_log_std(at(3))), std::exp(clamp_log_std(at(4)))};
    }
  }
}

std::vector<MixtureMode> MdnModel::mixture(std::span<const double> cond) const {
  std::vector<MixtureMode> out;
  mixture(cond, 1, out);
  return out;
}

double MdnModel::nll(std::span<const double> cond, std::span<const double> target, std::size_t batch,
                     std::span<double> grad) const {
  if (batch == 0) throw Error(ErrorKind::EmptyData, "empty MDN batch");
  if (cond.size() != batch * d_in() || target.size() != batch * 2)
    throw Error(ErrorKind::InvalidInput, "MDN batch size mismatch");
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != params_.size()) throw Error(ErrorKind::InvalidInput, "gradient size mismatch");

  std::vector<std::vector<double>> acts;
  forward(cond, batch, acts);
  const auto& z = acts.back();
  const std::size_t m = modes_;
  std::vector<double> dz(want_grad ? z.size() : 0);
  std::vector<double> logit(m), logp(m), comp(m);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double total = 0.0;

  for (std::size_t b = 0; b < batch; ++b) {
    const double y0 = target[b * 2];
    const double y1 = target[b * 2 + 1];
    auto at = [&](std::size_t j, std::size_t f) { return z[(j * 5 + f) * batch + b]; };
    double top = -kInfinity;
    for (std::size_t j = 0; j < m; ++j) top = std::max(top, logit[j] = at(j, 0));
    double norm = 0.0;
    for (std::size_t j = 0; j < m; ++j) norm += std::exp(logit[j] - top);
    const double lse_logit = top + std::log(norm);

    double comp_top = -kInfinity;
    for (std::size_t j = 0; j < m; ++j) {
      const double l0 = clamp_log_std(at(j, 3));
      const double l1 = clamp_log_std(at(j, 4));
      const double u0 = (y0 - at(j, 1)) * std::exp(-l0);
      const double u1 = (y1 - at(j, 2)) * std::exp(-l1);
      logp[j] = -kLog2Pi - l0 - l1 - 0.5 * (u0 * u0 + u1 * u1);
      comp[j] = logit[j] - lse_logit + logp[j];
      comp_top = std::max(comp_top, comp[j]);
    }
    double comp_norm = 0.0;
    for (std::size_t j = 0; j < m; ++j) comp_norm += std::exp(comp[j] - comp_top);
    const double loss = -(comp_top + std::log(comp_norm));
    total += loss;
    if (!want_grad) continue;

    for (std::size_t j = 0; j < m; ++j) {
      const double resp = std::exp(comp[j] - comp_top) / comp_norm;
      const double prior = std::exp(logit[j] - lse_logit);
      auto d = [&](std::size_t f) -> double& { return dz[(j * 5 + f) * batch + b]; };
      d(0) = (prior - resp) * inv_batch;
      for (std::size_t a = 0; a < 2; ++a) {
        const double l = clamp_log_std(at(j, 3 + a));
        const double var_inv = std::exp(-2.0 * l);
        const double diff = (a == 0 ? y0 : y1) - at(j, 1 + a);
        d(1 + a) = -resp * diff * var_inv * inv_batch;
        const double dl = resp * (1.0 - diff * diff * var_inv);
        d(3 + a) = log_std_active(at(j, 3 + a)) ? dl * inv_batch : 0.0;
      }
    }
  }
  if (!std::isfinite(total)) throw Error(ErrorKind::NumericalFailure, "non-finite MDN loss");
  if (!want_grad) return total * inv_batch;

  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> delta = std::move(dz);
  for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
    const std::size_t n_in = sizes_[l];
    const std::size_t n_out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + n_out * n_in;
    const double* x = acts[l].data();
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* dout = delta.data() + o * batch;
      double sb = 0.0;
      for (std::size_t b = 0; b < batch; ++b) sb += dout[b];
      gb[o] += sb;
      for (std::size_t i = 0; i < n_in; ++i) {
        const double* xi = x + i * batch;
        double s = 0.0;
        for (std::size_t b = 0; b < batch; ++b) s += dout[b] * xi[b];
        gw[o * n_in + i] += s;
      }
    }
    if (l == 0) break;
    std::vector<double> prev(n_in * batch, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* dout = delta.data() + o * batch;
      for (std::size_t i = 0; i < n_in; ++i) {
        const double wi = w[o * n_in + i];
        double* pi = prev.data() + i * batch;
        for (std::size_t b = 0; b < batch; ++b) pi[b] += wi * dout[b];
      }
    }
    for (std::size_t k = 0; k < prev.size(); ++k)
      if (!(x[k] > 0.0)) prev[k] = 0.0;
    delta = std::move(prev);
  }
  return total * inv_batch;
}

nlohmann::json MdnModel::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const auto* w = params_.data() + offsets_[l];
    const std::size_t nw = sizes_[l + 1] * sizes_[l];
    layers.push_back({{"weights", std::vector<double>(w, w + nw)},
                      {"biases", std::vector<double>(w + nw, w + nw + sizes_[l + 1])}});
  }
  return {{"layer_sizes", sizes_}, {"modes", modes_}, {"layers", layers}, {"steps", steps_}};
}

MdnModel MdnModel::from_json(const nlohmann::json& j) {
  try {
    const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    const auto modes = j.at("modes").get<std::size_t>();
    if (sizes.size() < 2 || sizes.back() != modes * 5) throw Error(ErrorKind::InvalidInput, "bad MDN layer sizes");
    MdnModel m(sizes.front(), modes, sizes.size() > 2 ? sizes[1] : 1, 0, sizes.size() - 2);
    if (m.sizes_ != sizes) throw Error(ErrorKind::InvalidInput, "MDN hidden layers must share one width");
    const auto& layers = j.at("layers");
    if (layers.size() != sizes.size() - 1) throw Error(ErrorKind::InvalidInput, "MDN layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("biases").get<std::vector<double>>();
      if (w.size() != sizes[l + 1] * sizes[l] || b.size() != sizes[l + 1])
        throw Error(ErrorKind::InvalidInput, "MDN weight shape mismatch");
      std::copy(w.begin(), w.end(), m.params_.begin() + static_cast<std::ptrdiff_t>(m.offsets_[l]));
      std::copy(b.begin(), b.end(), m.params_.begin() + static_cast<std::ptrdiff_t>(m.offsets_[l] + w.size()));
    }
    m.steps_ = j.value("steps", std::uint64_t{0});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("bad MDN snapshot: ") + e.what());
  }
}

void MdnData::add(std::span<const double> c, const Point2& t) {
  if (c.size() != d_in) throw Error(ErrorKind::InvalidInput, "condition dimension mismatch");
  cond.insert(cond.end(), c.begin(), c.end());
  target.insert(target.end(), {t.x, t.y});
}

namespace {

double validation_loss(const MdnModel& model, const MdnData& val) {
  constexpr std::size_t kChunk = 256;
  const std::size_t n = val.size();
  double total = 0.0;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    total += model.nll(std::span(val.cond).subspan(start * val.d_in, len * val.d_in),
                       std::span(val.target).subspan(start * 2, len * 2), len) *
             static_cast<double>(len);
  }
  return total / static_cast<double>(n);
}

}  // namespace

TrainLog mdn_train(MdnModel& model, const BatchSampler& sampler, const MdnData& validation, const TrainOptions& opts) {
  if (opts.batch == 0) throw Error(ErrorKind::InvalidInput, "batch size must be positive");
  const std::size_t n = model.num_params();
  const std::size_t d = model.d_in();
  const bool has_val = validation.size() > 0;
  if (has_val && validation.d_in != d) throw Error(ErrorKind::InvalidInput, "validation dimension mismatch");

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m1(n, 0.0), m2(n, 0.0), grad(n);
  std::vector<double> cond(opts.batch * d), target(opts.batch * 2);
  Rng rng(opts.seed);
  TrainLog log;
  std::vector<double> best(model.params().begin(), model.params().end());
  double lr = opts.lr;
  int stale = 0;
  double recent = 0.0;
  std::size_t recent_n = 0;

  for (std::size_t step = 1; step <= opts.steps; ++step) {
    sampler(rng, opts.batch, cond.data(), target.data());
    const double loss = model.nll(cond, target, opts.batch, grad);
    recent += loss;
    ++recent_n;
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double gnorm = std::sqrt(sq);
    if (!std::isfinite(gnorm)) throw Error(ErrorKind::NumericalFailure, "non-finite MDN gradient");
    const double scale = gnorm > opts.clip_norm ? opts.clip_norm / gnorm : 1.0;

    const auto t = static_cast<double>(model.step_count() + 1);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    auto p = model.params();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad[i] * scale;
      m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
      m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
      p[i] -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
    }
    model.set_step_count(model.step_count() + 1);

    if (step % opts.eval_every == 0 || step == opts.steps) {
      TrainRecord rec{step, recent / static_cast<double>(recent_n), 0.0, lr};
      recent = 0.0;
      recent_n = 0;
      if (has_val) {
        rec.val_loss = validation_loss(model, validation);
        if (rec.val_loss < log.best_val) {
          log.best_val = rec.val_loss;
          log.best_step = step;
          best.assign(p.begin(), p.end());
          stale = 0;
        } else if (++stale >= opts.patience) {
          lr = std::max(lr * opts.lr_decay, opts.min_lr);
          stale = 0;
        }
      }
      log.records.push_back(rec);
    }
  }
  if (has_val && log.best_step > 0) {
    std::copy(best.begin(), best.end(), model.params().begin());
    log.final_val = validation_loss(model, validation);
  }
  return log;
}

TrainLog mdn_train(MdnModel& model, const MdnData& train, const MdnData& validation, const TrainOptions& opts) {
  const std::size_t n = train.size();
  if (n == 0) throw Error(ErrorKind::EmptyData, "no MDN training samples");
  if (train.d_in != model.d_in()) throw Error(ErrorKind::InvalidInput, "training dimension mismatch");
  const std::size_t d = train.d_in;
  BatchSampler sampler = [&](Rng& rng, std::size_t batch, double* cond, double* target) {
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t i = uniform_index(rng, n);
      std::copy_n(train.cond.data() + i * d, d, cond + b * d);
      std::copy_n(train.target.data() + i * 2, 2, target + b * 2);
    }
  };
  return mdn_train(model, sampler, validation, opts);
}

Point2 mdn_sample(const std::vector<MixtureMode>& mixture, Rng& rng) {
  if (mixture.empty()) throw Error(ErrorKind::InvalidInput, "empty mixture");
  if (mixture.size() == 1) return mixture.front().mean;
  const double u = uniform01(rng);
  double acc = 0.0;
  for (const auto& m : mixture) {
    acc += m.weight;
    if (u < acc) return m.mean;
  }
  // Rounding can leave acc a hair below 1; fall back to the last mode with weight.
  for (auto it = mixture.rbegin(); it != mixture.rend(); ++it)
    if (it->weight > 0.0) return it->mean;
  return mixture.back().mean;
}

Point2 mdn_sample(const MdnModel& model, std::span<const double> cond, Rng& rng) {
  return mdn_sample(model.mixture(cond), rng);
}

}  // namespace sgt::approx
