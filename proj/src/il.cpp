#include "sgt/il.hpp"

#include <chrono>
#include <cstddef>
#include <ostream>

namespace sgt::il {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void check_demos(const env::DemoSet& demos) {
  if (demos.trajectories.empty()) throw Error(ErrorKind::EmptyData, "demo set is empty");
  if (!env::is_power_of_two(demos.horizon)) throw Error(ErrorKind::InvalidInput, "demo horizon must be a power of two");
  for (const auto& t : demos.trajectories)
    if (t.horizon() != demos.horizon) throw Error(ErrorKind::InvalidInput, "demo has the wrong number of states");
}

}  // namespace

std::string_view to_string(Representation r) {
  switch (r) {
    case Representation::Sequential: return "sequential";
    case Representation::Sgt: return "sgt";
    case Representation::Direct: return "direct";
  }
  return "?";
}

Representation parse_representation(std::string_view name) {
  if (name == "sequential") return Representation::Sequential;
  if (name == "sgt") return Representation::Sgt;
  if (name == "direct") return Representation::Direct;
  throw Error(ErrorKind::ConfigError, "unknown representation '" + std::string(name) + "'");
}

int BcConfig::depth() const {
  if (!env::is_power_of_two(horizon)) throw Error(ErrorKind::InvalidInput, "horizon must be a power of two");
  int k = 0;
  while ((1 << k) < horizon) ++k;
  return k;
}

std::size_t condition_dim(Representation r) { return r == Representation::Direct ? 5 : 4; }

std::pair<int, int> sample_sgt_indices(Rng& rng, int horizon) {
  const int a = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(horizon - 1)));
  const int max_half = (horizon - a) / 2;
  const int half = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_half)));
  return {a, a + 2 * half};
}

approx::BatchSampler make_sampler(Representation r, const env::DemoSet& demos) {
  check_demos(demos);
  const int T = demos.horizon;
  if (r == Representation::Sgt && T < 2) throw Error(ErrorKind::InvalidInput, "sub-goal training needs T >= 2");
  return [r, &demos, T](Rng& rng, std::size_t batch, double* cond, double* target) {
    const std::size_t d = condition_dim(r);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto& st = demos.trajectories[uniform_index(rng, demos.trajectories.size())].states;
      double* c = cond + b * d;
      Point2 y;
      switch (r) {
        case Representation::Sequential: {
          const auto t = uniform_index(rng, static_cast<std::size_t>(T));
          c[0] = st[t].x, c[1] = st[t].y, c[2] = st.back().x, c[3] = st.back().y;
          y = st[t + 1];
          break;
        }
        case Representation::Sgt: {
          const auto [a, bb] = sample_sgt_indices(rng, T);
          c[0] = st[static_cast<std::size_t>(a)].x, c[1] = st[static_cast<std::size_t>(a)].y;
          c[2] = st[static_cast<std::size_t>(bb)].x, c[3] = st[static_cast<std::size_t>(bb)].y;
          y = st[static_cast<std::size_t>((a + bb) / 2)];
          break;
        }
        case Representation::Direct: {
          const auto t = 1 + uniform_index(rng, static_cast<std::size_t>(T - 1));
          c[0] = st.front().x, c[1] = st.front().y, c[2] = st.back().x, c[3] = st.back().y;
          c[4] = static_cast<double>(t) / T;
          y = st[t];
          break;
        }
      }
      target[b * 2] = y.x;
      target[b * 2 + 1] = y.y;
    }
  };
}

approx::MdnData make_validation(Representation r, const env::DemoSet& demos, std::size_t per_demo,
                                std::uint64_t seed) {
  approx::MdnData data;
  data.d_in = condition_dim(r);
  const std::size_t n = demos.trajectories.size() * per_demo;
  if (n == 0) return data;
  data.cond.resize(n * data.d_in);
  data.target.resize(n * 2);
  Rng rng(seed);
  make_sampler(r, demos)(rng, n, data.cond.data(), data.target.data());
  return data;
}

TrainedBc train_bc(const env::DemoSet& train, const env::DemoSet& validation, const BcConfig& cfg) {
  check_demos(train);
  if (cfg.modes == 0) throw Error(ErrorKind::InvalidInput, "mixture needs at least one mode");
  if (train.horizon != cfg.horizon) throw Error(ErrorKind::InvalidInput, "demo horizon differs from the configured one");
  const auto r = cfg.representation;
  TrainedBc out{approx::MdnModel(condition_dim(r), cfg.modes, cfg.width, derive_seed(cfg.seed, 5)), {}};
  approx::MdnData val;
  if (!validation.trajectories.empty())
    val = make_validation(r, validation, cfg.val_samples_per_demo, derive_seed(cfg.seed, 6));
  auto opts = cfg.train;
  opts.seed = derive_seed(cfg.seed, 7);
  out.log = approx::mdn_train(out.model, make_sampler(r, train), val, opts);
  return out;
}

TrainedBc train_sequential(const env::DemoSet& train, const env::DemoSet& validation, BcConfig cfg) {
  cfg.representation = Representation::Sequential;
  return train_bc(train, validation, cfg);
}

TrainedBc train_sgt(const env::DemoSet& train, const env::DemoSet& validation, BcConfig cfg) {
  cfg.representation = Representation::Sgt;
  return train_bc(train, validation, cfg);
}

TrainedBc train_direct(const env::DemoSet& train, const env::DemoSet& validation, BcConfig cfg) {
  cfg.representation = Representation::Direct;
  return train_bc(train, validation, cfg);
}

PredictedTrajectory predict_sequential(const approx::MdnModel& model, const Point2& s, const Point2& g, int max_steps,
                                       std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  PredictedTrajectory out;
  out.states.push_back(s);
  Rng rng(seed);
  Point2 cur = s;
  std::vector<approx::MixtureMode> mix;
  while (out.calls < max_steps && distance(cur, g) > tolerance) {
    const double cond[4] = {cur.x, cur.y, g.x, g.y};
    model.mixture(cond, 1, mix);
    cur = approx::mdn_sample(mix, rng);
    out.states.push_back(cur);
    ++out.calls;
  }
  out.states.push_back(g);
  out.depth = out.calls;
  out.wall_s = seconds_since(t0);
  return out;
}

PredictedTrajectory predict_sgt_recursive(const approx::MdnModel& model, const Point2& s, const Point2& g, int depth,
                                          std::uint64_t seed) {
  const auto t0 = Clock::now();
  SubGoalTree<Point2> tree(depth, s, g);
  PredictedTrajectory out;
  std::vector<approx::MixtureMode> mix;
  const std::size_t span = tree.size() - 1;
  auto expand = [&](auto&& self, int level, std::size_t segment) -> void {
    if (level >= depth) return;
    const std::size_t width = span >> level;
    const std::size_t lo = segment * width;
    const std::size_t hi = lo + width;
    const Point2 a = tree.at(lo);
    const Point2 b = tree.at(hi);
    const double cond[4] = {a.x, a.y, b.x, b.y};
    model.mixture(cond, 1, mix);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(level), segment));
    tree.at((lo + hi) / 2) = approx::mdn_sample(mix, rng);
    ++out.calls;
    self(self, level + 1, 2 * segment);
    self(self, level + 1, 2 * segment + 1);
  };
  expand(expand, 0, 0);
  out.states.assign(tree.flattened().begin(), tree.flattened().end());
  out.depth = depth;
  out.wall_s = seconds_since(t0);
  return out;
}

PredictedTrajectory predict_sgt_parallel(const approx::MdnModel& model, const Point2& s, const Point2& g, int depth,
                                         std::uint64_t seed) {
  const auto t0 = Clock::now();
  SubGoalTree<Point2> tree(depth, s, g);
  PredictedTrajectory out;
  const std::size_t span = tree.size() - 1;
  std::vector<double> cond;
  std::vector<approx::MixtureMode> mix;
  for (int level = 0; level < depth; ++level) {
    const std::size_t count = std::size_t{1} << level;
    const std::size_t width = span >> level;
    cond.resize(count * 4);
    for (std::size_t j = 0; j < count; ++j) {
      const Point2 a = tree.at(j * width);
      const Point2 b = tree.at((j + 1) * width);
      cond[j * 4] = a.x, cond[j * 4 + 1] = a.y, cond[j * 4 + 2] = b.x, cond[j * 4 + 3] = b.y;
    }
    model.mixture(cond, count, mix);
    const std::size_t m = model.modes();
    for (std::size_t j = 0; j < count; ++j) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(level), j));
      const std::vector<approx::MixtureMode> node(mix.begin() + static_cast<std::ptrdiff_t>(j * m),
                                                  mix.begin() + static_cast<std::ptrdiff_t>((j + 1) * m));
      tree.at(j * width + width / 2) = approx::mdn_sample(node, rng);
    }
    out.calls += static_cast<int>(count);
  }
  out.states.assign(tree.flattened().begin(), tree.flattened().end());
  out.depth = depth;
  out.wall_s = seconds_since(t0);
  return out;
}

PredictedTrajectory predict_direct(const approx::MdnModel& model, const Point2& s, const Point2& g, int horizon,
                                   std::uint64_t seed) {
  const auto t0 = Clock::now();
  PredictedTrajectory out;
  const std::size_t n = horizon > 1 ? static_cast<std::size_t>(horizon - 1) : 0;
  out.states.push_back(s);
  if (n > 0) {
    std::vector<double> cond(n * 5);
    for (std::size_t i = 0; i < n; ++i) {
      double* c = &cond[i * 5];
      c[0] = s.x, c[1] = s.y, c[2] = g.x, c[3] = g.y, c[4] = static_cast<double>(i + 1) / horizon;
    }
    std::vector<approx::MixtureMode> mix;
    model.mixture(cond, n, mix);
    const std::size_t m = model.modes();
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(seed, i + 1));
      const std::vector<approx::MixtureMode> node(mix.begin() + static_cast<std::ptrdiff_t>(i * m),
                                                  mix.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
      out.states.push_back(approx::mdn_sample(node, rng));
    }
    out.depth = 1;
  }
  out.states.push_back(g);
  out.calls = static_cast<int>(n);
  out.wall_s = seconds_since(t0);
  return out;
}

PredictedTrajectory predict(Representation r, const approx::MdnModel& model, const Point2& s, const Point2& g,
                            const BcConfig& cfg, std::uint64_t seed) {
  switch (r) {
    case Representation::Sequential: return predict_sequential(model, s, g, cfg.horizon, seed, cfg.goal_tolerance);
    case Representation::Sgt: return predict_sgt_parallel(model, s, g, cfg.depth(), seed);
    case Representation::Direct: return predict_direct(model, s, g, cfg.horizon, seed);
  }
  throw Error(ErrorKind::InvalidInput, "unknown representation");
}

void assemble_and_score(const env::Workspace& ws, PredictedTrajectory& traj, bool stop_on_collision) {
  auto& st = traj.states;
  if (st.size() < 2) throw Error(ErrorKind::InvalidInput, "a trajectory needs at least two states");
  if (stop_on_collision) {
    for (std::size_t i = 0; i + 1 < st.size(); ++i) {
      if (env::segment_blocked(ws, st[i], st[i + 1])) {
        const Point2 g = st.back();
        st.resize(i + 1);
        st.push_back(g);
        break;
      }
    }
  }
  traj.segment_collides.assign(st.size() - 1, false);
  double total = 0.0;
  double blocked = 0.0;
  traj.success = true;
  for (std::size_t i = 0; i + 1 < st.size(); ++i) {
    total += distance(st[i], st[i + 1]);
    const bool hit = env::segment_blocked(ws, st[i], st[i + 1]);
    traj.segment_collides[i] = hit;
    if (hit) {
      traj.success = false;
      blocked += env::blocked_length(ws, st[i], st[i + 1]);
    }
  }
  traj.severity = total > 0.0 ? std::min(1.0, blocked / total) : 0.0;
}

void write_predictions_csv(std::ostream& out, const std::vector<PredictedTrajectory>& trajs) {
  out << "traj_id,t,x,y,success,severity,calls,depth,wall_ms\n";
  out.precision(17);
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& tr = trajs[i];
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
      out << i << ',' << t << ',' << tr.states[t].x << ',' << tr.states[t].y << ',' << (tr.success ? 1 : 0) << ','
          << tr.severity << ',' << tr.calls << ',' << tr.depth << ',' << tr.wall_s * 1e3 << '\n';
    }
  }
}

}  // namespace sgt::il
