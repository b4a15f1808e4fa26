#include "sgt/baselines_rl.hpp"

#include <cmath>
#include <ostream>

#include "sgt/stdp_rl.hpp"

namespace sgt::rl {

int argmin_action(const std::array<double, env::kNumActions>& q) {
  int best = 0;
  for (int u = 1; u < env::kNumActions; ++u)
    if (q[static_cast<std::size_t>(u)] < q[static_cast<std::size_t>(best)]) best = u;
  return best;
}

int q_greedy_action(const QModel& q, const Point2& s, const Point2& g) {
  std::array<double, env::kNumActions> v{};
  for (int u = 0; u < env::kNumActions; ++u) v[static_cast<std::size_t>(u)] = q.value(s, u, g);
  return argmin_action(v);
}

QModel QModel::from_json(const nlohmann::json& j) {
  try {
    return {approx::KnnModel::from_json(j.at("knn")), j.at("delta").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("bad Q snapshot: ") + e.what());
  }
}

double fitted_q_target(const QModel& q, const env::TransitionTuple& t, const Point2& g) {
  if (!(distance(t.s_next, g) > q.delta)) return t.c;
  double best = kInfinity;
  for (int u = 0; u < env::kNumActions; ++u) best = std::min(best, q.value(t.s_next, u, g));
  return t.c + best;
}

QModel fitted_q(const env::TransitionDataset& data, const FittedQConfig& cfg) {
  if (data.empty()) throw Error(ErrorKind::EmptyData, "transition dataset is empty");
  if (!(cfg.delta > 0.0)) throw Error(ErrorKind::InvalidInput, "goal threshold must be positive");
  std::vector<double> points;
  std::vector<double> targets;
  points.reserve(data.size() * 5);
  for (const auto& t : data) {
    const auto x = q_input(t.s, t.u, t.s_next);
    points.insert(points.end(), x.begin(), x.end());
    targets.push_back(t.c);
  }
  QModel q{approx::KnnModel::fit(std::move(points), 5, std::move(targets), 1, cfg.knn_k), cfg.delta};

  for (int k = 1; k <= cfg.iterations; ++k) {
    Rng rng(derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(k)));
    std::vector<std::size_t> tuple(cfg.n_goals);
    std::vector<Point2> goal(cfg.n_goals);
    for (std::size_t i = 0; i < cfg.n_goals; ++i) {
      tuple[i] = uniform_index(rng, data.size());
      goal[i] = data[uniform_index(rng, data.size())].s;
    }
    std::vector<double> next(cfg.n_goals);
    parallel_for(cfg.n_goals, [&](std::size_t i) { next[i] = fitted_q_target(q, data[tuple[i]], goal[i]); },
                 cfg.workers);
    std::vector<double> pts;
    pts.reserve(cfg.n_goals * 5);
    for (std::size_t i = 0; i < cfg.n_goals; ++i) {
      const auto& t = data[tuple[i]];
      const auto x = q_input(t.s, t.u, goal[i]);
      pts.insert(pts.end(), x.begin(), x.end());
    }
    q.knn = approx::KnnModel::fit(std::move(pts), 5, std::move(next), 1, cfg.knn_k);
  }
  return q;
}

double FwValueModel::value(const Point2& s, const Point2& g) const { return pair_value(knn, s, g); }

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size()));
}

FwResult approx_fw(const env::TransitionDataset& data, const FwConfig& cfg) {
  if (data.empty()) throw Error(ErrorKind::EmptyData, "transition dataset is empty");
  const std::size_t n_random = cfg.n_random ? cfg.n_random : data.size() / 5;
  const std::size_t n_self = cfg.n_self ? cfg.n_self : data.size() / 5;
  FwResult result{{fit_v0(data, cfg.c_max, n_random, n_self, cfg.seed, cfg.knn_k)}, {}};

  Rng probe_rng(derive_seed(cfg.seed, 3));
  std::vector<std::pair<Point2, Point2>> probe(cfg.n_probe);
  for (auto& [s, g] : probe) {
    s = data[uniform_index(probe_rng, data.size())].s;
    g = data[uniform_index(probe_rng, data.size())].s;
  }
  auto dispersion = [&] {
    std::vector<double> v(probe.size());
    for (std::size_t i = 0; i < probe.size(); ++i) v[i] = result.model.value(probe[i].first, probe[i].second);
    return population_std(v);
  };
  result.probe_std.push_back(dispersion());

  for (int k = 1; k <= cfg.iterations; ++k) {
    Rng rng(derive_seed(cfg.seed, 4, static_cast<std::uint64_t>(k)));
    struct Triple {
      Point2 s, m, g;
    };
    std::vector<Triple> triples(cfg.n_goal_pairs);
    for (auto& t : triples) {
      t.s = data[uniform_index(rng, data.size())].s;
      t.m = data[uniform_index(rng, data.size())].s;
      t.g = data[uniform_index(rng, data.size())].s;
    }
    std::vector<double> targets(triples.size());
    const FwValueModel& v = result.model;
    parallel_for(
        triples.size(),
        [&](std::size_t i) {
          const auto& t = triples[i];
          const double direct = v.value(t.s, t.g);
          const double target = std::min(direct, v.value(t.s, t.m) + v.value(t.m, t.g));
          if (!(target <= direct)) throw Error(ErrorKind::NumericalFailure, "relaxation target exceeds current value");
          targets[i] = target;
        },
        cfg.workers);
    std::vector<double> points;
    points.reserve((triples.size() + n_self) * 4);
    for (const auto& t : triples) points.insert(points.end(), {t.s.x, t.s.y, t.g.x, t.g.y});
    if (cfg.fit_self) {
      for (std::size_t i = 0; i < n_self; ++i) {
        const Point2 s = data[uniform_index(rng, data.size())].s;
        points.insert(points.end(), {s.x, s.y, s.x, s.y});
        targets.push_back(0.0);
      }
    }
    result.model.knn = approx::KnnModel::fit(std::move(points), 4, std::move(targets), 1, cfg.knn_k);
    result.probe_std.push_back(dispersion());
  }
  return result;
}

void write_dispersion_csv(std::ostream& out, const std::vector<double>& probe_std) {
  out << "iter,probe_std\n";
  out.precision(17);
  for (std::size_t i = 0; i < probe_std.size(); ++i) out << i << ',' << probe_std[i] << '\n';
}

}  // namespace sgt::rl
