#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgt/baselines_rl.hpp"
#include "sgt/env2d.hpp"
#include "sgt/harness.hpp"
#include "sgt/il.hpp"
#include "sgt/inverse_model.hpp"
#include "sgt/stdp_rl.hpp"

namespace fs = std::filesystem;
using namespace sgt;

namespace {

struct Run {
  harness::RunConfig cfg;
  fs::path dir;
  std::string hash;
};

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::MissingArtifact, "missing artifact " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + p.string());
  return out;
}

nlohmann::json read_json(const fs::path& p) {
  auto in = open_in(p);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidInput, "bad JSON in " + p.string() + ": " + e.what());
  }
}

env::TransitionDataset load_transitions(const Run& r) {
  auto in = open_in(r.dir / "transitions.csv");
  return env::read_transitions_csv(in);
}

env::DemoSet load_demos(const Run& r, const std::string& split) {
  auto in = open_in(r.dir / ("demos_" + split + ".csv"));
  return env::read_demos_csv(in, r.cfg.demos.workspace);
}

il::BcConfig bc_config(const harness::RunConfig& c, il::Representation rep) {
  il::BcConfig bc;
  bc.representation = rep;
  bc.modes = c.il.modes;
  bc.horizon = c.demos.horizon;
  bc.width = c.il.width;
  bc.train.steps = c.il.steps;
  bc.train.batch = c.il.batch;
  bc.train.lr = c.il.lr;
  bc.train.eval_every = c.il.eval_every;
  bc.stop_on_collision = c.il.stop_on_collision;
  bc.seed = c.il.seed;
  return bc;
}

std::vector<il::Representation> representations(const harness::RunConfig& c) {
  std::vector<il::Representation> out;
  for (const auto& name : c.il.representations) out.push_back(il::parse_representation(name));
  return out;
}

void gen_data(const Run& r) {
  const auto ws = env::make_workspace(r.cfg.workspace);
  const auto data = env::sample_transitions(ws, r.cfg.data.n_transitions, r.cfg.data.seed);
  auto out = open_out(r.dir / "transitions.csv");
  env::write_transitions_csv(out, data);
  std::cout << "wrote " << data.size() << " transitions\n";
}

void gen_demos(const Run& r) {
  const auto& d = r.cfg.demos;
  const auto ws = env::make_workspace(d.workspace);
  const std::pair<const char*, std::size_t> splits[] = {{"train", d.n_train}, {"val", d.n_val}, {"test", d.n_test}};
  std::uint64_t stream = 0;
  for (const auto& [name, n] : splits) {
    const auto demos = env::generate_demos(ws, n, d.horizon, derive_seed(d.seed, ++stream));
    auto out = open_out(r.dir / ("demos_" + std::string(name) + ".csv"));
    env::write_demos_csv(out, demos);
    std::cout << "wrote " << demos.trajectories.size() << " " << name << " demos\n";
  }
}

void train_stdp(const Run& r) {
  const auto data = load_transitions(r);
  const auto t0 = std::chrono::steady_clock::now();
  const auto stack = rl::approx_stdp(data, r.cfg.stdp);
  rl::save_stack(stack, r.dir / "stdp");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "trained " << stack.max_depth() << " levels over " << stack.grid.size() << " midpoints in " << secs
            << " s\n";
}

void train_fittedq(const Run& r) {
  const auto data = load_transitions(r);
  const auto q = rl::fitted_q(data, r.cfg.fittedq);
  auto out = open_out(r.dir / "fittedq.json");
  out << q.to_json().dump() << '\n';
  std::cout << "trained fitted Q for " << r.cfg.fittedq.iterations << " iterations\n";
}

void train_fw(const Run& r) {
  const auto data = load_transitions(r);
  const auto res = rl::approx_fw(data, r.cfg.fw);
  {
    auto out = open_out(r.dir / "fw.json");
    out << res.model.knn.to_json().dump() << '\n';
  }
  auto out = open_out(r.dir / "fw_dispersion.csv");
  rl::write_dispersion_csv(out, res.probe_std);
  std::cout << "probe std " << res.probe_std.front() << " -> " << res.probe_std.back() << '\n';
}

void train_il(const Run& r) {
  const auto train = load_demos(r, "train");
  const auto val = load_demos(r, "val");
  for (auto rep : representations(r.cfg)) {
    const auto name = std::string(il::to_string(rep));
    const auto trained = il::train_bc(train, val, bc_config(r.cfg, rep));
    {
      auto out = open_out(r.dir / ("il_" + name + ".json"));
      out << trained.model.to_json().dump() << '\n';
    }
    auto log = open_out(r.dir / ("il_" + name + "_log.csv"));
    log << "step,train_loss,val_loss,lr\n";
    for (const auto& rec : trained.log.records)
      log << rec.step << ',' << rec.train_loss << ',' << rec.val_loss << ',' << rec.lr << '\n';
    std::cout << name << ": best validation NLL " << trained.log.best_val << " at step " << trained.log.best_step
              << '\n';
  }
}

void eval_rl(const Run& r) {
  const auto& methods = r.cfg.eval_rl.methods;
  auto uses = [&](const char* m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
  std::optional<rl::ApproxValueStack> stack;
  std::optional<rl::QModel> q;
  std::optional<approx::InverseModel> inverse;
  if (uses("sgt_im") || uses("sgt_q")) stack = rl::load_stack(r.dir / "stdp");
  if (uses("sgt_q") || uses("q")) q = rl::QModel::from_json(read_json(r.dir / "fittedq.json"));
  if (uses("sgt_im")) inverse = approx::inverse_fit(load_transitions(r));
  harness::RlModels models{stack ? &*stack : nullptr, inverse ? &*inverse : nullptr, q ? &*q : nullptr};
  const auto ws = env::make_workspace(r.cfg.workspace);
  const auto report = harness::eval_rl(ws, models, r.cfg.eval_rl, r.cfg.workers);
  auto out = open_out(r.dir / "rl_report.csv");
  harness::write_rl_report(out, report.rows, r.hash);
  harness::write_rl_report(std::cout, report.rows, r.hash);
}

void eval_il(const Run& r) {
  const auto test = load_demos(r, "test");
  const auto ws = env::make_workspace(r.cfg.demos.workspace);
  std::vector<harness::IlRow> rows;
  for (auto rep : representations(r.cfg)) {
    const auto name = std::string(il::to_string(rep));
    const auto model = approx::MdnModel::from_json(read_json(r.dir / ("il_" + name + ".json")));
    std::vector<il::PredictedTrajectory> trajs;
    rows.push_back(harness::eval_il(ws, {rep, &model}, test, bc_config(r.cfg, rep), derive_seed(r.cfg.il.seed, 11),
                                    &trajs));
    auto out = open_out(r.dir / ("il_predictions_" + name + ".csv"));
    il::write_predictions_csv(out, trajs);
  }
  auto out = open_out(r.dir / "il_report.csv");
  harness::write_il_report(out, rows, r.hash);
  harness::write_il_report(std::cout, rows, r.hash);
}

void export_heatmap(const Run& r) {
  const auto stack = rl::load_stack(r.dir / "stdp");
  const auto& h = r.cfg.heatmap;
  constexpr int kRes = 50;
  auto summary = open_out(r.dir / "reachable.csv");
  summary << "k,reachable_fraction\n";
  for (int k : h.levels) {
    if (k > stack.max_depth())
      throw Error(ErrorKind::ConfigError, "heatmap level " + std::to_string(k) + " exceeds trained depth");
    const auto values = harness::heatmap_values(stack, h.goal, k, kRes);
    const auto stem = r.dir / ("heatmap_k" + std::to_string(k));
    {
      auto out = open_out(stem.string() + ".csv");
      harness::write_heatmap_csv(out, values, kRes);
    }
    {
      auto out = open_out(stem.string() + ".pgm");
      harness::write_pgm(out, values, kRes);
    }
    const double frac = harness::reachable_fraction(values, 0.9 * stack.c_max);
    summary << k << ',' << frac << '\n';
    std::cout << "k=" << k << " reachable " << frac << '\n';
  }
}

int verify_graph(const Run& r) {
  const auto rep = harness::verify_graph_suite(r.cfg.verify_graph);
  const nlohmann::json j{{"graphs", rep.graphs},
                         {"max_diff_dijkstra", rep.max_diff_dijkstra},
                         {"max_diff_floyd", rep.max_diff_floyd},
                         {"monotone", rep.monotone},
                         {"diagonal_zero", rep.diagonal_zero},
                         {"reconstruction", rep.reconstruction},
                         {"seconds", rep.seconds},
                         {"passed", rep.passed()}};
  auto out = open_out(r.dir / "verify_graph.json");
  out << j.dump(2) << '\n';
  std::cout << j.dump() << '\n';
  return rep.passed() ? 0 : 1;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::MissingArtifact: return 2;
    case ErrorKind::ConfigError: return 3;
    default: return 1;
  }
}

void report_error(std::string_view kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sub-goal tree planning and imitation experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::string run_dir;
  app.add_option("-c,--config", config_path, "run configuration (JSON); defaults when omitted");
  app.add_option("-r,--run-dir", run_dir, "overrides the configured run directory");

  using Handler = int (*)(const Run&);
  const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
      {"gen-data", "sample the transition dataset", [](const Run& r) { return gen_data(r), 0; }},
      {"gen-demos", "generate expert demonstrations", [](const Run& r) { return gen_demos(r), 0; }},
      {"train-stdp", "fit the approximate value stack", [](const Run& r) { return train_stdp(r), 0; }},
      {"train-fittedq", "fit the goal-conditioned Q baseline", [](const Run& r) { return train_fittedq(r), 0; }},
      {"train-fw", "run approximate Floyd-Warshall", [](const Run& r) { return train_fw(r), 0; }},
      {"train-il", "train the imitation models", [](const Run& r) { return train_il(r), 0; }},
      {"eval-rl", "evaluate the planning controllers", [](const Run& r) { return eval_rl(r), 0; }},
      {"eval-il", "evaluate the imitation models", [](const Run& r) { return eval_il(r), 0; }},
      {"export-heatmap", "write value heatmaps", [](const Run& r) { return export_heatmap(r), 0; }},
      {"verify-graph", "check exact DP against APSP oracles", verify_graph},
  };
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Run r;
    r.cfg = config_path.empty() ? harness::parse_config(nlohmann::json::object()) : harness::load_config(config_path);
    if (!run_dir.empty()) r.cfg.run_dir = run_dir;
    r.dir = r.cfg.run_dir;
    r.hash = harness::config_hash(r.cfg);
    fs::create_directories(r.dir);
    {
      auto out = open_out(r.dir / "config.json");
      out << harness::config_to_json(r.cfg).dump(2) << '\n';
    }
    for (const auto& [name, help, fn] : commands)
      if (app.got_subcommand(name)) return fn(r);
  } catch (const Error& e) {
    report_error(to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    report_error("Internal", e.what());
    return 1;
  }
  return 1;
}
