// Command-line driver: simulate load sweeps, analyze stability, run inverse
// design, and export printable geometry.
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sims/analysis.hpp"
#include "sims/assembly.hpp"
#include "sims/design_opt.hpp"
#include "sims/errors.hpp"
#include "sims/geometry.hpp"
#include "sims/io.hpp"
#include "sims/material.hpp"
#include "sims/solver.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sims;

struct CommonArgs {
  std::string config;
  std::string out = "out";
  int threads = 1;
  unsigned seed = 0;
};

void add_common(CLI::App *cmd, CommonArgs &args) {
  cmd->add_option("--config", args.config, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "Output directory (created if missing)");
  cmd->add_option("--threads", args.threads, "Worker threads for assembly")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", args.seed,
                  "Recorded in the manifest; all computations are deterministic");
}

SweepOptions sweep_options(const RunConfig &cfg) {
  SweepOptions s;
  s.d_max = cfg.sweep.d_max;
  s.landings = cfg.sample_grid();
  s.initial_frac = cfg.sweep.initial_step_fraction;
  s.min_frac = cfg.sweep.min_step_fraction;
  s.max_frac = cfg.sweep.max_step_fraction;
  s.growth = cfg.sweep.growth;
  s.fast_iterations = cfg.sweep.fast_iterations;
  s.adaptive = cfg.sweep.adaptive;
  s.newton = cfg.solver.newton;
  return s;
}

json stability_json(const EnergyCurve &curve) {
  json out;
  const CurveExtrema ex = find_stable_states(curve);
  json minima = json::array();
  for (const auto &m : ex.minima)
    minima.push_back({{"displacement_cm", m.d}, {"energy_J", m.value}});
  json maxima = json::array();
  for (const auto &m : ex.maxima)
    maxima.push_back({{"displacement_cm", m.d}, {"energy_J", m.value}});
  out["stable_states"] = minima;
  out["energy_peaks"] = maxima;
  out["degenerate"] = ex.degenerate;
  if (ex.minima.size() > 1) {
    const BarrierSet b = energy_barriers(ex);
    out["barriers_J"] = b.barrier;
    out["release_J"] = b.release;
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct ModelBundle {
  PatchSet ps;
  DofMap dm;
  std::unique_ptr<FemModel> model;
};

ModelBundle build_model(const RunConfig &cfg, int threads) {
  ModelBundle b;
  b.ps = assemble_structure(cfg.design, cfg.solver.resolution, cfg.solver.degree);
  if (!cfg.solver.rigid_patches)
    b.ps = without_rigidity(b.ps);
  b.dm = build_dof_map(b.ps);
  b.model = std::make_unique<FemModel>(b.ps, b.dm,
                                       lame_parameters(cfg.design.E, cfg.nu));
  b.model->set_threads(threads);
  return b;
}

int run_simulate(const CommonArgs &args) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = load_config(args.config);
  if (!(cfg.sweep.d_max > 0.0))
    throw ConfigError("config: sweep.d_max is required for simulate");
  fs::create_directories(args.out);

  ModelBundle b = build_model(cfg, args.threads);
  const SweepResult sweep = load_sweep(*b.model, sweep_options(cfg));

  const fs::path curve_path = fs::path(args.out) / "curve.csv";
  write_curve_csv(curve_path, sweep.curve);

  json metrics = stability_json(sweep.curve);
  metrics["dofs"] = b.model->n_dofs();
  metrics["patches"] = b.ps.num_patches();
  metrics["newton_iterations"] = sweep.total_newton_iterations;
  metrics["rejected_increments"] = sweep.rejected_increments;
  metrics["final_energy_J"] = sweep.curve.energy[sweep.curve.d.size() - 1];

  const fs::path manifest_path = fs::path(args.out) / "manifest.json";
  write_json(manifest_path,
             make_manifest("simulate", cfg, {curve_path.string()}, metrics,
                           args.threads, args.seed, seconds_since(t0)));
  std::printf("simulate: %d samples, %zu stable state(s), outputs in %s\n",
              static_cast<int>(sweep.curve.d.size()),
              metrics["stable_states"].size(), args.out.c_str());
  return 0;
}

int run_analyze(const CommonArgs &args, const std::string &curve_file) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = load_config(args.config);
  fs::create_directories(args.out);

  EnergyCurve curve;
  json metrics;
  std::vector<std::string> outputs;
  if (!curve_file.empty()) {
    curve = read_curve_csv(curve_file);
  } else {
    if (!(cfg.sweep.d_max > 0.0))
      throw ConfigError("config: sweep.d_max is required for analyze");
    ModelBundle b = build_model(cfg, args.threads);
    const SweepResult sweep = load_sweep(*b.model, sweep_options(cfg));
    curve = sweep.curve;
    const fs::path curve_path = fs::path(args.out) / "curve.csv";
    write_curve_csv(curve_path, curve);
    outputs.push_back(curve_path.string());

    const CollapseReport collapse = collapse_order(b.ps, b.dm, sweep.states);
    json rows = json::array();
    for (std::size_t k = 0; k < collapse.order.size(); ++k)
      rows.push_back({{"row", collapse.order[k]},
                      {"displacement_cm", collapse.d_collapse[k]}});
    metrics["collapse_sequence"] = rows;
    metrics["collapse_degenerate"] = collapse.degenerate;
    metrics["dofs"] = b.model->n_dofs();
  }

  metrics.update(stability_json(curve));
  const Eigen::VectorXd absorbed = absorbed_energy(curve.d, curve.force);
  metrics["absorbed_energy_J"] = absorbed[absorbed.size() - 1];
  metrics["peak_force_N"] = curve.force.maxCoeff();

  const fs::path report_path = fs::path(args.out) / "analysis.json";
  outputs.push_back(report_path.string());
  json report = metrics;
  write_json(report_path, report);

  const fs::path manifest_path = fs::path(args.out) / "manifest.json";
  write_json(manifest_path, make_manifest("analyze", cfg, outputs, metrics,
                                          args.threads, args.seed, seconds_since(t0)));
  std::printf("analyze: %zu stable state(s), report in %s\n",
              metrics["stable_states"].size(), report_path.c_str());
  return 0;
}

json design_json(const DesignParams &d) {
  json out;
  out["mode"] = d.mode == DesignParams::Mode::Identical ? "identical" : "per_row";
  out["rows"] = d.n_rows;
  out["L"] = d.L;
  out["t"] = d.t;
  out["h1"] = d.h1;
  out["h2"] = d.h2;
  out["h3"] = d.h3;
  out["t_beam"] = d.t_beam;
  out["E"] = d.E;
  out["optimize_E"] = d.optimize_E;
  return out;
}

int run_optimize(const CommonArgs &args) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = load_config(args.config);
  if (cfg.target.kind == TargetConfig::Kind::None)
    throw ConfigError("config: optimize needs a target section");
  if (!(cfg.sweep.d_max > 0.0))
    throw ConfigError("config: sweep.d_max is required for optimize");
  fs::create_directories(args.out);

  OptimizeOptions opt;
  opt.max_iterations = cfg.optimizer.max_iterations;
  opt.loss_tol = cfg.optimizer.loss_tol;
  opt.grad_tol = cfg.optimizer.grad_tol;
  opt.step_fraction = cfg.optimizer.step_fraction;
  opt.max_halvings = cfg.optimizer.max_halvings;
  opt.resolution = cfg.solver.resolution;
  opt.degree = cfg.solver.degree;
  opt.threads = args.threads;
  opt.nu = cfg.nu;
  opt.sweep = sweep_options(cfg);

  DesignTarget target;
  if (cfg.target.kind == TargetConfig::Kind::Curve)
    target = cfg.target.curve;
  else
    target = cfg.target.extrema;

  const DesignBounds bounds = cfg.resolve_bounds();
  std::vector<OptimizeResult> per_E;
  OptimizeResult result;
  if (cfg.catalog.empty())
    result = optimize_design(cfg.design, bounds, target, opt);
  else
    result = optimize_with_catalog(cfg.design, bounds, target, cfg.catalog, opt, &per_E);

  const fs::path design_path = fs::path(args.out) / "design.json";
  write_json(design_path, design_json(result.design));
  const fs::path trace_path = fs::path(args.out) / "trace.csv";
  write_trace_csv(trace_path, result.trace, result.design.param_names());
  const fs::path curve_path = fs::path(args.out) / "curve.csv";
  write_curve_csv(curve_path, result.curve);

  json metrics;
  metrics["loss"] = result.loss;
  metrics["iterations"] = result.iterations;
  metrics["converged"] = result.converged;
  metrics["stop_reason"] = result.stop_reason;
  metrics["E"] = result.design.E;
  if (!per_E.empty()) {
    json cat = json::array();
    for (const auto &r : per_E)
      cat.push_back({{"E", r.design.E},
                     {"loss", r.loss},
                     {"iterations", r.iterations},
                     {"converged", r.converged},
                     {"design", design_json(r.design)}});
    metrics["catalog"] = cat;
  }
  metrics.update(stability_json(result.curve));

  const fs::path manifest_path = fs::path(args.out) / "manifest.json";
  write_json(manifest_path,
             make_manifest("optimize", cfg,
                           {design_path.string(), trace_path.string(),
                            curve_path.string()},
                           metrics, args.threads, args.seed, seconds_since(t0)));
  std::printf("optimize: loss %.6g after %d iteration(s), %s\n", result.loss,
              result.iterations, result.stop_reason.c_str());
  if (!result.converged)
    throw OptimizationError("optimizer stopped without reaching the loss tolerance: " +
                            result.stop_reason);
  return 0;
}

int run_export_stl(const CommonArgs &args) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = load_config(args.config);
  fs::create_directories(args.out);

  const PatchSet ps =
      assemble_structure(cfg.design, cfg.solver.resolution, cfg.solver.degree);
  const fs::path stl_path = fs::path(args.out) / "model.stl";
  export_stl(ps, stl_path, cfg.stl.tessellation, cfg.stl.ascii);

  json metrics;
  metrics["patches"] = ps.num_patches();
  metrics["tessellation"] = cfg.stl.tessellation;
  metrics["format"] = cfg.stl.ascii ? "ascii" : "binary";

  const fs::path manifest_path = fs::path(args.out) / "manifest.json";
  write_json(manifest_path, make_manifest("export-stl", cfg, {stl_path.string()},
                                          metrics, args.threads, args.seed,
                                          seconds_since(t0)));
  std::printf("export-stl: wrote %s\n", stl_path.c_str());
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Differentiable design of stacked multistable structures"};
  app.require_subcommand(1);

  CommonArgs sim_args, ana_args, opt_args, stl_args;
  std::string curve_file;

  CLI::App *sim = app.add_subcommand(
      "simulate", "Quasi-static load sweep; writes the energy/force curve");
  add_common(sim, sim_args);

  CLI::App *ana = app.add_subcommand(
      "analyze", "Stability, barriers, collapse order and absorbed energy");
  add_common(ana, ana_args);
  ana->add_option("--curve", curve_file,
                  "Analyze an existing curve CSV instead of simulating")
      ->check(CLI::ExistingFile);

  CLI::App *opt = app.add_subcommand(
      "optimize", "Inverse design against a target energy curve or extrema");
  add_common(opt, opt_args);

  CLI::App *stl = app.add_subcommand("export-stl", "Extrude the design to an STL");
  add_common(stl, stl_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return run_simulate(sim_args);
    if (ana->parsed())
      return run_analyze(ana_args, curve_file);
    if (opt->parsed())
      return run_optimize(opt_args);
    if (stl->parsed())
      return run_export_stl(stl_args);
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const SolveError &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const OptimizationError &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
