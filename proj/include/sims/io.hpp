#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sims/design_opt.hpp"
#include "sims/geometry.hpp"
#include "sims/solver.hpp"

namespace sims {

struct SolverConfig {
  int resolution = 7;
  int degree = 3;
  bool rigid_patches = true;
  NewtonOptions newton;
};

struct SweepConfig {
  double d_max = 0.0;
  int samples = 41;
  double initial_step_fraction = 1.0 / 40;
  double min_step_fraction = 1.0 / 400;
  double max_step_fraction = 1.0 / 10;
  double growth = 1.5;
  int fast_iterations = 5;
  bool adaptive = true;
};

struct TargetConfig {
  enum class Kind { None, Curve, Extrema } kind = Kind::None;
  CurveTarget curve;
  ExtremaTarget extrema;
};

struct OptimizerConfig {
  int max_iterations = 300;
  double loss_tol = 0.01;
  double grad_tol = 1e-8;
  double step_fraction = 0.05;
  int max_halvings = 10;
  // Box bounds by parameter name; parameters absent from the map stay
  // frozen at their initial value.
  std::map<std::string, std::pair<double, double>> bounds;
};

struct ExportConfig {
  int tessellation = 16;
  bool ascii = false;
};

struct RunConfig {
  DesignParams design;
  double nu = 0.46;
  std::vector<double> catalog; // optional; empty = single E from design
  SolverConfig solver;
  SweepConfig sweep;
  TargetConfig target;
  OptimizerConfig optimizer;
  ExportConfig stl;

  DesignBounds resolve_bounds() const; // map -> packed vectors
  Eigen::VectorXd sample_grid() const; // uniform landing grid
};

// Parse and validate a configuration.  Unknown keys anywhere in the tree
// are rejected (typos must not silently change a run).  Relative file
// references resolve against the config file's directory.
RunConfig load_config(const std::filesystem::path &file);
RunConfig parse_config(const nlohmann::json &j,
                       const std::filesystem::path &base_dir = ".");

// The fully-resolved configuration (defaults materialized) as JSON.
nlohmann::json config_to_json(const RunConfig &cfg);

// ---------------------------------------------------------------------------
// Curve CSV: header `displacement_cm,strain_energy_J,reaction_force_N`,
// full-precision values that round-trip bit-exactly.
void write_curve_csv(const std::filesystem::path &file, const EnergyCurve &curve);
EnergyCurve read_curve_csv(const std::filesystem::path &file);

// Optimization trace CSV: iteration, loss, grad_norm, step, active_bounds,
// then one column per design parameter.
void write_trace_csv(const std::filesystem::path &file,
                     const std::vector<TraceRow> &trace,
                     const std::vector<std::string> &param_names);

// ---------------------------------------------------------------------------
// STL export: the 2D geometry extruded by 1 cm.  Vertices are welded across
// patch boundaries so the mesh is watertight; triangles wind outward.
void export_stl(const PatchSet &ps, const std::filesystem::path &file,
                int tessellation = 16, bool ascii = false);

// ---------------------------------------------------------------------------
// Machine-readable run manifest.
nlohmann::json make_manifest(const std::string &command, const RunConfig &cfg,
                             const std::vector<std::string> &outputs,
                             const nlohmann::json &metrics, int threads,
                             unsigned seed, double runtime_seconds);
void write_json(const std::filesystem::path &file, const nlohmann::json &j);

} // namespace sims
