#include "sims/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "sims/errors.hpp"

namespace sims {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string &msg) { throw ConfigError("config: " + msg); }

void check_keys(const json &obj, const std::string &path,
                std::initializer_list<const char *> allowed) {
  if (!obj.is_object())
    bad(path + " must be an object");
  for (const auto &item : obj.items()) {
    bool ok = false;
    for (const char *k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      bad("unknown key '" + item.key() + "' in " + path);
  }
}

double get_num(const json &o, const std::string &path, const char *key, double dflt,
               bool required = false) {
  if (!o.contains(key)) {
    if (required)
      bad(path + "." + key + " is required");
    return dflt;
  }
  if (!o[key].is_number())
    bad(path + "." + key + " must be a number");
  return o[key].get<double>();
}

int get_int(const json &o, const std::string &path, const char *key, int dflt) {
  if (!o.contains(key))
    return dflt;
  if (!o[key].is_number_integer())
    bad(path + "." + key + " must be an integer");
  return o[key].get<int>();
}

bool get_bool(const json &o, const std::string &path, const char *key, bool dflt) {
  if (!o.contains(key))
    return dflt;
  if (!o[key].is_boolean())
    bad(path + "." + key + " must be a boolean");
  return o[key].get<bool>();
}

// Scalar (broadcast) or per-row array of length n.
std::vector<double> get_per_row(const json &o, const std::string &path, const char *key,
                                int n, bool broadcast_scalar) {
  if (!o.contains(key))
    bad(path + "." + key + " is required");
  const json &v = o[key];
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(broadcast_scalar ? n : 1, v.get<double>());
  } else if (v.is_array()) {
    for (const auto &e : v) {
      if (!e.is_number())
        bad(path + "." + key + " entries must be numbers");
      out.push_back(e.get<double>());
    }
    if (static_cast<int>(out.size()) != n)
      bad(path + "." + key + " must have one entry per row");
  } else {
    bad(path + "." + key + " must be a number or an array");
  }
  return out;
}

std::vector<double> get_array(const json &o, const std::string &path, const char *key) {
  if (!o.contains(key) || !o[key].is_array())
    bad(path + "." + key + " must be an array");
  std::vector<double> out;
  for (const auto &e : o[key]) {
    if (!e.is_number())
      bad(path + "." + key + " entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

DesignParams parse_design(const json &j) {
  check_keys(j, "design",
             {"mode", "rows", "L", "t", "h1", "h2", "h3", "t_beam", "E", "optimize_E"});
  DesignParams d;
  std::string mode = "identical";
  if (j.contains("mode")) {
    if (!j["mode"].is_string())
      bad("design.mode must be a string");
    mode = j["mode"].get<std::string>();
  }
  if (mode == "identical")
    d.mode = DesignParams::Mode::Identical;
  else if (mode == "per_row")
    d.mode = DesignParams::Mode::NonIdentical;
  else
    bad("design.mode must be 'identical' or 'per_row'");

  d.n_rows = get_int(j, "design", "rows", 1);
  if (d.n_rows < 1)
    bad("design.rows must be at least 1");
  d.L = get_num(j, "design", "L", 0.0, true);
  d.t = get_num(j, "design", "t", 0.0, true);
  const bool per_row = d.mode == DesignParams::Mode::NonIdentical;
  d.h1 = get_per_row(j, "design", "h1", per_row ? d.n_rows : 1, per_row);
  d.h2 = get_per_row(j, "design", "h2", per_row ? d.n_rows : 1, per_row);
  d.h3 = get_per_row(j, "design", "h3", per_row ? d.n_rows : 1, per_row);
  d.t_beam = get_per_row(j, "design", "t_beam", d.n_rows, true);
  d.E = get_num(j, "design", "E", 70.0);
  d.optimize_E = get_bool(j, "design", "optimize_E", false);
  d.validate();
  return d;
}

} // namespace

DesignBounds RunConfig::resolve_bounds() const {
  const Eigen::VectorXd theta = design.pack();
  const auto names = design.param_names();
  DesignBounds b;
  b.lower = theta;
  b.upper = theta;
  std::map<std::string, std::pair<double, double>> pending = optimizer.bounds;
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = pending.find(names[i]);
    if (it != pending.end()) {
      b.lower[i] = it->second.first;
      b.upper[i] = it->second.second;
      pending.erase(it);
    }
  }
  if (!pending.empty())
    throw ConfigError("config: optimizer.bounds names unknown parameter '" +
                      pending.begin()->first + "'");
  b.validate_against(design);
  return b;
}

Eigen::VectorXd RunConfig::sample_grid() const {
  if (!(sweep.d_max > 0.0))
    throw ConfigError("config: sweep.d_max must be positive");
  if (sweep.samples < 3)
    throw ConfigError("config: sweep.samples must be at least 3");
  Eigen::VectorXd g(sweep.samples);
  for (int i = 0; i < sweep.samples; ++i)
    g[i] = sweep.d_max * i / (sweep.samples - 1.0);
  return g;
}

RunConfig parse_config(const nlohmann::json &j, const std::filesystem::path &base_dir) {
  check_keys(j, "(root)",
             {"design", "material", "solver", "sweep", "target", "optimizer", "export"});
  if (!j.contains("design"))
    bad("design section is required");
  RunConfig cfg;
  cfg.design = parse_design(j["design"]);

  if (j.contains("material")) {
    const json &m = j["material"];
    check_keys(m, "material", {"nu", "catalog"});
    cfg.nu = get_num(m, "material", "nu", 0.46);
    if (!(cfg.nu >= 0.0 && cfg.nu < 0.5))
      bad("material.nu must be in [0, 0.5)");
    if (m.contains("catalog")) {
      cfg.catalog = get_array(m, "material", "catalog");
      for (double e : cfg.catalog)
        if (!(e > 0.0))
          bad("material.catalog entries must be positive");
    }
  }

  if (j.contains("solver")) {
    const json &s = j["solver"];
    check_keys(s, "solver",
               {"resolution", "degree", "rigid_patches", "linear", "newton"});
    cfg.solver.resolution = get_int(s, "solver", "resolution", 7);
    cfg.solver.degree = get_int(s, "solver", "degree", 3);
    if (cfg.solver.degree < 1)
      bad("solver.degree must be at least 1");
    if (cfg.solver.resolution < cfg.solver.degree + 1)
      bad("solver.resolution must be at least degree + 1");
    cfg.solver.rigid_patches = get_bool(s, "solver", "rigid_patches", true);
    if (s.contains("linear")) {
      const std::string l = s["linear"].is_string() ? s["linear"].get<std::string>() : "";
      if (l == "auto")
        cfg.solver.newton.linear = LinearSolverKind::Auto;
      else if (l == "direct")
        cfg.solver.newton.linear = LinearSolverKind::Direct;
      else if (l == "iterative")
        cfg.solver.newton.linear = LinearSolverKind::Iterative;
      else
        bad("solver.linear must be 'auto', 'direct' or 'iterative'");
    }
    if (s.contains("newton")) {
      const json &n = s["newton"];
      check_keys(n, "solver.newton",
                 {"max_iterations", "rel_tol", "abs_tol", "max_backtracks"});
      cfg.solver.newton.max_iterations = get_int(n, "solver.newton", "max_iterations", 50);
      cfg.solver.newton.rel_tol = get_num(n, "solver.newton", "rel_tol", 1e-8);
      cfg.solver.newton.abs_tol = get_num(n, "solver.newton", "abs_tol", 1e-10);
      cfg.solver.newton.max_backtracks = get_int(n, "solver.newton", "max_backtracks", 30);
    }
  }

  if (j.contains("sweep")) {
    const json &s = j["sweep"];
    check_keys(s, "sweep",
               {"d_max", "samples", "initial_step_fraction", "min_step_fraction",
                "max_step_fraction", "growth", "fast_iterations", "adaptive"});
    cfg.sweep.d_max = get_num(s, "sweep", "d_max", 0.0, true);
    cfg.sweep.samples = get_int(s, "sweep", "samples", 41);
    cfg.sweep.initial_step_fraction =
        get_num(s, "sweep", "initial_step_fraction", cfg.sweep.initial_step_fraction);
    cfg.sweep.min_step_fraction =
        get_num(s, "sweep", "min_step_fraction", cfg.sweep.min_step_fraction);
    cfg.sweep.max_step_fraction =
        get_num(s, "sweep", "max_step_fraction", cfg.sweep.max_step_fraction);
    cfg.sweep.growth = get_num(s, "sweep", "growth", 1.5);
    cfg.sweep.fast_iterations = get_int(s, "sweep", "fast_iterations", 5);
    cfg.sweep.adaptive = get_bool(s, "sweep", "adaptive", true);
  }

  if (j.contains("target")) {
    const json &t = j["target"];
    check_keys(t, "target",
               {"kind", "d", "energy", "curve_file", "minima", "barriers",
                "location_scale", "barrier_scale"});
    if (!t.contains("kind") || !t["kind"].is_string())
      bad("target.kind must be 'curve' or 'extrema'");
    const std::string kind = t["kind"].get<std::string>();
    if (kind == "curve") {
      cfg.target.kind = TargetConfig::Kind::Curve;
      const bool inline_data = t.contains("d") || t.contains("energy");
      const bool file_data = t.contains("curve_file");
      if (inline_data == file_data)
        bad("target: provide either curve_file or inline d/energy arrays");
      if (file_data) {
        if (!t["curve_file"].is_string())
          bad("target.curve_file must be a string");
        const std::filesystem::path p = base_dir / t["curve_file"].get<std::string>();
        const EnergyCurve c = read_curve_csv(p);
        cfg.target.curve.d = c.d;
        cfg.target.curve.energy = c.energy;
      } else {
        const auto dv = get_array(t, "target", "d");
        const auto ev = get_array(t, "target", "energy");
        if (dv.size() != ev.size() || dv.size() < 3)
          bad("target: d and energy must have equal length >= 3");
        cfg.target.curve.d = Eigen::Map<const Eigen::VectorXd>(dv.data(), dv.size());
        cfg.target.curve.energy = Eigen::Map<const Eigen::VectorXd>(ev.data(), ev.size());
      }
      for (int i = 1; i < cfg.target.curve.d.size(); ++i)
        if (!(cfg.target.curve.d[i] > cfg.target.curve.d[i - 1]))
          bad("target: curve displacements must strictly increase");
    } else if (kind == "extrema") {
      cfg.target.kind = TargetConfig::Kind::Extrema;
      cfg.target.extrema.minima_d = get_array(t, "target", "minima");
      cfg.target.extrema.barriers_J = get_array(t, "target", "barriers");
      if (cfg.target.extrema.minima_d.size() < 2)
        bad("target: extrema targets need at least two stable states");
      if (cfg.target.extrema.barriers_J.size() != cfg.target.extrema.minima_d.size() - 1)
        bad("target: need one barrier per consecutive stable-state pair");
      cfg.target.extrema.d_scale =
          get_num(t, "target", "location_scale", cfg.target.extrema.d_scale);
      cfg.target.extrema.b_scale =
          get_num(t, "target", "barrier_scale", cfg.target.extrema.b_scale);
    } else {
      bad("target.kind must be 'curve' or 'extrema'");
    }
  }

  if (j.contains("optimizer")) {
    const json &o = j["optimizer"];
    check_keys(o, "optimizer",
               {"max_iterations", "loss_tol", "grad_tol", "step_fraction",
                "max_halvings", "bounds"});
    cfg.optimizer.max_iterations = get_int(o, "optimizer", "max_iterations", 300);
    cfg.optimizer.loss_tol = get_num(o, "optimizer", "loss_tol", 0.01);
    cfg.optimizer.grad_tol = get_num(o, "optimizer", "grad_tol", 1e-8);
    cfg.optimizer.step_fraction = get_num(o, "optimizer", "step_fraction", 0.05);
    cfg.optimizer.max_halvings = get_int(o, "optimizer", "max_halvings", 10);
    if (o.contains("bounds")) {
      if (!o["bounds"].is_object())
        bad("optimizer.bounds must map parameter names to [lower, upper]");
      for (const auto &item : o["bounds"].items()) {
        const json &pair = item.value();
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
            !pair[1].is_number())
          bad("optimizer.bounds." + item.key() + " must be [lower, upper]");
        cfg.optimizer.bounds[item.key()] = {pair[0].get<double>(), pair[1].get<double>()};
      }
    }
  }

  if (j.contains("export")) {
    const json &e = j["export"];
    check_keys(e, "export", {"tessellation", "ascii"});
    cfg.stl.tessellation = get_int(e, "export", "tessellation", 16);
    if (cfg.stl.tessellation < 1)
      bad("export.tessellation must be positive");
    cfg.stl.ascii = get_bool(e, "export", "ascii", false);
  }

  return cfg;
}

RunConfig load_config(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in)
    throw ConfigError("config: cannot open " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error &e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return parse_config(j, file.has_parent_path() ? file.parent_path() : ".");
}

nlohmann::json config_to_json(const RunConfig &cfg) {
  json j;
  json d;
  d["mode"] = cfg.design.mode == DesignParams::Mode::Identical ? "identical" : "per_row";
  d["rows"] = cfg.design.n_rows;
  d["L"] = cfg.design.L;
  d["t"] = cfg.design.t;
  d["h1"] = cfg.design.h1;
  d["h2"] = cfg.design.h2;
  d["h3"] = cfg.design.h3;
  d["t_beam"] = cfg.design.t_beam;
  d["E"] = cfg.design.E;
  d["optimize_E"] = cfg.design.optimize_E;
  j["design"] = d;

  j["material"]["nu"] = cfg.nu;
  if (!cfg.catalog.empty())
    j["material"]["catalog"] = cfg.catalog;

  json s;
  s["resolution"] = cfg.solver.resolution;
  s["degree"] = cfg.solver.degree;
  s["rigid_patches"] = cfg.solver.rigid_patches;
  s["linear"] = cfg.solver.newton.linear == LinearSolverKind::Auto ? "auto"
                : cfg.solver.newton.linear == LinearSolverKind::Direct ? "direct"
                                                                       : "iterative";
  s["newton"]["max_iterations"] = cfg.solver.newton.max_iterations;
  s["newton"]["rel_tol"] = cfg.solver.newton.rel_tol;
  s["newton"]["abs_tol"] = cfg.solver.newton.abs_tol;
  s["newton"]["max_backtracks"] = cfg.solver.newton.max_backtracks;
  j["solver"] = s;

  json w;
  w["d_max"] = cfg.sweep.d_max;
  w["samples"] = cfg.sweep.samples;
  w["initial_step_fraction"] = cfg.sweep.initial_step_fraction;
  w["min_step_fraction"] = cfg.sweep.min_step_fraction;
  w["max_step_fraction"] = cfg.sweep.max_step_fraction;
  w["growth"] = cfg.sweep.growth;
  w["fast_iterations"] = cfg.sweep.fast_iterations;
  w["adaptive"] = cfg.sweep.adaptive;
  j["sweep"] = w;

  if (cfg.target.kind == TargetConfig::Kind::Curve) {
    j["target"]["kind"] = "curve";
    j["target"]["d"] = std::vector<double>(cfg.target.curve.d.data(),
                                           cfg.target.curve.d.data() +
                                               cfg.target.curve.d.size());
    j["target"]["energy"] = std::vector<double>(cfg.target.curve.energy.data(),
                                                cfg.target.curve.energy.data() +
                                                    cfg.target.curve.energy.size());
  } else if (cfg.target.kind == TargetConfig::Kind::Extrema) {
    j["target"]["kind"] = "extrema";
    j["target"]["minima"] = cfg.target.extrema.minima_d;
    j["target"]["barriers"] = cfg.target.extrema.barriers_J;
    j["target"]["location_scale"] = cfg.target.extrema.d_scale;
    j["target"]["barrier_scale"] = cfg.target.extrema.b_scale;
  }

  json o;
  o["max_iterations"] = cfg.optimizer.max_iterations;
  o["loss_tol"] = cfg.optimizer.loss_tol;
  o["grad_tol"] = cfg.optimizer.grad_tol;
  o["step_fraction"] = cfg.optimizer.step_fraction;
  o["max_halvings"] = cfg.optimizer.max_halvings;
  for (const auto &[name, lim] : cfg.optimizer.bounds)
    o["bounds"][name] = {lim.first, lim.second};
  j["optimizer"] = o;

  j["export"]["tessellation"] = cfg.stl.tessellation;
  j["export"]["ascii"] = cfg.stl.ascii;
  return j;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fmt_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

void write_curve_csv(const std::filesystem::path &file, const EnergyCurve &curve) {
  std::ofstream out(file);
  if (!out)
    throw ConfigError("cannot write " + file.string());
  out << "displacement_cm,strain_energy_J,reaction_force_N\n";
  for (Eigen::Index i = 0; i < curve.d.size(); ++i)
    out << fmt_full(curve.d[i]) << ',' << fmt_full(curve.energy[i]) << ','
        << fmt_full(curve.force[i]) << '\n';
  if (!out)
    throw ConfigError("failed while writing " + file.string());
}

EnergyCurve read_curve_csv(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in)
    throw ConfigError("cannot open curve file " + file.string());
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("curve file is empty: " + file.string());
  if (line.size() && line.back() == '\r')
    line.pop_back();
  const bool with_force = line == "displacement_cm,strain_energy_J,reaction_force_N";
  if (!with_force && line != "displacement_cm,strain_energy_J")
    throw ConfigError("curve file has an unexpected header: " + file.string());

  std::vector<double> d, se, f;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.size() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ','))
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size())
          throw std::invalid_argument(cell);
      } catch (const std::exception &) {
        throw ConfigError("curve file " + file.string() + ": bad number at line " +
                          std::to_string(lineno));
      }
    if (row.size() != (with_force ? 3u : 2u))
      throw ConfigError("curve file " + file.string() + ": wrong column count at line " +
                        std::to_string(lineno));
    d.push_back(row[0]);
    se.push_back(row[1]);
    f.push_back(with_force ? row[2] : 0.0);
  }
  if (d.size() < 2)
    throw ConfigError("curve file " + file.string() + ": need at least two samples");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i]) || !std::isfinite(se[i]) || !std::isfinite(f[i]))
      throw ConfigError("curve file " + file.string() + ": non-finite value");
    if (i > 0 && !(d[i] > d[i - 1]))
      throw ConfigError("curve file " + file.string() +
                        ": displacement must strictly increase");
  }
  EnergyCurve c;
  c.d = Eigen::Map<const Eigen::VectorXd>(d.data(), d.size());
  c.energy = Eigen::Map<const Eigen::VectorXd>(se.data(), se.size());
  c.force = Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
  return c;
}

void write_trace_csv(const std::filesystem::path &file,
                     const std::vector<TraceRow> &trace,
                     const std::vector<std::string> &param_names) {
  std::ofstream out(file);
  if (!out)
    throw ConfigError("cannot write " + file.string());
  out << "iteration,loss,grad_norm,step,active_bounds";
  for (const auto &n : param_names)
    out << ',' << n;
  out << '\n';
  for (const auto &row : trace) {
    out << row.iteration << ',' << fmt_full(row.loss) << ',' << fmt_full(row.grad_norm)
        << ',' << fmt_full(row.step) << ',' << row.active_bounds;
    for (Eigen::Index i = 0; i < row.theta.size(); ++i)
      out << ',' << fmt_full(row.theta[i]);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// STL

namespace {

struct WeldMap {
  // Quantized-coordinate vertex welding so coincident patch-boundary points
  // become one vertex and the extruded solid closes up.
  std::unordered_map<std::uint64_t, int> lookup;
  std::vector<std::array<double, 2>> pts;

  int add(double x, double y) {
    const auto qx = static_cast<std::int64_t>(std::llround(x * 1e7));
    const auto qy = static_cast<std::int64_t>(std::llround(y * 1e7));
    const std::uint64_t key = (static_cast<std::uint64_t>(qx) << 32) ^
                              (static_cast<std::uint64_t>(qy) & 0xffffffffULL);
    auto it = lookup.find(key);
    if (it != lookup.end())
      return it->second;
    const int id = static_cast<int>(pts.size());
    lookup.emplace(key, id);
    pts.push_back({x, y});
    return id;
  }
};

struct Tri {
  std::array<float, 3> a, b, c;
};

std::array<float, 3> tri_normal(const Tri &t) {
  const float ux = t.b[0] - t.a[0], uy = t.b[1] - t.a[1], uz = t.b[2] - t.a[2];
  const float vx = t.c[0] - t.a[0], vy = t.c[1] - t.a[1], vz = t.c[2] - t.a[2];
  float nx = uy * vz - uz * vy, ny = uz * vx - ux * vz, nz = ux * vy - uy * vx;
  const float len = std::sqrt(nx * nx + ny * ny + nz * nz);
  if (len > 0) {
    nx /= len;
    ny /= len;
    nz /= len;
  }
  return {nx, ny, nz};
}

} // namespace

void export_stl(const PatchSet &ps, const std::filesystem::path &file,
                int tessellation, bool ascii) {
  const int m = tessellation;
  WeldMap weld;
  std::vector<std::array<int, 3>> front; // CCW in the xy plane

  const Eigen::VectorXd unit_w = Eigen::VectorXd::Ones(ps.res * ps.res);
  for (int p = 0; p < ps.num_patches(); ++p) {
    // Sample the patch on an (m+1)^2 parameter grid.
    std::vector<int> vid((m + 1) * (m + 1));
    for (int j = 0; j <= m; ++j)
      for (int i = 0; i <= m; ++i) {
        const double xi = static_cast<double>(i) / m;
        const double eta = static_cast<double>(j) / m;
        const NurbsEval2D ev = nurbs_basis_2d(ps.kv, ps.kv, unit_w, xi, eta);
        double x = 0, y = 0;
        for (int b = 0; b < ev.value.size(); ++b) {
          const int bi = ev.first_u + b % (ps.degree + 1);
          const int bj = ev.first_v + b / (ps.degree + 1);
          const int pt = ps.point_index(bi, bj);
          x += ev.value[b] * ps.patches[p].net(pt, 0);
          y += ev.value[b] * ps.patches[p].net(pt, 1);
        }
        vid[i + j * (m + 1)] = weld.add(x, y);
      }
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const int v00 = vid[i + j * (m + 1)], v10 = vid[i + 1 + j * (m + 1)];
        const int v01 = vid[i + (j + 1) * (m + 1)], v11 = vid[i + 1 + (j + 1) * (m + 1)];
        if (v00 != v10 && v10 != v11 && v00 != v11)
          front.push_back({v00, v10, v11});
        if (v00 != v11 && v11 != v01 && v00 != v01)
          front.push_back({v00, v11, v01});
      }
  }

  // Boundary edges (used exactly once, counting direction) become the side
  // walls of the extrusion.
  std::unordered_map<std::uint64_t, int> edge_use;
  auto ekey = [](int a, int b) {
    const int lo = std::min(a, b), hi = std::max(a, b);
    return (static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint64_t>(hi);
  };
  for (const auto &t : front)
    for (int e = 0; e < 3; ++e)
      edge_use[ekey(t[e], t[(e + 1) % 3])]++;

  const float z0 = 0.0f, z1 = 1.0f; // 1 cm extrusion
  auto at = [&](int v, float z) {
    return std::array<float, 3>{static_cast<float>(weld.pts[v][0]),
                                static_cast<float>(weld.pts[v][1]), z};
  };
  std::vector<Tri> tris;
  tris.reserve(front.size() * 2 + edge_use.size() * 2);
  for (const auto &t : front) {
    tris.push_back({at(t[0], z1), at(t[1], z1), at(t[2], z1)});   // top (+z)
    tris.push_back({at(t[0], z0), at(t[2], z0), at(t[1], z0)});   // bottom (-z)
  }
  for (const auto &t : front)
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      if (edge_use[ekey(a, b)] != 1)
        continue;
      // Directed edge a->b of a CCW face keeps the solid on its left, so
      // the outward wall normal is to the right of a->b.
      tris.push_back({at(a, z0), at(b, z0), at(b, z1)});
      tris.push_back({at(a, z0), at(b, z1), at(a, z1)});
    }

  if (ascii) {
    std::ofstream out(file);
    if (!out)
      throw ConfigError("cannot write " + file.string());
    out << "solid structure\n";
    char buf[256];
    for (const auto &t : tris) {
      const auto n = tri_normal(t);
      std::snprintf(buf, sizeof(buf),
                    "facet normal %g %g %g\n outer loop\n"
                    "  vertex %g %g %g\n  vertex %g %g %g\n  vertex %g %g %g\n"
                    " endloop\nendfacet\n",
                    n[0], n[1], n[2], t.a[0], t.a[1], t.a[2], t.b[0], t.b[1], t.b[2],
                    t.c[0], t.c[1], t.c[2]);
      out << buf;
    }
    out << "endsolid structure\n";
    return;
  }

  std::ofstream out(file, std::ios::binary);
  if (!out)
    throw ConfigError("cannot write " + file.string());
  char header[80] = {};
  std::snprintf(header, sizeof(header), "extruded multistable structure");
  out.write(header, 80);
  const std::uint32_t n = static_cast<std::uint32_t>(tris.size());
  out.write(reinterpret_cast<const char *>(&n), 4);
  for (const auto &t : tris) {
    const auto nrm = tri_normal(t);
    float rec[12] = {nrm[0], nrm[1], nrm[2], t.a[0], t.a[1], t.a[2],
                     t.b[0], t.b[1], t.b[2], t.c[0], t.c[1], t.c[2]};
    out.write(reinterpret_cast<const char *>(rec), sizeof(rec));
    const std::uint16_t attr = 0;
    out.write(reinterpret_cast<const char *>(&attr), 2);
  }
  if (!out)
    throw ConfigError("failed while writing " + file.string());
}

// ---------------------------------------------------------------------------
// Manifest

nlohmann::json make_manifest(const std::string &command, const RunConfig &cfg,
                             const std::vector<std::string> &outputs,
                             const nlohmann::json &metrics, int threads,
                             unsigned seed, double runtime_seconds) {
  json m;
  m["command"] = command;
  m["config"] = config_to_json(cfg);
  m["outputs"] = outputs;
  m["metrics"] = metrics;
  m["threads"] = threads;
  m["seed"] = seed;
  m["runtime_seconds"] = runtime_seconds;
  m["version"] = "0.1.0";
  return m;
}

void write_json(const std::filesystem::path &file, const nlohmann::json &j) {
  std::ofstream out(file);
  if (!out)
    throw ConfigError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

} // namespace sims
