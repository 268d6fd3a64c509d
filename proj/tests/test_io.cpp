// Configuration parsing, CSV/STL serialization, and manifest output.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sims/errors.hpp"
#include "sims/geometry.hpp"
#include "sims/io.hpp"

using namespace sims;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Smallest config that parses: one row of cell geometry.
json minimal_config() {
  return json{{"design",
               {{"rows", 1},
                {"L", 11.34},
                {"t", 1.24},
                {"h1", 4.15},
                {"h2", 6.28},
                {"h3", 10.17},
                {"t_beam", 0.28},
                {"E", 70.0}}}};
}

// Assert that fn() throws ConfigError whose message contains `needle`.
template <typename Fn>
void expect_config_error(Fn &&fn, const std::string &needle) {
  try {
    fn();
    FAIL_CHECK("expected ConfigError containing '" << needle << "'");
  } catch (const ConfigError &e) {
    const std::string msg = e.what();
    CHECK_MESSAGE(msg.find(needle) != std::string::npos,
                  "message was: " << msg);
  }
}

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "sims_io_test";
  fs::create_directories(dir);
  return dir;
}

struct StlTri {
  std::array<std::array<double, 3>, 3> v;
};

std::vector<StlTri> read_binary_stl(const fs::path &file) {
  std::ifstream in(file, std::ios::binary);
  REQUIRE(in.good());
  char header[80];
  in.read(header, 80);
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char *>(&n), 4);
  std::vector<StlTri> tris(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    float rec[12];
    in.read(reinterpret_cast<char *>(rec), sizeof(rec));
    std::uint16_t attr;
    in.read(reinterpret_cast<char *>(&attr), 2);
    for (int k = 0; k < 3; ++k)
      for (int c = 0; c < 3; ++c)
        tris[i].v[k][c] = rec[3 + 3 * k + c];
  }
  REQUIRE(in.good());
  in.get();
  CHECK(in.eof()); // no trailing bytes
  return tris;
}

std::uint64_t quantize_vertex(const std::array<double, 3> &p) {
  const auto q = [](double x) {
    return static_cast<std::uint64_t>(
        static_cast<std::int64_t>(std::llround(x * 1e5)) & 0x1fffffLL);
  };
  return (q(p[0]) << 42) | (q(p[1]) << 21) | q(p[2]);
}

} // namespace

TEST_CASE("minimal config materializes documented defaults") {
  const RunConfig cfg = parse_config(minimal_config());
  CHECK(cfg.design.n_rows == 1);
  CHECK(cfg.design.mode == DesignParams::Mode::Identical);
  CHECK(cfg.design.L == 11.34);
  CHECK(cfg.design.E == 70.0);
  CHECK(cfg.design.optimize_E == false);
  CHECK(cfg.nu == 0.46);
  CHECK(cfg.catalog.empty());
  CHECK(cfg.solver.resolution == 7);
  CHECK(cfg.solver.degree == 3);
  CHECK(cfg.solver.rigid_patches == true);
  CHECK(cfg.sweep.samples == 41);
  CHECK(cfg.sweep.adaptive == true);
  CHECK(cfg.target.kind == TargetConfig::Kind::None);
  CHECK(cfg.optimizer.max_iterations == 300);
  CHECK(cfg.optimizer.loss_tol == 0.01);
  CHECK(cfg.optimizer.bounds.empty());
  CHECK(cfg.stl.tessellation == 16);
  CHECK(cfg.stl.ascii == false);
}

TEST_CASE("config json round-trips to a fixed point") {
  json j = minimal_config();
  j["material"] = {{"nu", 0.3}, {"catalog", {20.0, 70.0, 100.0}}};
  j["solver"] = {{"resolution", 5}, {"degree", 2}, {"linear", "direct"}};
  j["sweep"] = {{"d_max", 4.0}, {"samples", 21}};
  j["target"] = {{"kind", "extrema"},
                 {"minima", {0.0, 3.83, 7.65}},
                 {"barriers", {0.12, 0.14}}};
  j["optimizer"] = {{"loss_tol", 4e-4}, {"bounds", {{"h2", {5.0, 7.0}}}}};
  j["export"] = {{"tessellation", 8}, {"ascii", true}};

  const RunConfig cfg = parse_config(j);
  const json full = config_to_json(cfg);
  // Re-parsing the materialized form reproduces it exactly.
  const RunConfig cfg2 = parse_config(full);
  CHECK(config_to_json(cfg2) == full);
  CHECK(cfg2.nu == 0.3);
  CHECK(cfg2.catalog == std::vector<double>{20.0, 70.0, 100.0});
  CHECK(cfg2.target.extrema.minima_d == std::vector<double>{0.0, 3.83, 7.65});
  CHECK(cfg2.optimizer.bounds.at("h2") == std::pair<double, double>{5.0, 7.0});
  CHECK(cfg2.stl.ascii == true);
}

TEST_CASE("unknown keys are rejected with the offending name") {
  auto with = [](json j, const char *section, json patch) {
    j[section] = std::move(patch);
    return j;
  };

  json root = minimal_config();
  root["speling_mistake"] = 1;
  expect_config_error([&] { parse_config(root); }, "speling_mistake");

  json d = minimal_config();
  d["design"]["t_bean"] = 0.28;
  expect_config_error([&] { parse_config(d); }, "t_bean");

  expect_config_error(
      [&] {
        parse_config(with(minimal_config(), "solver",
                          json{{"newton", {{"max_iter", 3}}}}));
      },
      "max_iter");
  expect_config_error(
      [&] {
        parse_config(with(minimal_config(), "target",
                          json{{"kind", "curve"}, {"csvfile", "x.csv"}}));
      },
      "csvfile");
  expect_config_error(
      [&] {
        parse_config(
            with(minimal_config(), "optimizer", json{{"tolerance", 0.1}}));
      },
      "tolerance");
  expect_config_error(
      [&] {
        parse_config(with(minimal_config(), "export", json{{"binary", true}}));
      },
      "binary");
}

TEST_CASE("type and range errors are reported as ConfigError") {
  json j = minimal_config();
  j["design"]["rows"] = "three";
  expect_config_error([&] { parse_config(j); }, "rows");

  json missing = minimal_config();
  missing["design"].erase("L");
  expect_config_error([&] { parse_config(missing); }, "L");

  json nu = minimal_config();
  nu["material"] = {{"nu", 0.5}};
  expect_config_error([&] { parse_config(nu); }, "nu");

  json res = minimal_config();
  res["solver"] = {{"resolution", 3}, {"degree", 3}};
  expect_config_error([&] { parse_config(res); }, "resolution");

  json lin = minimal_config();
  lin["solver"] = {{"linear", "cholesky"}};
  expect_config_error([&] { parse_config(lin); }, "linear");

  json cat = minimal_config();
  cat["material"] = {{"catalog", {70.0, -1.0}}};
  expect_config_error([&] { parse_config(cat); }, "catalog");
}

TEST_CASE("target validation") {
  auto base = [] {
    json j = minimal_config();
    j["sweep"] = {{"d_max", 1.0}};
    return j;
  };

  json both = base();
  both["target"] = {{"kind", "curve"},
                    {"curve_file", "x.csv"},
                    {"d", {0.0, 1.0, 2.0}},
                    {"energy", {0.0, 1.0, 2.0}}};
  expect_config_error([&] { parse_config(both); }, "either");

  json mismatch = base();
  mismatch["target"] = {{"kind", "curve"},
                        {"d", {0.0, 1.0, 2.0}},
                        {"energy", {0.0, 1.0}}};
  expect_config_error([&] { parse_config(mismatch); }, "equal length");

  json decreasing = base();
  decreasing["target"] = {{"kind", "curve"},
                          {"d", {0.0, 2.0, 1.0}},
                          {"energy", {0.0, 1.0, 2.0}}};
  expect_config_error([&] { parse_config(decreasing); }, "increase");

  json one_min = base();
  one_min["target"] = {{"kind", "extrema"}, {"minima", {0.0}}, {"barriers", json::array()}};
  expect_config_error([&] { parse_config(one_min); }, "two stable states");

  json bad_barriers = base();
  bad_barriers["target"] = {{"kind", "extrema"},
                            {"minima", {0.0, 2.0, 4.0}},
                            {"barriers", {0.1}}};
  expect_config_error([&] { parse_config(bad_barriers); }, "barrier");

  json bad_kind = base();
  bad_kind["target"] = {{"kind", "wiggles"}};
  expect_config_error([&] { parse_config(bad_kind); }, "kind");
}

TEST_CASE("curve_file resolves relative to the config directory") {
  const fs::path dir = temp_dir() / "rel";
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "target.csv");
    csv << "displacement_cm,strain_energy_J\n0,0\n0.5,0.2\n1,0.1\n";
  }
  json j = minimal_config();
  j["sweep"] = {{"d_max", 1.0}};
  j["target"] = {{"kind", "curve"}, {"curve_file", "target.csv"}};
  {
    std::ofstream cfg_file(dir / "run.json");
    cfg_file << j.dump();
  }
  const RunConfig cfg = load_config(dir / "run.json");
  REQUIRE(cfg.target.kind == TargetConfig::Kind::Curve);
  REQUIRE(cfg.target.curve.d.size() == 3);
  CHECK(cfg.target.curve.energy[1] == 0.2);
}

TEST_CASE("load_config rejects missing files and malformed JSON") {
  CHECK_THROWS_AS(load_config(temp_dir() / "does_not_exist.json"), ConfigError);
  const fs::path bad = temp_dir() / "broken.json";
  {
    std::ofstream out(bad);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config(bad), ConfigError);
}

TEST_CASE("resolve_bounds freezes parameters absent from the map") {
  RunConfig cfg = parse_config(minimal_config());
  cfg.optimizer.bounds["h2"] = {5.0, 7.0};
  cfg.optimizer.bounds["t_beam1"] = {0.1, 0.5};

  const DesignBounds b = cfg.resolve_bounds();
  const auto names = cfg.design.param_names();
  const Eigen::VectorXd theta = cfg.design.pack();
  REQUIRE(b.lower.size() == theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (names[i] == "h2") {
      CHECK(b.lower[i] == 5.0);
      CHECK(b.upper[i] == 7.0);
    } else if (names[i] == "t_beam1") {
      CHECK(b.lower[i] == 0.1);
      CHECK(b.upper[i] == 0.5);
    } else {
      CHECK(b.lower[i] == theta[i]);
      CHECK(b.upper[i] == theta[i]);
    }
  }

  cfg.optimizer.bounds["no_such_param"] = {0.0, 1.0};
  expect_config_error([&] { cfg.resolve_bounds(); }, "no_such_param");
}

TEST_CASE("sample_grid spans [0, d_max] uniformly") {
  RunConfig cfg = parse_config(minimal_config());
  cfg.sweep.d_max = 2.0;
  cfg.sweep.samples = 5;
  const Eigen::VectorXd g = cfg.sample_grid();
  REQUIRE(g.size() == 5);
  CHECK(g[0] == 0.0);
  CHECK(g[2] == 1.0);
  CHECK(g[4] == 2.0);

  cfg.sweep.d_max = 0.0;
  CHECK_THROWS_AS(cfg.sample_grid(), ConfigError);
}

TEST_CASE("curve CSV round-trips bit-exactly") {
  EnergyCurve c;
  c.d = Eigen::VectorXd(5);
  c.d << 0.0, 0.1, 0.30000000000000004, 1.0 / 3.0, 0.7;
  c.energy = Eigen::VectorXd(5);
  c.energy << 0.0, 1e-17, 0.2817263941, -3.5e-8, 2.0 / 3.0;
  c.force = Eigen::VectorXd(5);
  c.force << 0.0, -13.52, 4.9999999999999998, 1e300, -1e-300;

  const fs::path file = temp_dir() / "curve.csv";
  write_curve_csv(file, c);
  const EnergyCurve back = read_curve_csv(file);
  REQUIRE(back.d.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::memcmp(&back.d[i], &c.d[i], sizeof(double)) == 0);
    CHECK(std::memcmp(&back.energy[i], &c.energy[i], sizeof(double)) == 0);
    CHECK(std::memcmp(&back.force[i], &c.force[i], sizeof(double)) == 0);
  }

  // Writing the read-back curve reproduces the file byte for byte.
  const fs::path file2 = temp_dir() / "curve2.csv";
  write_curve_csv(file2, back);
  std::ifstream a(file, std::ios::binary), b(file2, std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("curve CSV accepts the two-column form") {
  const fs::path file = temp_dir() / "two_col.csv";
  {
    std::ofstream out(file);
    out << "displacement_cm,strain_energy_J\n0,0\n1,0.5\n";
  }
  const EnergyCurve c = read_curve_csv(file);
  REQUIRE(c.d.size() == 2);
  CHECK(c.energy[1] == 0.5);
  CHECK(c.force[0] == 0.0);
  CHECK(c.force[1] == 0.0);
}

TEST_CASE("curve CSV rejects malformed input") {
  const fs::path dir = temp_dir();
  auto write_and_read = [&](const char *name, const std::string &text) {
    const fs::path f = dir / name;
    std::ofstream out(f);
    out << text;
    out.close();
    return read_curve_csv(f);
  };

  CHECK_THROWS_AS(write_and_read("hdr.csv", "displacement,energy\n0,0\n1,1\n"),
                  ConfigError);
  CHECK_THROWS_AS(
      write_and_read("num.csv", "displacement_cm,strain_energy_J\n0,0\n1,1.5x\n"),
      ConfigError);
  CHECK_THROWS_AS(
      write_and_read("cols.csv", "displacement_cm,strain_energy_J\n0,0,9\n1,1,9\n"),
      ConfigError);
  CHECK_THROWS_AS(
      write_and_read("dec.csv", "displacement_cm,strain_energy_J\n0,0\n2,1\n1,2\n"),
      ConfigError);
  CHECK_THROWS_AS(write_and_read("one.csv", "displacement_cm,strain_energy_J\n0,0\n"),
                  ConfigError);
  CHECK_THROWS_AS(
      write_and_read("inf.csv", "displacement_cm,strain_energy_J\n0,0\n1,inf\n"),
      ConfigError);
}

TEST_CASE("trace CSV carries parameter columns") {
  std::vector<TraceRow> trace(2);
  trace[0].iteration = 0;
  trace[0].loss = 2.5;
  trace[0].grad_norm = 0.125;
  trace[0].step = 0.0;
  trace[0].active_bounds = 1;
  trace[0].theta = Eigen::Vector2d(11.34, 0.28);
  trace[1] = trace[0];
  trace[1].iteration = 1;
  trace[1].loss = 1.25;
  trace[1].theta = Eigen::Vector2d(11.0, 0.3);

  const fs::path file = temp_dir() / "trace.csv";
  write_trace_csv(file, trace, {"L", "t_beam1"});

  std::ifstream in(file);
  std::string header, row0, row1, extra;
  REQUIRE(std::getline(in, header));
  REQUIRE(std::getline(in, row0));
  REQUIRE(std::getline(in, row1));
  CHECK_FALSE(std::getline(in, extra));
  CHECK(header == "iteration,loss,grad_norm,step,active_bounds,L,t_beam1");
  CHECK(row0 == "0,2.5,0.125,0,1,11.34,0.28000000000000003");
  CHECK(row1.substr(0, 7) == "1,1.25,");
}

TEST_CASE("binary STL of a patch strip is a closed outward-facing solid") {
  // [0,3] x [0,1] extruded by 1 cm: volume 3, axis-aligned bounds known.
  const PatchSet ps = build_patch_strip(3, 4, 2, false, -1);
  const fs::path file = temp_dir() / "strip.stl";
  export_stl(ps, file, 4, false);

  const auto tris = read_binary_stl(file);
  REQUIRE(tris.size() > 0);

  // Every undirected edge must be shared by exactly two facets.
  std::map<std::pair<std::uint64_t, std::uint64_t>, int> edges;
  for (const auto &t : tris)
    for (int e = 0; e < 3; ++e) {
      std::uint64_t a = quantize_vertex(t.v[e]);
      std::uint64_t b = quantize_vertex(t.v[(e + 1) % 3]);
      REQUIRE(a != b);
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  for (const auto &[edge, uses] : edges)
    CHECK(uses == 2);

  // Signed volume (positive = consistent outward winding).
  double vol6 = 0.0;
  double lo[3] = {1e30, 1e30, 1e30}, hi[3] = {-1e30, -1e30, -1e30};
  for (const auto &t : tris) {
    const auto &a = t.v[0];
    const auto &b = t.v[1];
    const auto &c = t.v[2];
    vol6 += a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
            a[2] * (b[0] * c[1] - b[1] * c[0]);
    for (int k = 0; k < 3; ++k)
      for (int cmp = 0; cmp < 3; ++cmp) {
        lo[cmp] = std::min(lo[cmp], t.v[k][cmp]);
        hi[cmp] = std::max(hi[cmp], t.v[k][cmp]);
      }
  }
  CHECK(vol6 / 6.0 == doctest::Approx(3.0).epsilon(1e-5));
  CHECK(lo[0] == doctest::Approx(0.0));
  CHECK(hi[0] == doctest::Approx(3.0));
  CHECK(lo[1] == doctest::Approx(0.0));
  CHECK(hi[1] == doctest::Approx(1.0));
  CHECK(lo[2] == doctest::Approx(0.0));
  CHECK(hi[2] == doctest::Approx(1.0));
}

TEST_CASE("ASCII STL is emitted on request") {
  const PatchSet ps = build_patch_strip(1, 4, 2, false, -1);
  const fs::path file = temp_dir() / "one.stl";
  export_stl(ps, file, 2, true);
  std::ifstream in(file);
  std::string first;
  REQUIRE(std::getline(in, first));
  CHECK(first.substr(0, 5) == "solid");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("endsolid") != std::string::npos);
  CHECK(text.find("facet normal") != std::string::npos);
}

TEST_CASE("run manifest carries the resolved configuration and metrics") {
  const RunConfig cfg = parse_config(minimal_config());
  const json metrics = {{"dofs", 123}, {"final_energy_J", 0.25}};
  const json m =
      make_manifest("simulate", cfg, {"curve.csv", "manifest.json"}, metrics, 4, 7, 1.5);
  CHECK(m.at("command") == "simulate");
  CHECK(m.at("config") == config_to_json(cfg));
  CHECK(m.at("outputs").size() == 2);
  CHECK(m.at("metrics").at("dofs") == 123);
  CHECK(m.at("threads") == 4);
  CHECK(m.at("seed") == 7);
  CHECK(m.at("runtime_seconds") == 1.5);
  CHECK(m.contains("version"));

  const fs::path file = temp_dir() / "manifest.json";
  write_json(file, m);
  std::ifstream in(file);
  json back;
  in >> back;
  CHECK(back == m);
}
