#include "sims/design.hpp"

#include <cmath>

#include "sims/errors.hpp"

namespace sims {

int DesignParams::num_params() const {
  const int base = (mode == Mode::Identical) ? 5 + n_rows : 2 + 4 * n_rows;
  return base + (optimize_E ? 1 : 0);
}

Eigen::VectorXd DesignParams::pack() const {
  Eigen::VectorXd theta(num_params());
  int k = 0;
  theta[k++] = L;
  theta[k++] = t;
  if (mode == Mode::Identical) {
    theta[k++] = h1[0];
    theta[k++] = h2[0];
    theta[k++] = h3[0];
    for (int r = 0; r < n_rows; ++r) theta[k++] = t_beam[r];
  } else {
    for (int r = 0; r < n_rows; ++r) {
      theta[k++] = h1[r];
      theta[k++] = h2[r];
      theta[k++] = h3[r];
      theta[k++] = t_beam[r];
    }
  }
  if (optimize_E) theta[k++] = E;
  return theta;
}

void DesignParams::unpack(const Eigen::VectorXd &theta) {
  if (theta.size() != num_params())
    throw ConfigError("design: parameter vector length does not match the mode");
  int k = 0;
  L = theta[k++];
  t = theta[k++];
  if (mode == Mode::Identical) {
    h1.assign(1, theta[k++]);
    h2.assign(1, theta[k++]);
    h3.assign(1, theta[k++]);
    t_beam.resize(n_rows);
    for (int r = 0; r < n_rows; ++r) t_beam[r] = theta[k++];
  } else {
    h1.resize(n_rows);
    h2.resize(n_rows);
    h3.resize(n_rows);
    t_beam.resize(n_rows);
    for (int r = 0; r < n_rows; ++r) {
      h1[r] = theta[k++];
      h2[r] = theta[k++];
      h3[r] = theta[k++];
      t_beam[r] = theta[k++];
    }
  }
  if (optimize_E) E = theta[k++];
}

std::vector<std::string> DesignParams::param_names() const {
  std::vector<std::string> names = {"L", "t"};
  if (mode == Mode::Identical) {
    names.insert(names.end(), {"h1", "h2", "h3"});
    for (int r = 0; r < n_rows; ++r) names.push_back("t_beam" + std::to_string(r + 1));
  } else {
    for (int r = 0; r < n_rows; ++r) {
      const std::string s = std::to_string(r + 1);
      names.push_back("h1_" + s);
      names.push_back("h2_" + s);
      names.push_back("h3_" + s);
      names.push_back("t_beam" + s);
    }
  }
  if (optimize_E) names.push_back("E");
  return names;
}

CellGeometry DesignParams::cell(int row) const {
  const int g = (mode == Mode::Identical) ? 0 : row;
  CellGeometry c;
  c.L = L;
  c.t = t;
  c.h1 = h1[g];
  c.h2 = h2[g];
  c.h3 = h3[g];
  c.t_beam = t_beam[row];
  return c;
}

namespace {

void validate_cell(const CellGeometry &c, int row) {
  const std::string where = " (row " + std::to_string(row + 1) + ")";
  auto fail = [&](const std::string &what) { throw ConstructionError("design: " + what + where); };
  if (!(c.L > 0) || !(c.t > 0) || !(c.t_beam > 0)) fail("L, t and t_beam must be positive");
  if (!(c.L > 4 * c.t)) fail("beam span requires L > 4t");
  if (!(c.L / 2 - c.t > 2 * c.t)) fail("apex block must fit inside the beam span (L > 6t)");
  if (!(c.t_beam < c.h1)) fail("beam thickness must satisfy t_beam < h1");
  if (!(c.h2 >= c.h1)) fail("apex height must satisfy h2 >= h1");
  if (!(c.h3 > c.h2 + 0.5 * c.t_beam)) fail("beam apex exceeds the cell interior (need h3 > h2 + t_beam/2)");
  if (!(c.h3 > c.h1 + 1.5 * c.t_beam)) fail("cell interior too short for the wall above the beam root");
}

} // namespace

void DesignParams::validate() const {
  if (n_rows < 1) throw ConstructionError("design: need at least one cell row");
  const size_t nh = (mode == Mode::Identical) ? 1u : static_cast<size_t>(n_rows);
  if (h1.size() != nh || h2.size() != nh || h3.size() != nh)
    throw ConstructionError("design: height arrays do not match the mode/row count");
  if (t_beam.size() != static_cast<size_t>(n_rows))
    throw ConstructionError("design: need one beam thickness per row");
  if (!(E > 0)) throw ConstructionError("design: Young's modulus must be positive");
  for (int r = 0; r < n_rows; ++r) validate_cell(cell(r), r);
}

void DesignBounds::validate_against(const DesignParams &prototype) const {
  const int n = prototype.num_params();
  if (lower.size() != n || upper.size() != n)
    throw ConfigError("bounds: length does not match the design parameter count");
  for (int i = 0; i < n; ++i)
    if (!(lower[i] <= upper[i]))
      throw ConfigError("bounds: lower bound exceeds upper bound for parameter " +
                        prototype.param_names()[i]);

  // The invariants are monotone in each parameter, so checking the adverse
  // corner of the box per constraint certifies every interior point.
  DesignParams worst = prototype;
  auto set_from = [&](const Eigen::VectorXd &theta) { worst.unpack(theta); };

  // Worst case for span/thickness constraints: smallest L and heights,
  // largest t and t_beam.
  Eigen::VectorXd corner = lower;
  const auto names = prototype.param_names();
  for (int i = 0; i < n; ++i)
    if (names[i] == "t" || names[i].rfind("t_beam", 0) == 0) corner[i] = upper[i];
  set_from(corner);
  try {
    worst.validate();
  } catch (const ConstructionError &e) {
    throw ConfigError(std::string("bounds: box contains invalid designs: ") + e.what());
  }

  // Worst case for the h ordering constraints: h1 high, h2 low / h2 high,
  // h3 low, with the largest beam thickness.
  corner = lower;
  for (int i = 0; i < n; ++i) {
    if (names[i].rfind("h1", 0) == 0 || names[i].rfind("t_beam", 0) == 0 || names[i] == "t")
      corner[i] = upper[i];
    if (names[i] == "L") corner[i] = lower[i];
  }
  set_from(corner);
  try {
    worst.validate();
  } catch (const ConstructionError &e) {
    throw ConfigError(std::string("bounds: box contains invalid designs: ") + e.what());
  }
}

} // namespace sims
