#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sims {

// Geometry of one bistable cell (lengths in cm):
//   L      outer width of the cell
//   t      frame thickness (floor bar height, half of a wall column width)
//   h1     beam-root centerline height above the cell interior bottom
//   h2     beam-apex centerline height above the cell interior bottom
//   h3     interior cell height (floor top to cell top)
//   t_beam in-plane beam thickness
struct CellGeometry {
  double L = 0, t = 0, h1 = 0, h2 = 0, h3 = 0, t_beam = 0;
};

// Design parameterization of a stacked multistable structure.
//
// identical mode:    theta = [L, t, h1, h2, h3, t_1 .. t_n]        (5 + n)
// non-identical:     theta = [L, t, h1_i, h2_i, h3_i, t_i  x n]    (2 + 4n)
// optimize_E adds one trailing slot holding Young's modulus E (MPa).
struct DesignParams {
  enum class Mode { Identical, NonIdentical };

  Mode mode = Mode::Identical;
  int n_rows = 1;
  double L = 0, t = 0;
  std::vector<double> h1, h2, h3;  // size 1 in identical mode, n otherwise
  std::vector<double> t_beam;      // size n in both modes
  double E = 70.0;                 // Young's modulus (MPa)
  bool optimize_E = false;

  int num_params() const;
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd &theta);
  std::vector<std::string> param_names() const;

  // Per-row cell geometry (row 0 is the bottom cell).
  CellGeometry cell(int row) const;

  // Throws ConstructionError naming the violated constraint.
  void validate() const;
};

// Closed per-parameter box for projected-gradient optimization, in the same
// packing order as DesignParams::pack().
struct DesignBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  // Every point of the box must satisfy the design invariants; this checks
  // the critical corners and throws ConfigError otherwise.
  void validate_against(const DesignParams &prototype) const;
};

// Cosine beam centerline height above the roots, x in [0, span] with
// span = L - 4t:  w0(x) = (h2 - h1)/2 * (1 - cos(2 pi x / span)).
// Templated so dual-number geometry differentiation can flow through it.
template <typename T>
T beam_centerline(T x, T L, T t, T h1, T h2) {
  const T span = L - T(4.0) * t;
  const T amp = (h2 - h1) / T(2.0);
  using std::cos;
  return amp * (T(1.0) - cos(T(2.0 * M_PI) * x / span));
}

} // namespace sims
