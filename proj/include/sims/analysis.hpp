#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sims/dual.hpp"
#include "sims/errors.hpp"
#include "sims/solver.hpp"

namespace sims {

// ---------------------------------------------------------------------------
// Extrema of a sampled energy-displacement curve.
//
// The core is templated on the energy scalar so the inverse-design loss can
// push dual numbers through the same refinement arithmetic; the sample
// topology (which indices are extrema) always comes from the plain values.

template <typename T>
struct ExtremumT {
  double d_sample = 0.0; // displacement of the defining sample
  T d{};                 // refined location
  T value{};             // refined energy
  int index = -1;        // sample index (-1 for the rest state entry)
};

template <typename T>
struct CurveExtremaT {
  std::vector<ExtremumT<T>> minima; // first entry is always the rest state
  std::vector<ExtremumT<T>> maxima; // interior peaks
  bool degenerate = false;          // plateau tie detected
};

// Vertex of the parabola through three samples; falls back to the middle
// sample when the points are (numerically) collinear.
template <typename T>
ExtremumT<T> refine_extremum(const Eigen::VectorXd &d, const std::vector<T> &se, int i) {
  const double x0 = d[i - 1], x1 = d[i], x2 = d[i + 1];
  const T y0 = se[i - 1], y1 = se[i], y2 = se[i + 1];
  const T num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
  const T den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
  ExtremumT<T> ex;
  ex.d_sample = x1;
  ex.index = i;
  if (std::abs(value_of(den)) < 1e-14 * (std::abs(value_of(num)) + 1e-300)) {
    ex.d = T(x1);
    ex.value = y1;
    return ex;
  }
  T xs = x1 - 0.5 * (num / den);
  if (value_of(xs) < x0) xs = T(x0);
  if (value_of(xs) > x2) xs = T(x2);
  // Lagrange evaluation of the parabola at the vertex.
  const T l0 = ((xs - x1) * (xs - x2)) / ((x0 - x1) * (x0 - x2));
  const T l1 = ((xs - x0) * (xs - x2)) / ((x1 - x0) * (x1 - x2));
  const T l2 = ((xs - x0) * (xs - x1)) / ((x2 - x0) * (x2 - x1));
  ex.d = xs;
  ex.value = y0 * l0 + y1 * l1 + y2 * l2;
  return ex;
}

template <typename T>
CurveExtremaT<T> find_curve_extrema(const Eigen::VectorXd &d, const std::vector<T> &se) {
  const int n = static_cast<int>(se.size());
  if (d.size() != n)
    throw ConfigError("curve extrema: displacement/energy length mismatch");
  if (n < 3)
    throw ConfigError("curve extrema: need at least three samples");

  CurveExtremaT<T> out;
  ExtremumT<T> rest;
  rest.d_sample = d[0];
  rest.d = T(d[0]);
  rest.value = se[0];
  rest.index = 0;
  out.minima.push_back(rest);

  for (int i = 1; i + 1 < n; ++i) {
    const double y0 = value_of(se[i - 1]), y1 = value_of(se[i]), y2 = value_of(se[i + 1]);
    if (y1 == y0 || y1 == y2)
      out.degenerate = true;
    if (y1 < y0 && y1 <= y2)
      out.minima.push_back(refine_extremum(d, se, i));
    else if (y1 > y0 && y1 >= y2)
      out.maxima.push_back(refine_extremum(d, se, i));
  }
  return out;
}

// Barrier k: peak between minima k and k+1 minus the energy of minimum k.
// Release k: the same peak minus the energy of minimum k+1.
template <typename T>
struct BarrierSetT {
  std::vector<T> barrier, release;
};

template <typename T>
BarrierSetT<T> energy_barriers(const CurveExtremaT<T> &ex) {
  BarrierSetT<T> out;
  for (std::size_t k = 0; k + 1 < ex.minima.size(); ++k) {
    const int i0 = ex.minima[k].index, i1 = ex.minima[k + 1].index;
    const ExtremumT<T> *peak = nullptr;
    for (const auto &m : ex.maxima)
      if (m.index > i0 && m.index < i1) {
        peak = &m;
        break;
      }
    if (!peak)
      throw ConstructionError("no energy peak between consecutive minima");
    out.barrier.push_back(peak->value - ex.minima[k].value);
    out.release.push_back(peak->value - ex.minima[k + 1].value);
  }
  return out;
}

// Double-typed conveniences used by the CLI and the acceptance checks.
using CurveExtrema = CurveExtremaT<double>;
using BarrierSet = BarrierSetT<double>;

CurveExtrema find_stable_states(const EnergyCurve &curve);

// ---------------------------------------------------------------------------
// Collapse bookkeeping for stacked cells.

struct CollapseReport {
  // Rows (0 = bottom cell) ordered by when their beam snapped, with the
  // interpolated platen displacement of each event.  Rows that never snap
  // within the sweep are absent.
  std::vector<int> order;
  std::vector<double> d_collapse;
  bool degenerate = false; // two rows snapped at indistinguishable d
};

// A row counts as collapsed once its beam apex has dropped below the root
// level, i.e. the apex-to-root relative vertical displacement exceeds the
// initial rise h2 - h1.
CollapseReport collapse_order(const PatchSet &ps, const DofMap &dm,
                              const std::vector<DeformationState> &states);

// ---------------------------------------------------------------------------
// Quadrature over sampled curves.

// Cumulative integral of y over x by composite Simpson pairs (general
// three-point parabola weights, so non-uniform spacing integrates its
// interpolating parabola exactly); odd interior points and an odd tail fall
// back to the trapezoid rule.
Eigen::VectorXd cumulative_integral(const Eigen::VectorXd &x, const Eigen::VectorXd &y);

// Cumulative absorbed energy in J from displacement (cm) and force (N).
Eigen::VectorXd absorbed_energy(const Eigen::VectorXd &d_cm, const Eigen::VectorXd &force_N);

// Mean absolute energy difference between two sweeps of the same structure
// (e.g. with and without rigid patches), normalized by the peak magnitude
// of the reference curve.  The curves must share their displacement grid.
double curve_mismatch(const EnergyCurve &test, const EnergyCurve &reference);

} // namespace sims
