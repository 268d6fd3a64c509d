#include "sims/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sims/splines.hpp"

namespace sims {

CurveExtrema find_stable_states(const EnergyCurve &curve) {
  std::vector<double> se(curve.energy.data(), curve.energy.data() + curve.energy.size());
  return find_curve_extrema<double>(curve.d, se);
}

namespace {

// Vertical displacement of the material point at parametric (xi, eta) of
// one patch, given the local control-point displacements.
double point_uy(const PatchSet &ps, double xi, double eta,
                const Eigen::MatrixX2d &u) {
  const Eigen::VectorXd unit_w = Eigen::VectorXd::Ones(ps.res * ps.res);
  const NurbsEval2D ev = nurbs_basis_2d(ps.kv, ps.kv, unit_w, xi, eta);
  double uy = 0.0;
  for (int b = 0; b < ev.value.size(); ++b) {
    const int i = ev.first_u + b % (ps.degree + 1);
    const int j = ev.first_v + b / (ps.degree + 1);
    uy += ev.value[b] * u(ps.point_index(i, j), 1);
  }
  return uy;
}

} // namespace

CollapseReport collapse_order(const PatchSet &ps, const DofMap &dm,
                              const std::vector<DeformationState> &states) {
  const int nr = ps.n_rows;
  CollapseReport rep;
  if (states.empty())
    return rep;

  std::vector<double> when(nr, std::numeric_limits<double>::infinity());
  std::vector<double> prev_defl(nr, 0.0);
  double prev_d = states.front().d;

  for (std::size_t si = 0; si < states.size(); ++si) {
    const auto &st = states[si];
    const auto local = global_to_local(ps, dm, st.q, st.d);
    for (int r = 0; r < nr; ++r) {
      const auto &ids = ps.rows[r];
      // Apex of the beam midline vs the mean of its two root midpoints.
      const double apex = point_uy(ps, 1.0, 0.5, local[ids.beam[1]]);
      const double root_l = point_uy(ps, 0.0, 0.5, local[ids.beam[0]]);
      const double root_r = point_uy(ps, 1.0, 0.5, local[ids.beam[3]]);
      const double defl = apex - 0.5 * (root_l + root_r);
      const double rise = ps.cells[r].h2 - ps.cells[r].h1;
      if (std::isinf(when[r]) && defl <= -rise && si > 0) {
        // Linear interpolation of the crossing displacement.
        const double f = (prev_defl[r] - (-rise)) / (prev_defl[r] - defl);
        when[r] = prev_d + f * (st.d - prev_d);
      } else if (std::isinf(when[r]) && defl <= -rise && si == 0) {
        when[r] = st.d;
      }
      prev_defl[r] = defl;
    }
    prev_d = st.d;
  }

  std::vector<int> rows;
  for (int r = 0; r < nr; ++r)
    if (std::isfinite(when[r]))
      rows.push_back(r);
  std::sort(rows.begin(), rows.end(),
            [&](int a, int b) { return when[a] < when[b]; });
  for (std::size_t k = 0; k + 1 < rows.size(); ++k)
    if (std::abs(when[rows[k]] - when[rows[k + 1]]) < 1e-9)
      rep.degenerate = true;
  rep.order = rows;
  for (int r : rows)
    rep.d_collapse.push_back(when[r]);
  return rep;
}

Eigen::VectorXd cumulative_integral(const Eigen::VectorXd &x, const Eigen::VectorXd &y) {
  const int n = static_cast<int>(x.size());
  if (y.size() != n)
    throw ConfigError("integration: sample length mismatch");
  Eigen::VectorXd c(n);
  if (n == 0)
    return c;
  c[0] = 0.0;
  auto trapezoid = [&](int i) { return 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]); };
  // March in Simpson pairs: cumulative values at odd interior points use a
  // trapezoid from the last even point, even points close the parabola.
  for (int i = 0; i + 2 < n; i += 2) {
    const double h0 = x[i + 1] - x[i], h1 = x[i + 2] - x[i + 1];
    if (!(h0 > 0.0) || !(h1 > 0.0))
      throw ConfigError("integration: displacement samples must increase");
    c[i + 1] = c[i] + trapezoid(i);
    const double H = h0 + h1;
    c[i + 2] = c[i] + (H / 6.0) * ((2.0 - h1 / h0) * y[i] +
                                   (H * H / (h0 * h1)) * y[i + 1] +
                                   (2.0 - h0 / h1) * y[i + 2]);
  }
  if (n % 2 == 0 && n >= 2) // odd tail: one trapezoid
    c[n - 1] = c[n - 2] + trapezoid(n - 2);
  return c;
}

Eigen::VectorXd absorbed_energy(const Eigen::VectorXd &d_cm, const Eigen::VectorXd &force_N) {
  return 0.01 * cumulative_integral(d_cm, force_N); // N * cm = 0.01 J
}

double curve_mismatch(const EnergyCurve &test, const EnergyCurve &reference) {
  const int n = static_cast<int>(reference.d.size());
  if (test.d.size() != n)
    throw ConfigError("curve mismatch: sample counts differ");
  double acc = 0.0, peak = 0.0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(test.d[i] - reference.d[i]) > 1e-9)
      throw ConfigError("curve mismatch: displacement grids differ");
    acc += std::abs(test.energy[i] - reference.energy[i]);
    peak = std::max(peak, std::abs(reference.energy[i]));
  }
  if (peak == 0.0)
    return 0.0;
  return acc / (n * peak);
}

} // namespace sims
