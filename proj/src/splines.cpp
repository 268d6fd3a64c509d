#include "sims/splines.hpp"

#include <algorithm>
#include <cmath>

#include "sims/errors.hpp"

namespace sims {

KnotVector::KnotVector(std::vector<double> k, int p) : knots(std::move(k)), degree(p) {
  if (degree < 0)
    throw ConfigError("knot vector: degree must be non-negative");
  if (static_cast<int>(knots.size()) < 2 * (degree + 1))
    throw ConfigError("knot vector: too few knots for the requested degree");
  if (!std::is_sorted(knots.begin(), knots.end()))
    throw ConfigError("knot vector: knots must be non-decreasing");
  for (int i = 0; i <= degree; ++i) {
    if (knots[i] != knots.front() || knots[knots.size() - 1 - i] != knots.back())
      throw ConfigError("knot vector: end knots must repeat degree+1 times (open/clamped)");
  }
}

KnotVector KnotVector::open_uniform(int num_basis, int p) {
  if (num_basis < p + 1)
    throw ConfigError("knot vector: need at least degree+1 basis functions");
  std::vector<double> k;
  k.reserve(num_basis + p + 1);
  const int spans = num_basis - p;
  for (int i = 0; i <= p; ++i) k.push_back(0.0);
  for (int i = 1; i < spans; ++i) k.push_back(static_cast<double>(i) / spans);
  for (int i = 0; i <= p; ++i) k.push_back(1.0);
  return KnotVector(std::move(k), p);
}

int KnotVector::find_span(double xi) const {
  const double lo = knots.front(), hi = knots.back();
  if (xi < lo || xi > hi)
    throw ConfigError("basis evaluation: parameter outside the knot range");
  const int n = num_basis();
  if (xi >= knots[n]) return n - 1; // right end: last non-empty span
  // binary search: knots[s] <= xi < knots[s+1]
  int low = degree, high = n;
  while (high - low > 1) {
    const int mid = (low + high) / 2;
    if (xi < knots[mid]) high = mid; else low = mid;
  }
  return low;
}

BasisEval bspline_basis(const KnotVector &kv, double xi, int deriv_order) {
  const int p = kv.degree;
  if (deriv_order < 0 || deriv_order > p)
    throw ConfigError("basis evaluation: derivative order must be in [0, degree]");

  BasisEval out;
  out.span = kv.find_span(xi);
  out.first = out.span - p;
  out.deriv.setZero(deriv_order + 1, p + 1);

  const auto &U = kv.knots;
  const int s = out.span;

  // Triangular table of values together with the knot differences needed for
  // the derivative recurrences (standard evaluation for clamped splines).
  Eigen::MatrixXd ndu(p + 1, p + 1);
  Eigen::VectorXd left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left(j) = xi - U[s + 1 - j];
    right(j) = U[s + j] - xi;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right(r + 1) + left(j - r); // knot difference
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right(r + 1) * temp;
      saved = left(j - r) * temp;
    }
    ndu(j, j) = saved;
  }
  for (int j = 0; j <= p; ++j) out.deriv(0, j) = ndu(j, p);

  if (deriv_order == 0) return out;

  // Derivatives from the alternating-sum recurrence over the ndu table.
  Eigen::MatrixXd a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= deriv_order; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      out.deriv(k, r) = d;
      std::swap(s1, s2);
    }
  }
  // multiply by p! / (p-k)!
  double r = p;
  for (int k = 1; k <= deriv_order; ++k) {
    for (int j = 0; j <= p; ++j) out.deriv(k, j) *= r;
    r *= (p - k);
  }
  return out;
}

NurbsEval2D nurbs_basis_2d(const KnotVector &ku, const KnotVector &kv,
                           const Eigen::VectorXd &weights, double xi, double eta) {
  const int nu = ku.num_basis(), nv = kv.num_basis();
  if (weights.size() != static_cast<Eigen::Index>(nu) * nv)
    throw ConfigError("nurbs basis: weight count does not match the basis grid");
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (!(weights[i] > 0.0))
      throw ConfigError("nurbs basis: weights must be positive");

  const BasisEval bu = bspline_basis(ku, xi, std::min(1, ku.degree));
  const BasisEval bv = bspline_basis(kv, eta, std::min(1, kv.degree));
  const int pu = ku.degree, pv = kv.degree;

  NurbsEval2D out;
  out.span_u = bu.span;
  out.span_v = bv.span;
  out.first_u = bu.first;
  out.first_v = bv.first;
  const int m = (pu + 1) * (pv + 1);
  out.value.resize(m);
  out.du.resize(m);
  out.dv.resize(m);

  // Weighted sums: W = sum w B C,  and its parametric derivatives.
  double W = 0.0, Wu = 0.0, Wv = 0.0;
  for (int j = 0; j <= pv; ++j) {
    for (int i = 0; i <= pu; ++i) {
      const double w = weights[(bu.first + i) + (bv.first + j) * nu];
      const double B = bu.value(i), C = bv.value(j);
      const double Bu = (pu > 0) ? bu.deriv(1, i) : 0.0;
      const double Cv = (pv > 0) ? bv.deriv(1, j) : 0.0;
      W += w * B * C;
      Wu += w * Bu * C;
      Wv += w * B * Cv;
    }
  }
  const double invW = 1.0 / W;
  for (int j = 0; j <= pv; ++j) {
    for (int i = 0; i <= pu; ++i) {
      const int a = i + j * (pu + 1);
      const double w = weights[(bu.first + i) + (bv.first + j) * nu];
      const double B = bu.value(i), C = bv.value(j);
      const double Bu = (pu > 0) ? bu.deriv(1, i) : 0.0;
      const double Cv = (pv > 0) ? bv.deriv(1, j) : 0.0;
      const double R = w * B * C * invW;
      out.value[a] = R;
      out.du[a] = (w * Bu * C - R * Wu) * invW;
      out.dv[a] = (w * B * Cv - R * Wv) * invW;
    }
  }
  return out;
}

GaussRule gauss_rule(int n) {
  if (n < 1 || n > 10)
    throw ConfigError("gauss rule: point count must be in [1, 10]");
  GaussRule g;
  g.points.resize(n);
  g.weights.resize(n);
  // Nodes/weights to full double precision (symmetric about 0).
  static const double P[10][5] = {
      {0.0},
      {0.5773502691896257645},
      {0.0, 0.7745966692414833770},
      {0.3399810435848562648, 0.8611363115940525752},
      {0.0, 0.5384693101056830910, 0.9061798459386639928},
      {0.2386191860831969086, 0.6612093864662645136, 0.9324695142031520278},
      {0.0, 0.4058451513773971669, 0.7415311855993944399, 0.9491079123427585245},
      {0.1834346424956498049, 0.5255324099163289858, 0.7966664774136267395,
       0.9602898564975362316},
      {0.0, 0.3242534234038089290, 0.6133714327005903973, 0.8360311073266357943,
       0.9681602395076260898},
      {0.1488743389816312108, 0.4333953941292471908, 0.6794095682990244062,
       0.8650633666889845107, 0.9739065285171717200},
  };
  static const double Wt[10][5] = {
      {2.0},
      {1.0},
      {0.8888888888888888889, 0.5555555555555555556},
      {0.6521451548625461426, 0.3478548451374538574},
      {0.5688888888888888889, 0.4786286704993664680, 0.2369268850561890875},
      {0.4679139345726910474, 0.3607615730481386076, 0.1713244923791703450},
      {0.4179591836734693878, 0.3818300505051189449, 0.2797053914892766679,
       0.1294849661688696933},
      {0.3626837833783619830, 0.3137066458778872873, 0.2223810344533744705,
       0.1012285362903762592},
      {0.3302393550012597632, 0.3123470770400028401, 0.2606106964029354623,
       0.1806481606948574041, 0.0812743883615744120},
      {0.2955242247147528702, 0.2692667193099963551, 0.2190863625159820440,
       0.1494513491505805931, 0.0666713443086881376},
  };
  const int idx = n - 1;
  const int half = (n + 1) / 2;
  for (int k = 0; k < half; ++k) {
    const double x = P[idx][half - 1 - k]; // ascending magnitude order
    const double w = Wt[idx][half - 1 - k];
    g.points[k] = -x;
    g.weights[k] = w;
    g.points[n - 1 - k] = x;
    g.weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) { // center point listed once
    g.points[n / 2] = P[idx][0];
    g.weights[n / 2] = Wt[idx][0];
  }
  return g;
}

Eigen::VectorXd greville_abscissae(const KnotVector &kv) {
  const int n = kv.num_basis(), p = kv.degree;
  Eigen::VectorXd g(n);
  if (p == 0) {
    // Degenerate piecewise-constant case: span midpoints.
    for (int i = 0; i < n; ++i)
      g[i] = 0.5 * (kv.knots[i] + kv.knots[i + 1]);
    return g;
  }
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 1; j <= p; ++j) s += kv.knots[i + j];
    g[i] = s / p;
  }
  return g;
}

Eigen::MatrixXd greville_collocation_matrix(const KnotVector &kv) {
  const int n = kv.num_basis(), p = kv.degree;
  const Eigen::VectorXd g = greville_abscissae(kv);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const BasisEval b = bspline_basis(kv, g[j], 0);
    for (int i = 0; i <= p; ++i) A(j, b.first + i) = b.value(i);
  }
  return A;
}

} // namespace sims
