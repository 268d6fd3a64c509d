#pragma once

#include <vector>

#include <Eigen/Dense>

namespace sims {

// Open (clamped) knot vector on [0, 1].  For n basis functions of degree p
// the knot list has n + p + 1 entries, non-decreasing, with the first and
// last knot repeated p + 1 times.
struct KnotVector {
  std::vector<double> knots;
  int degree = 0;

  KnotVector() = default;
  KnotVector(std::vector<double> k, int p);

  // Clamped vector with uniformly spaced interior knots giving
  // num_basis functions of degree p (num_basis >= p + 1).
  static KnotVector open_uniform(int num_basis, int p);

  int num_basis() const { return static_cast<int>(knots.size()) - degree - 1; }
  int num_spans() const { return num_basis() - degree; }

  // Index s of the knot span containing xi: knots[s] <= xi < knots[s+1],
  // with xi == knots.back() mapped to the last non-empty span.
  int find_span(double xi) const;
};

// Values and derivatives of the degree+1 basis functions that are non-zero
// on one knot span.  Row k of `deriv` holds the k-th derivative (per unit
// parameter); row 0 is the function values.
struct BasisEval {
  int span = 0;        // knot span index
  int first = 0;       // index of the first non-zero basis function
  Eigen::MatrixXd deriv; // (deriv_order+1) x (degree+1)

  double value(int local) const { return deriv(0, local); }
};

// Cox–de Boor evaluation of the non-zero B-spline basis functions and their
// derivatives up to deriv_order (0 <= deriv_order <= degree) at xi in [0,1].
BasisEval bspline_basis(const KnotVector &kv, double xi, int deriv_order = 0);

// Rational tensor-product basis for a 2D patch.  Weights are stored in a
// (n_u x n_v) column-major vector: w[i + j*n_u].  Returns values, d/dxi and
// d/deta of every non-zero rational function, ordered local-u fastest.
struct NurbsEval2D {
  int span_u = 0, span_v = 0;
  int first_u = 0, first_v = 0;
  Eigen::VectorXd value;  // (p+1)*(q+1)
  Eigen::VectorXd du, dv; // same layout
};

NurbsEval2D nurbs_basis_2d(const KnotVector &ku, const KnotVector &kv,
                           const Eigen::VectorXd &weights, double xi, double eta);

// Gauss–Legendre rule with n points (1 <= n <= 10) on [-1, 1]; exact for
// polynomials of degree 2n - 1.
struct GaussRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
};

GaussRule gauss_rule(int n);

// Greville abscissae: parameter value i is the average of knots
// i+1 .. i+p.  These are the canonical interpolation/collocation sites.
Eigen::VectorXd greville_abscissae(const KnotVector &kv);

// Collocation matrix A of basis values at the Greville abscissae:
// A(j, i) = B_i(greville_j).  Interpolating data y through the spline means
// solving A c = y for the control values c.
Eigen::MatrixXd greville_collocation_matrix(const KnotVector &kv);

} // namespace sims
