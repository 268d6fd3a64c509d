#pragma once

#include <Eigen/Dense>

namespace sims {

using Mat2 = Eigen::Matrix2d;

// Fourth-order elasticity tangent dP/dF for 2D, stored as a 4x4 matrix in
// the flattened ordering (F11, F21, F12, F22) used by Eigen's default
// column-major reshape of a 2x2 matrix.
using Tangent2 = Eigen::Matrix4d;

// Lamé parameters (MPa) from Young's modulus E (MPa) and Poisson ratio nu.
struct LameParams {
  double mu = 0.0;
  double lambda = 0.0;
};

LameParams lame_parameters(double E, double nu);

// Compressible neo-Hookean strain energy density (MPa = J/cm^3):
//   W(F) = mu/2 (I1 - 2 - 2 ln J) + lambda/2 (ln J)^2
// with I1 = tr(F^T F) and J = det F.  Throws SolveError-free signalling:
// returns +infinity through the inverted flag instead; see below.
double strain_energy_density(const Mat2 &F, const LameParams &lame);

// First Piola-Kirchhoff stress P = mu (F - F^-T) + lambda ln(J) F^-T.
Mat2 first_piola(const Mat2 &F, const LameParams &lame);

// Analytic tangent A = dP/dF (flattened 4x4, symmetric).
Tangent2 material_tangent(const Mat2 &F, const LameParams &lame);

// det F <= 0 means the trial state inverted an element; the energy is not
// defined there and the caller must reject the step.
inline bool is_inverted(const Mat2 &F) { return F.determinant() <= 0.0; }

} // namespace sims
