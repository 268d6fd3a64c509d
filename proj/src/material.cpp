#include "sims/material.hpp"

#include <cmath>
#include <limits>

#include "sims/errors.hpp"

namespace sims {

LameParams lame_parameters(double E, double nu) {
  if (!(E > 0.0))
    throw ConfigError("material: Young's modulus must be positive");
  if (!(nu >= 0.0) || nu >= 0.5)
    throw ConfigError("material: Poisson ratio must lie in [0, 0.5) for a "
                      "compressible formulation");
  LameParams lame;
  lame.mu = E / (2.0 * (1.0 + nu));
  lame.lambda = nu * E / ((1.0 + nu) * (1.0 - 2.0 * nu));
  return lame;
}

double strain_energy_density(const Mat2 &F, const LameParams &lame) {
  const double J = F.determinant();
  if (J <= 0.0) return std::numeric_limits<double>::infinity();
  const double I1 = F.squaredNorm(); // tr(F^T F)
  const double lnJ = std::log(J);
  return 0.5 * lame.mu * (I1 - 2.0 - 2.0 * lnJ) + 0.5 * lame.lambda * lnJ * lnJ;
}

Mat2 first_piola(const Mat2 &F, const LameParams &lame) {
  const double J = F.determinant();
  const double lnJ = std::log(J);
  Mat2 FinvT;
  // Closed-form 2x2 inverse transpose scaled by 1/J.
  FinvT << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
  FinvT /= J;
  return lame.mu * (F - FinvT) + lame.lambda * lnJ * FinvT;
}

Tangent2 material_tangent(const Mat2 &F, const LameParams &lame) {
  const double J = F.determinant();
  const double lnJ = std::log(J);
  Mat2 FinvT;
  FinvT << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
  FinvT /= J;

  // A[(a,i),(b,j)] = mu delta_ab delta_ij
  //                + (mu - lambda lnJ) FinvT(a,j) FinvT(b,i)
  //                + lambda FinvT(a,i) FinvT(b,j)
  Tangent2 A;
  const double c1 = lame.mu - lame.lambda * lnJ;
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a)
      for (int j = 0; j < 2; ++j)
        for (int b = 0; b < 2; ++b) {
          double v = c1 * FinvT(a, j) * FinvT(b, i) +
                     lame.lambda * FinvT(a, i) * FinvT(b, j);
          if (a == b && i == j) v += lame.mu;
          A(a + 2 * i, b + 2 * j) = v;
        }
  return A;
}

} // namespace sims
