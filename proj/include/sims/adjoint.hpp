#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sims/solver.hpp"

namespace sims {

// Partial derivatives of a scalar objective with respect to the simulated
// quantities at the sampled increments.  dL_dSE must have one entry per
// state; dL_du is optional (empty, or one vector per state; zero-length
// entries mean "no displacement dependence at this increment").
struct LossGradient {
  Eigen::VectorXd dL_dSE;
  std::vector<Eigen::VectorXd> dL_du;
};

// Solve the adjoint system H(q) lambda = rhs at one converged state.  The
// tangent of a stable equilibrium is symmetric positive definite, so the
// same linear backends as the forward solve apply.
Eigen::VectorXd adjoint_solve(const FemModel &model, const DeformationState &state,
                              const Eigen::VectorXd &rhs,
                              const NewtonOptions &opt = {});

// Total derivative of the objective with respect to the packed design
// vector, accumulated over the sampled equilibrium states:
//
//   dL/dtheta = sum_k [ dL/dSE_k * dPsi/dtheta|_explicit
//                       - lambda_k^T dg/dtheta ] + dL/du_k path via lambda_k
//
// For objectives that depend on the states only through their strain
// energies, the equilibrium condition makes every adjoint vanish and the
// explicit term is the whole derivative; the lambda path activates when
// dL_du entries are present.  geometry_J is the control-net Jacobian from
// geometry_jacobian() for the same design.
Eigen::VectorXd design_gradient(const FemModel &model, const DesignParams &design,
                                const std::vector<const DeformationState *> &states,
                                const LossGradient &loss,
                                const Eigen::MatrixXd &geometry_J,
                                const NewtonOptions &opt = {});

} // namespace sims
