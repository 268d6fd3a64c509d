#include "sims/adjoint.hpp"

#include "sims/errors.hpp"

namespace sims {

Eigen::VectorXd adjoint_solve(const FemModel &model, const DeformationState &state,
                              const Eigen::VectorXd &rhs, const NewtonOptions &opt) {
  if (rhs.size() != model.n_dofs())
    throw SolveError("adjoint right-hand side has the wrong size");
  const Eigen::SparseMatrix<double> H = model.hessian(state.q, state.d);
  return solve_linear_system(H, rhs, opt);
}

Eigen::VectorXd design_gradient(const FemModel &model, const DesignParams &design,
                                const std::vector<const DeformationState *> &states,
                                const LossGradient &loss,
                                const Eigen::MatrixXd &geometry_J,
                                const NewtonOptions &opt) {
  const int ns = static_cast<int>(states.size());
  if (loss.dL_dSE.size() != ns)
    throw SolveError("loss gradient count does not match the sampled states");
  if (!loss.dL_du.empty() && static_cast<int>(loss.dL_du.size()) != ns)
    throw SolveError("displacement loss terms do not match the sampled states");

  Eigen::VectorXd partial_p = Eigen::VectorXd::Zero(geometry_J.rows());
  double dE_term = 0.0;
  const double E = design.E;

  for (int k = 0; k < ns; ++k) {
    const DeformationState &s = *states[k];
    const double w = loss.dL_dSE[k];

    Eigen::VectorXd lambda;
    bool has_lambda = false;
    if (!loss.dL_du.empty() && loss.dL_du[k].size() > 0 &&
        loss.dL_du[k].lpNorm<Eigen::Infinity>() > 0.0) {
      lambda = adjoint_solve(model, s, loss.dL_du[k], opt);
      has_lambda = true;
    }
    if (w == 0.0 && !has_lambda)
      continue;

    partial_p += model.reference_partials(s.q, s.d, w,
                                          has_lambda ? &lambda : nullptr);

    if (design.optimize_E) {
      // Both Lame parameters scale linearly with E, so the energy and its
      // dof gradient are homogeneous of degree one in E.
      dE_term += w * s.energy / E;
      if (has_lambda) {
        Eigen::VectorXd g;
        model.gradient(s.q, s.d, g);
        dE_term -= lambda.dot(g) / E;
      }
    }
  }

  Eigen::VectorXd grad = geometry_J.transpose() * partial_p;
  if (design.optimize_E)
    grad[grad.size() - 1] += dE_term;
  return grad;
}

} // namespace sims
