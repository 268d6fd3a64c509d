#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sims/assembly.hpp"

namespace sims {

enum class LinearSolverKind { Auto, Direct, Iterative };

struct NewtonOptions {
  double rel_tol = 1e-8;   // on the residual norm at the increment start
  double abs_tol = 1e-10;
  int max_iterations = 50;
  int max_backtracks = 30;
  double armijo_c = 1e-4;
  LinearSolverKind linear = LinearSolverKind::Auto;
  int direct_dof_limit = 2000; // Auto: direct factorization below, GMRES above
  int gmres_restart = 50;
  double gmres_tol = 1e-10;
};

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  double energy = 0.0;
  double reaction_N = 0.0;
};

// Minimize the total strain energy over the free dofs at fixed compression d
// by damped Newton iteration with Armijo backtracking; indefinite tangents
// are shifted until the step is a descent direction.  q is both the initial
// guess and the result.
NewtonReport newton_solve(const FemModel &model, Eigen::VectorXd &q, double d,
                          const NewtonOptions &opt = {});

// Solve the symmetric system H x = rhs with the configured backend (direct
// factorization or preconditioned GMRES).  Throws SolveError on breakdown.
Eigen::VectorXd solve_linear_system(const Eigen::SparseMatrix<double> &H,
                                    const Eigen::VectorXd &rhs,
                                    const NewtonOptions &opt = {});

// One converged equilibrium along the compression sweep.
struct DeformationState {
  double d = 0.0;          // prescribed platen displacement (cm)
  Eigen::VectorXd q;       // free dofs
  double energy = 0.0;     // strain energy (J)
  double reaction_N = 0.0; // platen reaction (N)
  int newton_iterations = 0;
};

// Sampled strain energy / reaction curves over the compression sweep.
struct EnergyCurve {
  Eigen::VectorXd d;       // displacement samples (cm)
  Eigen::VectorXd energy;  // strain energy (J)
  Eigen::VectorXd force;   // reaction (N)
};

struct SweepOptions {
  double d_max = 0.0;               // sweep end (cm), required
  Eigen::VectorXd landings;         // displacements that must be sampled
  double step_ref = 0.0;            // reference length; default mean(h3)
  double initial_frac = 1.0 / 40;   // first increment = step_ref * frac
  double min_frac = 1.0 / 400;
  double max_frac = 1.0 / 10;
  double growth = 1.5;              // step growth after repeated fast solves
  int fast_iterations = 5;
  bool adaptive = true;
  NewtonOptions newton;
};

struct SweepResult {
  std::vector<DeformationState> states; // includes d = 0
  EnergyCurve curve;
  int total_newton_iterations = 0;
  int rejected_increments = 0;
};

// March the prescribed compression from 0 to d_max with adaptive increments
// (halving on failure, growing after consecutive fast converges), landing
// exactly on every requested displacement.  Throws SolveError when the
// increment underflows without converging.
SweepResult load_sweep(const FemModel &model, const SweepOptions &opt);

// Convenience: states interpolated out of a finished sweep at the landing
// displacements (exact matches; landing samples are guaranteed).
std::vector<const DeformationState *> states_at(const SweepResult &sweep,
                                                const Eigen::VectorXd &landings);

} // namespace sims
