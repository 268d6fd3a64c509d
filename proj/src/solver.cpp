#include "sims/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/IterativeSolvers>

#include "sims/errors.hpp"

namespace sims {

namespace {

// Solve H x = rhs with the configured backend.  Direct Cholesky-type
// factorization for moderate systems, restarted GMRES with an incomplete-LU
// preconditioner for large ones.
Eigen::VectorXd solve_linear(const Eigen::SparseMatrix<double> &H,
                             const Eigen::VectorXd &rhs, const NewtonOptions &opt,
                             bool &ok) {
  const bool direct = opt.linear == LinearSolverKind::Direct ||
                      (opt.linear == LinearSolverKind::Auto &&
                       H.rows() < opt.direct_dof_limit);
  ok = true;
  if (direct) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
    if (ldlt.info() == Eigen::Success) {
      Eigen::VectorXd x = ldlt.solve(rhs);
      if (ldlt.info() == Eigen::Success)
        return x;
    }
    ok = false;
    return Eigen::VectorXd::Zero(rhs.size());
  }
  Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> gmres;
  gmres.set_restart(opt.gmres_restart);
  gmres.setTolerance(opt.gmres_tol);
  gmres.setMaxIterations(20 * opt.gmres_restart);
  gmres.compute(H);
  if (gmres.info() != Eigen::Success) {
    ok = false;
    return Eigen::VectorXd::Zero(rhs.size());
  }
  Eigen::VectorXd x = gmres.solve(rhs);
  if (gmres.info() != Eigen::Success)
    ok = false;
  return x;
}

// Escape a stationary saddle: when the gradient (and with it the Newton
// step) vanishes at a snap-through instability, the energy can still be
// lowered along the tangent's most negative curvature direction.  Power
// iteration on (sigma I - H) extracts that direction deterministically,
// then a plain bisecting search picks a step that strictly lowers the
// energy.  Returns false when the tangent has no negative curvature.
bool negative_curvature_escape(const FemModel &model, Eigen::VectorXd &q,
                               double d, double &energy,
                               const Eigen::SparseMatrix<double> &H) {
  const int n = static_cast<int>(H.rows());
  if (n == 0)
    return false;
  double sigma = 0.0; // Gershgorin bound on the largest eigenvalue
  for (int k = 0; k < H.outerSize(); ++k) {
    double row = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, k); it; ++it)
      row += std::abs(it.value());
    sigma = std::max(sigma, row);
  }
  if (sigma <= 0.0)
    return false;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  v.normalize();
  for (int it = 0; it < 120; ++it) {
    v = sigma * v - H * v;
    const double nrm = v.norm();
    if (nrm == 0.0)
      return false;
    v /= nrm;
  }
  const double curvature = v.dot(H * v);
  if (curvature >= 0.0)
    return false;
  for (double a = 1.0; a > 1e-10; a *= 0.5) {
    for (double s : {1.0, -1.0}) {
      const double e_trial = model.energy(q + (s * a) * v, d);
      if (std::isfinite(e_trial) && e_trial < energy) {
        q += (s * a) * v;
        energy = e_trial;
        return true;
      }
    }
  }
  return false;
}

} // namespace

Eigen::VectorXd solve_linear_system(const Eigen::SparseMatrix<double> &H,
                                    const Eigen::VectorXd &rhs,
                                    const NewtonOptions &opt) {
  bool ok = true;
  Eigen::VectorXd x = solve_linear(H, rhs, opt, ok);
  if (!ok)
    throw SolveError("linear system solve failed");
  return x;
}

NewtonReport newton_solve(const FemModel &model, Eigen::VectorXd &q, double d,
                          const NewtonOptions &opt) {
  NewtonReport rep;
  Eigen::VectorXd g;
  double reaction = 0.0;
  double energy = model.gradient(q, d, g, &reaction);
  const double tol = std::max(opt.rel_tol * g.norm(), opt.abs_tol);

  for (int it = 0; it <= opt.max_iterations; ++it) {
    rep.residual = g.norm();
    if (rep.residual <= tol) {
      rep.converged = true;
      rep.iterations = it;
      rep.energy = energy;
      rep.reaction_N = reaction;
      return rep;
    }
    if (it == opt.max_iterations)
      break;

    Eigen::SparseMatrix<double> H = model.hessian(q, d);

    // Newton direction; shift the tangent towards the identity until the
    // factorization succeeds and the step descends (snap-through passes
    // through indefinite regions where raw Newton would ascend).
    double max_diag = 0.0;
    for (int i = 0; i < H.rows(); ++i)
      max_diag = std::max(max_diag, std::abs(H.coeff(i, i)));
    double shift = 0.0;
    Eigen::VectorXd step;
    for (int attempt = 0; attempt < 12; ++attempt) {
      bool ok = true;
      if (shift > 0.0) {
        Eigen::SparseMatrix<double> Hs = H;
        for (int i = 0; i < Hs.rows(); ++i)
          Hs.coeffRef(i, i) += shift;
        step = solve_linear(Hs, -g, opt, ok);
      } else {
        step = solve_linear(H, -g, opt, ok);
      }
      if (ok && g.dot(step) < 0.0)
        break;
      shift = (shift == 0.0) ? 1e-8 * std::max(max_diag, 1.0) : 100.0 * shift;
      step.setZero();
    }
    if (step.squaredNorm() == 0.0) {
      if (!negative_curvature_escape(model, q, d, energy, H))
        throw SolveError("linear solver failed to produce a descent direction");
      energy = model.gradient(q, d, g, &reaction);
      continue;
    }

    const double slope = g.dot(step);
    // The energy is a sum over thousands of quadrature points, so differences
    // below a few thousand ulps of its magnitude are evaluation roundoff.  A
    // predicted decrease under that floor cannot be verified by comparing
    // energies at all; in that endgame regime take the undamped step whenever
    // it reduces the gradient norm, which the assembled gradient still
    // resolves (plain locally quadratic Newton).
    const double resolution = 4096.0 * std::numeric_limits<double>::epsilon() *
                              std::max(std::abs(energy), 1.0);
    bool accepted = false;
    if (-slope > resolution) {
      // Armijo backtracking on the energy.
      double alpha = 1.0;
      for (int bt = 0; bt < opt.max_backtracks; ++bt) {
        const Eigen::VectorXd trial = q + alpha * step;
        const double e_trial = model.energy(trial, d);
        if (std::isfinite(e_trial) &&
            e_trial <= energy + opt.armijo_c * alpha * slope) {
          q = trial;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
    } else {
      const Eigen::VectorXd trial = q + step;
      Eigen::VectorXd g_trial;
      const double e_trial = model.gradient(trial, d, g_trial, nullptr);
      if (std::isfinite(e_trial) && g_trial.norm() < g.norm()) {
        q = trial;
        accepted = true;
      }
    }
    if (!accepted) {
      // At a snap the warm start sits on a freshly destabilized branch: the
      // gradient step stalls even though the state is not a minimum.  Slide
      // off along negative curvature and keep minimizing.
      if (!negative_curvature_escape(model, q, d, energy, H))
        throw SolveError("line search failed to reduce the energy");
    }
    energy = model.gradient(q, d, g, &reaction);
  }

  rep.converged = false;
  rep.iterations = opt.max_iterations;
  rep.energy = energy;
  rep.reaction_N = reaction;
  return rep;
}

SweepResult load_sweep(const FemModel &model, const SweepOptions &opt) {
  if (!(opt.d_max > 0.0))
    throw ConfigError("sweep: d_max must be positive");

  double ref = opt.step_ref;
  if (ref <= 0.0) {
    // Default reference: the mean interior height of the structure's cells.
    double acc = 0.0;
    for (const auto &c : model.patch_set().cells)
      acc += c.h3;
    ref = acc / static_cast<double>(model.patch_set().cells.size());
  }
  const double h_min = ref * opt.min_frac;
  const double h_max = ref * opt.max_frac;
  double h = std::clamp(ref * opt.initial_frac, h_min, h_max);

  std::vector<double> landings(opt.landings.data(),
                               opt.landings.data() + opt.landings.size());
  std::sort(landings.begin(), landings.end());
  landings.erase(std::unique(landings.begin(), landings.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 landings.end());
  for (double l : landings)
    if (l < 0.0 || l > opt.d_max + 1e-12)
      throw ConfigError("sweep: landing displacement outside [0, d_max]");

  SweepResult res;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(model.n_dofs());

  // The undeformed configuration is an exact equilibrium at d = 0.
  {
    DeformationState s0;
    s0.d = 0.0;
    s0.q = q;
    Eigen::VectorXd g;
    s0.energy = model.gradient(q, 0.0, g, &s0.reaction_N);
    res.states.push_back(std::move(s0));
  }

  std::size_t next_landing = 0;
  while (next_landing < landings.size() && landings[next_landing] <= 1e-12)
    ++next_landing; // d = 0 already recorded

  double d = 0.0;
  int fast_streak = 0;
  while (d < opt.d_max - 1e-12) {
    double target = std::min(d + h, opt.d_max);
    if (next_landing < landings.size())
      target = std::min(target, landings[next_landing]);

    Eigen::VectorXd q_trial = q;
    bool ok = false;
    NewtonReport rep;
    try {
      rep = newton_solve(model, q_trial, target, opt.newton);
      ok = rep.converged;
    } catch (const SolveError &) {
      ok = false;
    }

    if (!ok) {
      ++res.rejected_increments;
      fast_streak = 0;
      if (!opt.adaptive || h <= h_min * (1.0 + 1e-9))
        throw SolveError("load sweep failed to converge near d = " +
                         std::to_string(target) +
                         " cm with the minimum increment");
      h = std::max(h * 0.5, h_min);
      continue;
    }

    q = q_trial;
    d = target;
    res.total_newton_iterations += rep.iterations;

    DeformationState st;
    st.d = d;
    st.q = q;
    st.energy = rep.energy;
    st.reaction_N = rep.reaction_N;
    st.newton_iterations = rep.iterations;
    res.states.push_back(std::move(st));

    if (next_landing < landings.size() &&
        std::abs(d - landings[next_landing]) <= 1e-12)
      ++next_landing;

    if (opt.adaptive) {
      if (rep.iterations <= opt.fast_iterations) {
        if (++fast_streak >= 2) {
          h = std::min(h * opt.growth, h_max);
          fast_streak = 0;
        }
      } else {
        fast_streak = 0;
      }
    }
  }

  const int n = static_cast<int>(res.states.size());
  res.curve.d.resize(n);
  res.curve.energy.resize(n);
  res.curve.force.resize(n);
  for (int i = 0; i < n; ++i) {
    res.curve.d[i] = res.states[i].d;
    res.curve.energy[i] = res.states[i].energy;
    res.curve.force[i] = res.states[i].reaction_N;
  }
  return res;
}

std::vector<const DeformationState *> states_at(const SweepResult &sweep,
                                                const Eigen::VectorXd &landings) {
  std::vector<const DeformationState *> out;
  out.reserve(landings.size());
  for (Eigen::Index i = 0; i < landings.size(); ++i) {
    const DeformationState *hit = nullptr;
    for (const auto &s : sweep.states)
      if (std::abs(s.d - landings[i]) <= 1e-9) {
        hit = &s;
        break;
      }
    if (!hit)
      throw SolveError("requested displacement sample missing from the sweep");
    out.push_back(hit);
  }
  return out;
}

} // namespace sims
