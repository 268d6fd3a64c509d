#include "sims/design_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "sims/errors.hpp"
#include "sims/geometry.hpp"

namespace sims {

double curve_loss(const Eigen::VectorXd &se, const CurveTarget &target,
                  Eigen::VectorXd *dL_dSE) {
  if (se.size() != target.energy.size())
    throw ConfigError("curve loss: sample count does not match the target");
  const Eigen::VectorXd diff = se - target.energy;
  const double loss = diff.norm();
  if (dL_dSE) {
    if (loss > 0.0)
      *dL_dSE = diff / loss;
    else
      *dL_dSE = Eigen::VectorXd::Zero(se.size());
  }
  return loss;
}

namespace {

// Templated core of the extrema loss so dual numbers can flow through the
// refinement arithmetic.  Topology (which samples are extrema, pairing with
// targets) is fixed by the plain values before differentiation.
template <typename T>
T extrema_loss_core(const Eigen::VectorXd &d, const std::vector<T> &se,
                    const ExtremaTarget &tg, LossBreakdown *breakdown) {
  const CurveExtremaT<T> ex = find_curve_extrema<T>(d, se);
  const BarrierSetT<T> bars = energy_barriers<T>(ex);

  const std::size_t n_min = std::min(ex.minima.size(), tg.minima_d.size());
  const std::size_t n_bar = std::min(bars.barrier.size(), tg.barriers_J.size());
  // Missing or surplus stable states pay the fixed penalty; barriers are
  // derived from the minima so they carry no count penalty of their own.
  const int mismatch =
      static_cast<int>(std::max(ex.minima.size(), tg.minima_d.size()) - n_min);

  T loss(tg.count_penalty * mismatch);
  if (breakdown) {
    breakdown->minima_err_cm.clear();
    breakdown->barrier_err_J.clear();
    breakdown->count_mismatch = mismatch;
  }
  for (std::size_t k = 0; k < n_min; ++k) {
    const T err = (ex.minima[k].d - tg.minima_d[k]) * (1.0 / tg.d_scale);
    loss += err * err;
    if (breakdown)
      breakdown->minima_err_cm.push_back(std::abs(value_of(ex.minima[k].d) - tg.minima_d[k]));
  }
  for (std::size_t k = 0; k < n_bar; ++k) {
    const T err = (bars.barrier[k] - tg.barriers_J[k]) * (1.0 / tg.b_scale);
    loss += err * err;
    if (breakdown)
      breakdown->barrier_err_J.push_back(std::abs(value_of(bars.barrier[k]) - tg.barriers_J[k]));
  }
  return loss;
}

} // namespace

double extrema_loss(const Eigen::VectorXd &d, const Eigen::VectorXd &se,
                    const ExtremaTarget &target, Eigen::VectorXd *dL_dSE,
                    LossBreakdown *breakdown) {
  std::vector<double> vals(se.data(), se.data() + se.size());
  const double loss = extrema_loss_core<double>(d, vals, target, breakdown);
  if (dL_dSE) {
    dL_dSE->resize(se.size());
    std::vector<Dual> dual(se.size());
    for (int k = 0; k < se.size(); ++k) {
      for (int m = 0; m < se.size(); ++m)
        dual[m] = Dual(se[m], m == k ? 1.0 : 0.0);
      (*dL_dSE)[k] = extrema_loss_core<Dual>(d, dual, target, nullptr).d;
    }
  }
  return loss;
}

Eigen::VectorXd project_box(const Eigen::VectorXd &theta, const DesignBounds &bounds) {
  if (theta.size() != bounds.lower.size() || theta.size() != bounds.upper.size())
    throw ConfigError("projection: bounds length does not match the design vector");
  return theta.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
}

namespace {

struct Evaluation {
  double loss = std::numeric_limits<double>::infinity();
  bool feasible = false;
  Eigen::VectorXd se;       // energies at the sample grid
  Eigen::VectorXd dL_dSE;
  EnergyCurve curve;        // restricted to the sample grid
  SweepResult sweep;
};

class Objective {
public:
  Objective(const DesignParams &proto, const DesignTarget &target,
            const OptimizeOptions &opt)
      : proto_(proto), target_(target), opt_(opt) {
    if (const auto *ct = std::get_if<CurveTarget>(&target_)) {
      if (ct->d.size() < 3)
        throw ConfigError("curve target: need at least three samples");
      for (int i = 1; i < ct->d.size(); ++i)
        if (!(ct->d[i] > ct->d[i - 1]))
          throw ConfigError("curve target: displacements must increase");
      grid_ = ct->d;
    } else {
      // Extrema targets are detected on the sweep's landing grid.
      if (opt_.sweep.landings.size() >= 3)
        grid_ = opt_.sweep.landings;
      else {
        const int n = 41;
        grid_.resize(n);
        for (int i = 0; i < n; ++i)
          grid_[i] = opt_.sweep.d_max * i / (n - 1.0);
      }
    }
  }

  const Eigen::VectorXd &grid() const { return grid_; }

  DesignParams design_for(const Eigen::VectorXd &theta) const {
    DesignParams d = proto_;
    d.unpack(theta);
    return d;
  }

  // Forward sweep + loss; infeasible evaluations (failed sweeps) report an
  // infinite loss so the line search backs away from them.
  Evaluation evaluate(const Eigen::VectorXd &theta, bool want_gradient) const {
    Evaluation ev;
    DesignParams design = design_for(theta);
    try {
      design.validate();
      const PatchSet ps = assemble_structure(design, opt_.resolution, opt_.degree);
      const DofMap dm = build_dof_map(ps);
      model_ = std::make_unique<FemModel>(ps, dm, lame_parameters(design.E, opt_.nu));
      model_->set_threads(opt_.threads);

      SweepOptions sw = opt_.sweep;
      sw.landings = grid_;
      sw.d_max = std::max(sw.d_max, grid_[grid_.size() - 1]);
      ev.sweep = load_sweep(*model_, sw);

      const auto states = states_at(ev.sweep, grid_);
      ev.se.resize(grid_.size());
      for (int k = 0; k < grid_.size(); ++k)
        ev.se[k] = states[k]->energy;
      ev.curve.d = grid_;
      ev.curve.energy = ev.se;
      ev.curve.force.resize(grid_.size());
      for (int k = 0; k < grid_.size(); ++k)
        ev.curve.force[k] = states[k]->reaction_N;

      if (const auto *ct = std::get_if<CurveTarget>(&target_))
        ev.loss = curve_loss(ev.se, *ct, want_gradient ? &ev.dL_dSE : nullptr);
      else
        ev.loss = extrema_loss(grid_, ev.se, std::get<ExtremaTarget>(target_),
                               want_gradient ? &ev.dL_dSE : nullptr, nullptr);
      ev.feasible = true;
    } catch (const SolveError &) {
      ev.feasible = false;
    } catch (const ConstructionError &) {
      ev.feasible = false;
    }
    return ev;
  }

  // Adjoint design gradient at an evaluated point.
  Eigen::VectorXd gradient(const Eigen::VectorXd &theta, const Evaluation &ev) const {
    const DesignParams design = design_for(theta);
    const auto states = states_at(ev.sweep, grid_);
    LossGradient lg;
    lg.dL_dSE = ev.dL_dSE;
    const Eigen::MatrixXd geoJ = geometry_jacobian(design, opt_.resolution, opt_.degree);
    return design_gradient(*model_, design, states, lg, geoJ, opt_.sweep.newton);
  }

private:
  DesignParams proto_;
  DesignTarget target_;
  OptimizeOptions opt_;
  Eigen::VectorXd grid_;
  mutable std::unique_ptr<FemModel> model_;
};

} // namespace

OptimizeResult optimize_design(const DesignParams &initial, const DesignBounds &bounds,
                               const DesignTarget &target, const OptimizeOptions &opt) {
  initial.validate();
  bounds.validate_against(initial);

  Objective obj(initial, target, opt);
  Eigen::VectorXd theta = project_box(initial.pack(), bounds);

  // Per-parameter scale for preconditioning and the step cap.
  Eigen::VectorXd scale(theta.size());
  for (int i = 0; i < theta.size(); ++i)
    scale[i] = std::max({std::abs(theta[i]),
                         0.5 * (bounds.upper[i] - bounds.lower[i]), 0.1});

  OptimizeResult res;
  res.design = obj.design_for(theta);

  Evaluation ev = obj.evaluate(theta, true);
  if (!ev.feasible)
    throw OptimizationError("initial design failed to simulate");

  auto record = [&](int it, double loss, double gnorm, double step, int active) {
    TraceRow row;
    row.iteration = it;
    row.loss = loss;
    row.grad_norm = gnorm;
    row.step = step;
    row.active_bounds = active;
    row.theta = theta;
    res.trace.push_back(std::move(row));
  };
  auto active_bounds = [&](const Eigen::VectorXd &th) {
    int n = 0;
    for (int i = 0; i < th.size(); ++i)
      if (th[i] <= bounds.lower[i] + 1e-14 || th[i] >= bounds.upper[i] - 1e-14)
        ++n;
    return n;
  };

  // Line-search warm start: remember the accepted step length (in units of
  // the per-parameter scale) so later iterations do not re-pay the halvings
  // that a cautious step already established.
  double frac = opt.step_fraction;

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (ev.loss <= opt.loss_tol) {
      res.converged = true;
      res.stop_reason = "loss tolerance reached";
      break;
    }

    const Eigen::VectorXd g = obj.gradient(theta, ev);
    const Eigen::VectorXd scaled = scale.cwiseProduct(g);
    const double gnorm = scaled.lpNorm<Eigen::Infinity>();
    record(it, ev.loss, gnorm, 0.0, active_bounds(theta));
    if (gnorm <= opt.grad_tol) {
      res.stop_reason = "scaled gradient below tolerance";
      break;
    }

    // Largest step moves no parameter by more than step_fraction * scale.
    const Eigen::VectorXd dir = -scale.cwiseProduct(scaled); // -scale^2 . g
    double t = std::min(opt.step_fraction, 4.0 * frac) / gnorm;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h) {
      const Eigen::VectorXd trial = project_box(theta + t * dir, bounds);
      if ((trial - theta).lpNorm<Eigen::Infinity>() == 0.0)
        break; // projection swallowed the whole step
      Evaluation trial_ev = obj.evaluate(trial, true);
      if (trial_ev.feasible && trial_ev.loss < ev.loss - 1e-15) {
        theta = trial;
        ev = std::move(trial_ev);
        res.trace.back().step = t;
        frac = t * gnorm;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      res.stop_reason = "no descent step found";
      break;
    }
  }
  if (it == opt.max_iterations)
    res.stop_reason = "iteration limit reached";
  if (ev.loss <= opt.loss_tol) {
    res.converged = true;
    res.stop_reason = "loss tolerance reached";
  }

  res.design = obj.design_for(theta);
  res.loss = ev.loss;
  res.iterations = it;
  res.curve = ev.curve;
  if (res.trace.empty() || res.trace.back().iteration != it)
    record(it, ev.loss, 0.0, 0.0, active_bounds(theta));
  return res;
}

OptimizeResult optimize_with_catalog(const DesignParams &initial,
                                     const DesignBounds &bounds,
                                     const DesignTarget &target,
                                     const std::vector<double> &catalog_E,
                                     const OptimizeOptions &opt,
                                     std::vector<OptimizeResult> *per_E) {
  if (catalog_E.empty())
    throw ConfigError("material catalog must not be empty");
  OptimizeResult best;
  bool have_best = false;
  for (double E : catalog_E) {
    DesignParams init = initial;
    init.E = E;
    OptimizeResult r = optimize_design(init, bounds, target, opt);
    if (per_E)
      per_E->push_back(r);
    if (!have_best || r.loss < best.loss) {
      best = std::move(r);
      have_best = true;
    }
  }
  return best;
}

} // namespace sims
