#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sims/adjoint.hpp"
#include "sims/analysis.hpp"
#include "sims/design.hpp"

namespace sims {

// Match the strain-energy curve sampled at fixed displacements.
struct CurveTarget {
  Eigen::VectorXd d;      // sample displacements (cm), strictly increasing
  Eigen::VectorXd energy; // target strain energy (J) at those samples
};

// Match stable-state locations and the energy barriers between them.
// Location and barrier errors are divided by the stated scales before
// squaring, so non-unit scales re-weight the two families of terms.
struct ExtremaTarget {
  std::vector<double> minima_d;   // includes the rest state at 0
  std::vector<double> barriers_J; // one per consecutive minima pair
  double d_scale = 1.0;           // cm per unit location error
  double b_scale = 1.0;           // J per unit barrier error
  double count_penalty = 10.0;    // per missing/extra stable state
};

using DesignTarget = std::variant<CurveTarget, ExtremaTarget>;

struct LossBreakdown {
  std::vector<double> minima_err_cm;  // |found - target| per stable state
  std::vector<double> barrier_err_J;  // |found - target| per barrier
  int count_mismatch = 0;
};

// Plain L2 distance between the sampled and target energies; the optional
// gradient receives dLoss/dSE_k.
double curve_loss(const Eigen::VectorXd &se, const CurveTarget &target,
                  Eigen::VectorXd *dL_dSE = nullptr);

// Scaled quadratic mismatch of refined minima locations and barriers plus a
// fixed penalty per count mismatch.  Differentiated by dual numbers through
// the same refinement arithmetic used for reporting.
double extrema_loss(const Eigen::VectorXd &d, const Eigen::VectorXd &se,
                    const ExtremaTarget &target, Eigen::VectorXd *dL_dSE = nullptr,
                    LossBreakdown *breakdown = nullptr);

// Componentwise projection onto the design box.
Eigen::VectorXd project_box(const Eigen::VectorXd &theta, const DesignBounds &bounds);

struct OptimizeOptions {
  int max_iterations = 300;
  double loss_tol = 0.01;
  double grad_tol = 1e-8;     // on the scaled gradient norm
  double step_fraction = 0.05; // largest relative parameter move per step
  int max_halvings = 10;
  int resolution = 7;
  int degree = 3;
  int threads = 1;
  double nu = 0.46;   // Poisson ratio of the printed material
  SweepOptions sweep; // d_max and (for extrema targets) the sample grid
};

struct TraceRow {
  int iteration = 0;
  double loss = 0.0;
  double grad_norm = 0.0; // scaled-gradient infinity norm
  double step = 0.0;      // accepted step scale (0 = rejected/stalled)
  int active_bounds = 0;
  Eigen::VectorXd theta;
};

struct OptimizeResult {
  DesignParams design;    // best design found
  double loss = 0.0;
  int iterations = 0;
  bool converged = false; // loss reached loss_tol
  std::string stop_reason;
  std::vector<TraceRow> trace;
  EnergyCurve curve;      // sweep of the best design on the sample grid
};

// Projected gradient descent over the packed design vector with adjoint
// gradients, per-parameter scaling and step halving on non-decrease.
OptimizeResult optimize_design(const DesignParams &initial, const DesignBounds &bounds,
                               const DesignTarget &target, const OptimizeOptions &opt);

// Run one optimization per catalog stiffness (E fixed within each run) and
// keep the best final loss.  per_E, when given, receives every run.
OptimizeResult optimize_with_catalog(const DesignParams &initial,
                                     const DesignBounds &bounds,
                                     const DesignTarget &target,
                                     const std::vector<double> &catalog_E,
                                     const OptimizeOptions &opt,
                                     std::vector<OptimizeResult> *per_E = nullptr);

} // namespace sims
