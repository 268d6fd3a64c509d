#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sims/geometry.hpp"
#include "sims/material.hpp"

namespace sims {

// Finite-element view of a structure: quadrature data, dof scatter tables
// and assembly routines for the total strain energy and its derivatives.
// Rigid patches carry no strain energy and are skipped entirely; their
// influence enters through the dof map (shared points follow the body).
//
// Units: lengths in cm, stiffness in MPa, so energies come out in joule
// (1 MPa * cm^3 = 1 J) with the unit out-of-plane thickness of 1 cm.
// Reported reaction forces are in newton (1 MPa * cm^2 = 100 N).
class FemModel {
public:
  // quad_per_span defaults to degree + 1 points per direction per span.
  FemModel(const PatchSet &ps, const DofMap &dm, LameParams mat,
           int quad_per_span = 0);

  int n_dofs() const { return dm_.n_dofs; }
  const PatchSet &patch_set() const { return ps_; }
  const DofMap &dof_map() const { return dm_; }
  const LameParams &material() const { return mat_; }

  // Worker threads used for the element loops (results are bit-identical
  // for any count: per-patch buffers are reduced in fixed patch order).
  void set_threads(int n) { threads_ = n < 1 ? 1 : n; }

  // Total strain energy at dofs q and prescribed compression d.
  // Returns +infinity when any quadrature point is inverted.
  double energy(const Eigen::VectorXd &q, double d) const;

  // Energy and gradient; optionally also the platen reaction force in N
  // (positive = structure pushes back against the compression).
  double gradient(const Eigen::VectorXd &q, double d, Eigen::VectorXd &g,
                  double *reaction_N = nullptr) const;

  // Analytic tangent stiffness on the cached sparsity pattern.
  Eigen::SparseMatrix<double> hessian(const Eigen::VectorXd &q, double d) const;

  // Exact Hessian-vector product without forming the matrix.
  Eigen::VectorXd hessian_times(const Eigen::VectorXd &q, double d,
                                const Eigen::VectorXd &v) const;

  // Recover the full Hessian from hessian_times probes using the coloring;
  // agrees with hessian() up to roundoff and validates both paths.
  Eigen::SparseMatrix<double> hessian_by_coloring(const Eigen::VectorXd &q,
                                                  double d) const;

  const Eigen::SparseMatrix<double> &sparsity() const { return pattern_; }
  const std::vector<int> &coloring() const;
  int num_colors() const;

  // Derivative of [energy_weight * energy - lambda . grad] with respect to
  // every reference control-net coordinate, rows matching
  // geometry_jacobian(): patch-major, point-major, x/y fastest.  lambda may
  // be null (pure energy derivative).  Rigid patches contribute zeros.
  Eigen::VectorXd reference_partials(const Eigen::VectorXd &q, double d,
                                     double energy_weight,
                                     const Eigen::VectorXd *lambda) const;

private:
  struct SpanBlock {
    std::vector<int> pts; // (degree+1)^2 local point ids, u fastest
    int qp_begin = 0;
  };
  struct PatchData {
    int patch = 0;
    std::vector<SpanBlock> spans;
    int qp_per_span = 0;
    Eigen::VectorXd wJ;       // quadrature weight * |J_geometry| per qp
    Eigen::MatrixXd gradX;    // 2*(deg+1)^2 rows? stored (nq) x (2*nb)
    std::vector<int> code;    // 2 per local point: dof id, -1 zero, -2 top
  };

  void build_patch_data(const PatchSet &ps);
  void build_pattern();

  template <typename Visitor> void for_each_patch(Visitor &&vis) const;

  PatchSet ps_;
  DofMap dm_;
  LameParams mat_;
  int quad_per_span_ = 4;
  int threads_ = 1;
  std::vector<PatchData> pdata_;           // deformable patches only
  Eigen::SparseMatrix<double> pattern_;    // compressed, values unused
  std::vector<std::vector<int>> slots_;    // per pdata: local pair -> value slot
  mutable std::vector<int> colors_;        // lazy distance-2 coloring
  mutable int n_colors_ = 0;
};

// Copy of a patch set with every rigidity flag cleared (used to compare the
// reduced model against a fully flexible one).
PatchSet without_rigidity(PatchSet ps);

} // namespace sims
