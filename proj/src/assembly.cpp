#include "sims/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "sims/errors.hpp"

namespace sims {

namespace {

// Expand global dofs to one patch's local control-point displacements using
// the precomputed scatter codes.  Prescribed vertical dofs read -d; lambda
// expansions pass d = 0 so constrained components read zero.
void expand_local(const std::vector<int> &code, const Eigen::VectorXd &q, double d,
                  Eigen::MatrixX2d &u) {
  const int npp = static_cast<int>(code.size()) / 2;
  u.resize(npp, 2);
  for (int pt = 0; pt < npp; ++pt)
    for (int c = 0; c < 2; ++c) {
      const int k = code[pt * 2 + c];
      u(pt, c) = k >= 0 ? q[k] : (k == -2 ? -d : 0.0);
    }
}

} // namespace

PatchSet without_rigidity(PatchSet ps) {
  for (auto &p : ps.patches)
    p.rigid = false;
  return ps;
}

FemModel::FemModel(const PatchSet &ps, const DofMap &dm, LameParams mat,
                   int quad_per_span)
    : ps_(ps), dm_(dm), mat_(mat),
      quad_per_span_(quad_per_span > 0 ? quad_per_span : ps.degree + 1) {
  build_patch_data(ps_);
  build_pattern();
}

void FemModel::build_patch_data(const PatchSet &ps) {
  const GaussRule gr = gauss_rule(quad_per_span_);
  const int nsp = ps.kv.num_spans();
  const int nb = (ps.degree + 1) * (ps.degree + 1);
  const int nq_span = quad_per_span_ * quad_per_span_;
  const Eigen::VectorXd unit_w = Eigen::VectorXd::Ones(ps.res * ps.res);

  for (int p = 0; p < ps.num_patches(); ++p) {
    if (ps.patches[p].rigid)
      continue;
    PatchData pd;
    pd.patch = p;
    pd.qp_per_span = nq_span;
    pd.spans.reserve(nsp * nsp);
    const int nq_total = nsp * nsp * nq_span;
    pd.wJ.resize(nq_total);
    pd.gradX.resize(nq_total, nb * 2);

    const auto &net = ps.patches[p].net;
    int qp = 0;
    for (int sv = 0; sv < nsp; ++sv)
      for (int su = 0; su < nsp; ++su) {
        SpanBlock blk;
        blk.qp_begin = qp;
        const double u0 = ps.kv.knots[ps.degree + su];
        const double u1 = ps.kv.knots[ps.degree + su + 1];
        const double v0 = ps.kv.knots[ps.degree + sv];
        const double v1 = ps.kv.knots[ps.degree + sv + 1];
        const double jac_param = 0.25 * (u1 - u0) * (v1 - v0);

        bool pts_set = false;
        for (int qv = 0; qv < quad_per_span_; ++qv)
          for (int qu = 0; qu < quad_per_span_; ++qu, ++qp) {
            const double xi = 0.5 * (u0 + u1) + 0.5 * (u1 - u0) * gr.points[qu];
            const double eta = 0.5 * (v0 + v1) + 0.5 * (v1 - v0) * gr.points[qv];
            const NurbsEval2D ev = nurbs_basis_2d(ps.kv, ps.kv, unit_w, xi, eta);
            if (!pts_set) {
              blk.pts.resize(nb);
              for (int b = 0; b < nb; ++b) {
                const int i = ev.first_u + b % (ps.degree + 1);
                const int j = ev.first_v + b / (ps.degree + 1);
                blk.pts[b] = ps.point_index(i, j);
              }
              pts_set = true;
            }
            Eigen::Matrix2d Jg = Eigen::Matrix2d::Zero();
            for (int b = 0; b < nb; ++b) {
              const int pt = blk.pts[b];
              Jg(0, 0) += net(pt, 0) * ev.du[b];
              Jg(0, 1) += net(pt, 0) * ev.dv[b];
              Jg(1, 0) += net(pt, 1) * ev.du[b];
              Jg(1, 1) += net(pt, 1) * ev.dv[b];
            }
            const double detJ = Jg.determinant();
            if (detJ <= 0.0)
              throw ConstructionError("non-positive geometry Jacobian during assembly setup");
            const Eigen::Matrix2d Jinv = Jg.inverse();
            pd.wJ[qp] = gr.weights[qu] * gr.weights[qv] * jac_param * detJ;
            for (int b = 0; b < nb; ++b) {
              // dN/dX = Jg^{-T} * dN/dxi
              pd.gradX(qp, 2 * b + 0) = Jinv(0, 0) * ev.du[b] + Jinv(1, 0) * ev.dv[b];
              pd.gradX(qp, 2 * b + 1) = Jinv(0, 1) * ev.du[b] + Jinv(1, 1) * ev.dv[b];
            }
          }
        pd.spans.push_back(std::move(blk));
      }

    pd.code.resize(ps.points_per_patch() * 2);
    for (int pt = 0; pt < ps.points_per_patch(); ++pt) {
      const auto &g = dm_.groups[dm_.group_of[p][pt]];
      const auto *bc = g.rigid >= 0 ? dm_.rigid_groups[g.rigid].bc.data() : g.bc.data();
      const auto *dof = g.rigid >= 0 ? dm_.rigid_groups[g.rigid].dof.data() : g.dof.data();
      for (int c = 0; c < 2; ++c) {
        switch (bc[c]) {
        case CompBC::Free: pd.code[pt * 2 + c] = dof[c]; break;
        case CompBC::Zero: pd.code[pt * 2 + c] = -1; break;
        case CompBC::Top: pd.code[pt * 2 + c] = -2; break;
        }
      }
    }
    pdata_.push_back(std::move(pd));
  }
}

void FemModel::build_pattern() {
  // Two dofs interact iff some deformable patch touches both.
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto &pd : pdata_) {
    std::vector<int> dofs;
    for (int k : pd.code)
      if (k >= 0)
        dofs.push_back(k);
    std::sort(dofs.begin(), dofs.end());
    dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
    for (int a : dofs)
      for (int b : dofs)
        trips.emplace_back(a, b, 1.0);
  }
  pattern_.resize(dm_.n_dofs, dm_.n_dofs);
  pattern_.setFromTriplets(trips.begin(), trips.end());
  pattern_.makeCompressed();

  // Value slot of every (local point-comp pair) for fast scatter.
  slots_.resize(pdata_.size());
  const auto *outer = pattern_.outerIndexPtr();
  const auto *inner = pattern_.innerIndexPtr();
  auto find_slot = [&](int row, int col) {
    const auto *beg = inner + outer[col];
    const auto *end = inner + outer[col + 1];
    const auto *it = std::lower_bound(beg, end, row);
    return static_cast<int>(it - inner);
  };
  for (std::size_t pi = 0; pi < pdata_.size(); ++pi) {
    const auto &code = pdata_[pi].code;
    const int nloc = static_cast<int>(code.size());
    slots_[pi].assign(static_cast<std::size_t>(nloc) * nloc, -1);
    for (int a = 0; a < nloc; ++a) {
      if (code[a] < 0)
        continue;
      for (int b = 0; b < nloc; ++b) {
        if (code[b] < 0)
          continue;
        slots_[pi][static_cast<std::size_t>(a) * nloc + b] = find_slot(code[a], code[b]);
      }
    }
  }
}

template <typename Visitor>
void FemModel::for_each_patch(Visitor &&vis) const {
  const int np = static_cast<int>(pdata_.size());
  if (threads_ <= 1 || np <= 1) {
    for (int i = 0; i < np; ++i)
      vis(i);
    return;
  }
  const int nt = std::min(threads_, np);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (int i = t; i < np; i += nt)
        vis(i);
    });
  for (auto &th : pool)
    th.join();
}

double FemModel::energy(const Eigen::VectorXd &q, double d) const {
  std::vector<double> psi(pdata_.size(), 0.0);
  std::vector<char> bad(pdata_.size(), 0);
  for_each_patch([&](int pi) {
    const PatchData &pd = pdata_[pi];
    Eigen::MatrixX2d u;
    expand_local(pd.code, q, d, u);
    double acc = 0.0;
    for (const auto &blk : pd.spans) {
      const int nb = static_cast<int>(blk.pts.size());
      for (int k = 0; k < pd.qp_per_span; ++k) {
        const int qp = blk.qp_begin + k;
        Mat2 F = Mat2::Identity();
        for (int b = 0; b < nb; ++b) {
          const int pt = blk.pts[b];
          const double gx = pd.gradX(qp, 2 * b), gy = pd.gradX(qp, 2 * b + 1);
          F(0, 0) += u(pt, 0) * gx;
          F(0, 1) += u(pt, 0) * gy;
          F(1, 0) += u(pt, 1) * gx;
          F(1, 1) += u(pt, 1) * gy;
        }
        if (is_inverted(F)) {
          bad[pi] = 1;
          return;
        }
        acc += pd.wJ[qp] * strain_energy_density(F, mat_);
      }
    }
    psi[pi] = acc;
  });
  for (char b : bad)
    if (b)
      return std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (double v : psi) // fixed patch order => bit-reproducible
    total += v;
  return total;
}

double FemModel::gradient(const Eigen::VectorXd &q, double d, Eigen::VectorXd &g,
                          double *reaction_N) const {
  const int npp = ps_.points_per_patch();
  std::vector<Eigen::MatrixX2d> glocal(pdata_.size());
  std::vector<double> psi(pdata_.size(), 0.0);
  std::vector<char> bad(pdata_.size(), 0);

  for_each_patch([&](int pi) {
    const PatchData &pd = pdata_[pi];
    Eigen::MatrixX2d u;
    expand_local(pd.code, q, d, u);
    Eigen::MatrixX2d &gl = glocal[pi];
    gl = Eigen::MatrixX2d::Zero(npp, 2);
    double acc = 0.0;
    for (const auto &blk : pd.spans) {
      const int nb = static_cast<int>(blk.pts.size());
      for (int k = 0; k < pd.qp_per_span; ++k) {
        const int qp = blk.qp_begin + k;
        Mat2 F = Mat2::Identity();
        for (int b = 0; b < nb; ++b) {
          const int pt = blk.pts[b];
          const double gx = pd.gradX(qp, 2 * b), gy = pd.gradX(qp, 2 * b + 1);
          F(0, 0) += u(pt, 0) * gx;
          F(0, 1) += u(pt, 0) * gy;
          F(1, 0) += u(pt, 1) * gx;
          F(1, 1) += u(pt, 1) * gy;
        }
        if (is_inverted(F)) {
          bad[pi] = 1;
          return;
        }
        const double wJ = pd.wJ[qp];
        acc += wJ * strain_energy_density(F, mat_);
        const Mat2 P = first_piola(F, mat_);
        for (int b = 0; b < nb; ++b) {
          const int pt = blk.pts[b];
          const double gx = pd.gradX(qp, 2 * b), gy = pd.gradX(qp, 2 * b + 1);
          gl(pt, 0) += wJ * (P(0, 0) * gx + P(0, 1) * gy);
          gl(pt, 1) += wJ * (P(1, 0) * gx + P(1, 1) * gy);
        }
      }
    }
    psi[pi] = acc;
  });

  for (char b : bad)
    if (b)
      throw SolveError("gradient requested at an inverted configuration");

  g = Eigen::VectorXd::Zero(dm_.n_dofs);
  double top_pull = 0.0;
  for (std::size_t pi = 0; pi < pdata_.size(); ++pi) {
    const auto &code = pdata_[pi].code;
    const auto &gl = glocal[pi];
    for (int pt = 0; pt < npp; ++pt)
      for (int c = 0; c < 2; ++c) {
        const int k = code[pt * 2 + c];
        if (k >= 0)
          g[k] += gl(pt, c);
        else if (k == -2)
          top_pull += gl(pt, c);
      }
  }
  if (reaction_N)
    *reaction_N = -100.0 * top_pull; // dPsi/dd in J/cm = 100 N
  double total = 0.0;
  for (double v : psi)
    total += v;
  return total;
}

Eigen::SparseMatrix<double> FemModel::hessian(const Eigen::VectorXd &q, double d) const {
  Eigen::SparseMatrix<double> H = pattern_;
  double *val = H.valuePtr();
  std::fill(val, val + H.nonZeros(), 0.0);

  const int npp = ps_.points_per_patch();
  const int nloc = npp * 2;
  std::vector<Eigen::MatrixXd> Kloc(pdata_.size());
  std::vector<char> bad(pdata_.size(), 0);

  for_each_patch([&](int pi) {
    const PatchData &pd = pdata_[pi];
    Eigen::MatrixX2d u;
    expand_local(pd.code, q, d, u);
    Eigen::MatrixXd &K = Kloc[pi];
    K = Eigen::MatrixXd::Zero(nloc, nloc);
    for (const auto &blk : pd.spans) {
      const int nb = static_cast<int>(blk.pts.size());
      for (int k = 0; k < pd.qp_per_span; ++k) {
        const int qp = blk.qp_begin + k;
        Mat2 F = Mat2::Identity();
        for (int b = 0; b < nb; ++b) {
          const int pt = blk.pts[b];
          const double gx = pd.gradX(qp, 2 * b), gy = pd.gradX(qp, 2 * b + 1);
          F(0, 0) += u(pt, 0) * gx;
          F(0, 1) += u(pt, 0) * gy;
          F(1, 0) += u(pt, 1) * gx;
          F(1, 1) += u(pt, 1) * gy;
        }
        if (is_inverted(F)) {
          bad[pi] = 1;
          return;
        }
        const double wJ = pd.wJ[qp];
        const Tangent2 A = material_tangent(F, mat_);
        // y[b](c, (c',i')) = sum_j A(c'+2i', c+2j) gX_b[j]  -- then the
        // element block K[(a,c'),(b,c)] = wJ * gX_a . y  by symmetry of A.
        for (int b = 0; b < nb; ++b) {
          const int ptb = blk.pts[b];
          const double bx = pd.gradX(qp, 2 * b), by = pd.gradX(qp, 2 * b + 1);
          for (int c = 0; c < 2; ++c) {
            // column vector A : (e_c ox gX_b), laid out (comp, deriv)
            double y00 = A(0 + 0, c + 0) * bx + A(0 + 0, c + 2) * by;
            double y01 = A(0 + 2, c + 0) * bx + A(0 + 2, c + 2) * by;
            double y10 = A(1 + 0, c + 0) * bx + A(1 + 0, c + 2) * by;
            double y11 = A(1 + 2, c + 0) * bx + A(1 + 2, c + 2) * by;
            for (int a = 0; a < nb; ++a) {
              const int pta = blk.pts[a];
              const double ax = pd.gradX(qp, 2 * a), ay = pd.gradX(qp, 2 * a + 1);
              K(pta * 2 + 0, ptb * 2 + c) += wJ * (y00 * ax + y01 * ay);
              K(pta * 2 + 1, ptb * 2 + c) += wJ * (y10 * ax + y11 * ay);
            }
          }
        }
      }
    }
  });

  for (char b : bad)
    if (b)
      throw SolveError("hessian requested at an inverted configuration");

  for (std::size_t pi = 0; pi < pdata_.size(); ++pi) {
    const auto &slot = slots_[pi];
    const auto &K = Kloc[pi];
    for (int a = 0; a < nloc; ++a)
      for (int b = 0; b < nloc; ++b) {
        const int s = slot[static_cast<std::size_t>(a) * nloc + b];
        if (s >= 0)
          val[s] += K(a, b);
      }
  }
  return H;
}

Eigen::VectorXd FemModel::hessian_times(const Eigen::VectorXd &q, double d,
                                        const Eigen::VectorXd &v) const {
  const int npp = ps_.points_per_patch();
  std::vector<Eigen::MatrixX2d> out_local(pdata_.size());
  std::vector<char> bad(pdata_.size(), 0);

  for_each_patch([&](int pi) {
    const PatchData &pd = pdata_[pi];
    Eigen::MatrixX2d u, w;
    expand_local(pd.code, q, d, u);
    expand_local(pd.code, v, 0.0, w); // probe direction: zero at constraints
    Eigen::MatrixX2d &ol = out_local[pi];
    ol = Eigen::MatrixX2d::Zero(npp, 2);
    for (const auto &blk : pd.spans) {
      const int nb = static_cast<int>(blk.pts.size());
      for (int k = 0; k < pd.qp_per_span; ++k) {
        const int qp = blk.qp_begin + k;
        Mat2 F = Mat2::Identity(), dF = Mat2::Zero();
        for (int b = 0; b < nb; ++b) {
          const int pt = blk.pts[b];
          const double gx = pd.gradX(qp, 2 * b), gy = pd.gradX(qp, 2 * b + 1);
          F(0, 0) += u(pt, 0) * gx;
          F(0, 1) += u(pt, 0) * gy;
          F(1, 0) += u(pt, 1) * gx;
          F(1, 1) += u(pt, 1) * gy;
          dF(0, 0) += w(pt, 0) * gx;
          dF(0, 1) += w(pt, 0) * gy;
          dF(1, 0) += w(pt, 1) * gx;
          dF(1, 1) += w(pt, 1) * gy;
        }
        if (is_inverted(F)) {
          bad[pi] = 1;
          return;
        }
        const double wJ = pd.wJ[qp];
        const Tangent2 A = material_tangent(F, mat_);
        Mat2 dP;
        for (int a = 0; a < 2; ++a)
          for (int i = 0; i < 2; ++i)
            dP(a, i) = A(a + 2 * i, 0 + 0) * dF(0, 0) + A(a + 2 * i, 1 + 0) * dF(1, 0) +
                       A(a + 2 * i, 0 + 2) * dF(0, 1) + A(a + 2 * i, 1 + 2) * dF(1, 1);
        for (int b = 0; b < nb; ++b) {
          const int pt = blk.pts[b];
          const double gx = pd.gradX(qp, 2 * b), gy = pd.gradX(qp, 2 * b + 1);
          ol(pt, 0) += wJ * (dP(0, 0) * gx + dP(0, 1) * gy);
          ol(pt, 1) += wJ * (dP(1, 0) * gx + dP(1, 1) * gy);
        }
      }
    }
  });

  for (char b : bad)
    if (b)
      throw SolveError("hessian product requested at an inverted configuration");

  Eigen::VectorXd out = Eigen::VectorXd::Zero(dm_.n_dofs);
  for (std::size_t pi = 0; pi < pdata_.size(); ++pi) {
    const auto &code = pdata_[pi].code;
    const auto &ol = out_local[pi];
    for (int pt = 0; pt < npp; ++pt)
      for (int c = 0; c < 2; ++c) {
        const int k = code[pt * 2 + c];
        if (k >= 0)
          out[k] += ol(pt, c);
      }
  }
  return out;
}

const std::vector<int> &FemModel::coloring() const {
  if (!colors_.empty())
    return colors_;
  const int n = dm_.n_dofs;
  colors_.assign(n, -1);
  const auto *outer = pattern_.outerIndexPtr();
  const auto *inner = pattern_.innerIndexPtr();
  std::vector<int> mark(n == 0 ? 1 : n, -1);
  int max_color = -1;
  for (int v = 0; v < n; ++v) {
    // Forbid the colors of every column sharing a row with v (distance-2
    // neighbours), so same-colored columns are structurally orthogonal.
    for (int e = outer[v]; e < outer[v + 1]; ++e) {
      const int r = inner[e];
      for (int e2 = outer[r]; e2 < outer[r + 1]; ++e2) {
        const int u = inner[e2];
        if (colors_[u] >= 0)
          mark[colors_[u]] = v;
      }
    }
    int c = 0;
    while (c < n && mark[c] == v)
      ++c;
    colors_[v] = c;
    max_color = std::max(max_color, c);
  }
  n_colors_ = max_color + 1;
  return colors_;
}

int FemModel::num_colors() const {
  coloring();
  return n_colors_;
}

Eigen::SparseMatrix<double> FemModel::hessian_by_coloring(const Eigen::VectorXd &q,
                                                          double d) const {
  const auto &col = coloring();
  Eigen::SparseMatrix<double> H = pattern_;
  std::fill(H.valuePtr(), H.valuePtr() + H.nonZeros(), 0.0);
  const auto *outer = H.outerIndexPtr();
  const auto *inner = H.innerIndexPtr();
  for (int c = 0; c < n_colors_; ++c) {
    Eigen::VectorXd probe = Eigen::VectorXd::Zero(dm_.n_dofs);
    for (int j = 0; j < dm_.n_dofs; ++j)
      if (col[j] == c)
        probe[j] = 1.0;
    const Eigen::VectorXd w = hessian_times(q, d, probe);
    // Each row meets at most one column of this color, so the product
    // isolates every H(i, j) with color(j) == c.
    for (int j = 0; j < dm_.n_dofs; ++j) {
      if (col[j] != c)
        continue;
      for (int e = outer[j]; e < outer[j + 1]; ++e)
        H.valuePtr()[e] = w[inner[e]];
    }
  }
  return H;
}

Eigen::VectorXd FemModel::reference_partials(const Eigen::VectorXd &q, double d,
                                             double energy_weight,
                                             const Eigen::VectorXd *lambda) const {
  const int npp = ps_.points_per_patch();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ps_.num_patches() * npp * 2);

  std::vector<Eigen::MatrixX2d> partials(pdata_.size());
  std::vector<char> bad(pdata_.size(), 0);
  for_each_patch([&](int pi) {
    const PatchData &pd = pdata_[pi];
    Eigen::MatrixX2d u, lam;
    expand_local(pd.code, q, d, u);
    if (lambda)
      expand_local(pd.code, *lambda, 0.0, lam);
    Eigen::MatrixX2d &pl = partials[pi];
    pl = Eigen::MatrixX2d::Zero(npp, 2);

    for (const auto &blk : pd.spans) {
      const int nb = static_cast<int>(blk.pts.size());
      for (int k = 0; k < pd.qp_per_span; ++k) {
        const int qp = blk.qp_begin + k;
        Mat2 F = Mat2::Identity();
        for (int b = 0; b < nb; ++b) {
          const int pt = blk.pts[b];
          const double gx = pd.gradX(qp, 2 * b), gy = pd.gradX(qp, 2 * b + 1);
          F(0, 0) += u(pt, 0) * gx;
          F(0, 1) += u(pt, 0) * gy;
          F(1, 0) += u(pt, 1) * gx;
          F(1, 1) += u(pt, 1) * gy;
        }
        if (is_inverted(F)) {
          bad[pi] = 1;
          return;
        }
        const double wJ = pd.wJ[qp];
        const double W = strain_energy_density(F, mat_);
        const Mat2 P = first_piola(F, mat_);
        const Mat2 Fm = F - Mat2::Identity();

        // d(energy)/d(reference point m) = wJ * M * gradX_m with
        // M = W I - (F - I)^T P: the pushed-forward Eshelby-type term that
        // accounts for both the domain change and the induced change of F.
        Mat2 M = energy_weight * (W * Mat2::Identity() - Fm.transpose() * P);

        if (lambda) {
          // Subtract d(lambda . grad)/d(reference): with Lx the physical
          // gradient of the lambda field,
          //   d(lambda.g) = wJ * [(P:Lx) I - Lx^T P - (F-I)^T (A:Lx)] gradX_m.
          Mat2 Lx = Mat2::Zero();
          for (int b = 0; b < nb; ++b) {
            const int pt = blk.pts[b];
            const double gx = pd.gradX(qp, 2 * b), gy = pd.gradX(qp, 2 * b + 1);
            Lx(0, 0) += lam(pt, 0) * gx;
            Lx(0, 1) += lam(pt, 0) * gy;
            Lx(1, 0) += lam(pt, 1) * gx;
            Lx(1, 1) += lam(pt, 1) * gy;
          }
          const Tangent2 A = material_tangent(F, mat_);
          Mat2 S;
          for (int a = 0; a < 2; ++a)
            for (int i = 0; i < 2; ++i)
              S(a, i) = A(a + 2 * i, 0) * Lx(0, 0) + A(a + 2 * i, 1) * Lx(1, 0) +
                        A(a + 2 * i, 2) * Lx(0, 1) + A(a + 2 * i, 3) * Lx(1, 1);
          const double PLx = (P.array() * Lx.array()).sum();
          M -= PLx * Mat2::Identity() - Lx.transpose() * P - Fm.transpose() * S;
        }

        for (int b = 0; b < nb; ++b) {
          const int pt = blk.pts[b];
          const double gx = pd.gradX(qp, 2 * b), gy = pd.gradX(qp, 2 * b + 1);
          pl(pt, 0) += wJ * (M(0, 0) * gx + M(0, 1) * gy);
          pl(pt, 1) += wJ * (M(1, 0) * gx + M(1, 1) * gy);
        }
      }
    }
  });

  for (char b : bad)
    if (b)
      throw SolveError("design partials requested at an inverted configuration");

  for (std::size_t pi = 0; pi < pdata_.size(); ++pi) {
    const int p = pdata_[pi].patch;
    for (int pt = 0; pt < npp; ++pt) {
      out[(p * npp + pt) * 2 + 0] = partials[pi](pt, 0);
      out[(p * npp + pt) * 2 + 1] = partials[pi](pt, 1);
    }
  }
  return out;
}

} // namespace sims
