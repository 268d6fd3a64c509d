#include "sims/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "sims/dual.hpp"
#include "sims/errors.hpp"

namespace sims {

namespace {

// ---------------------------------------------------------------------------
// Templated net construction.  The same code runs on double (geometry) and
// on Dual (geometry sensitivities), so both always agree.

template <typename T>
struct NetT {
  std::vector<T> x, y; // res*res entries, u fastest
  explicit NetT(int n = 0) : x(n * n), y(n * n) {}
};

template <typename T>
struct CellScalars {
  T L, t, h1, h2, h3, t_beam;
};

// Shared double-precision spline machinery for one resolution/degree pair.
struct NetTools {
  Eigen::VectorXd grev;   // Greville abscissae in [0,1]
  Eigen::MatrixXd interp; // inverse of the Greville collocation matrix

  NetTools(const KnotVector &kv) {
    grev = greville_abscissae(kv);
    Eigen::MatrixXd coll = greville_collocation_matrix(kv);
    interp = coll.inverse();
    // A clamped basis interpolates its end samples exactly; make the
    // numerical inverse honour that so patch corners land bitwise on the
    // analytic corner coordinates.
    const int n = static_cast<int>(interp.rows());
    interp.row(0).setZero();
    interp(0, 0) = 1.0;
    interp.row(n - 1).setZero();
    interp(n - 1, n - 1) = 1.0;
  }
};

template <typename T>
NetT<T> rect_net(const NetTools &nt, T x0, T y0, T w, T h) {
  const int n = static_cast<int>(nt.grev.size());
  NetT<T> net(n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      net.x[i + j * n] = x0 + nt.grev[i] * w;
      net.y[i + j * n] = y0 + nt.grev[j] * h;
    }
  return net;
}

// Ruled net between a bottom point row and a top point row (both length n):
// straight vertical-ish fibers, Greville-spaced in the v direction.
template <typename T>
NetT<T> ruled_net(const NetTools &nt, const std::vector<T> &bx, const std::vector<T> &by,
                  const std::vector<T> &tx, const std::vector<T> &ty) {
  const int n = static_cast<int>(nt.grev.size());
  NetT<T> net(n);
  for (int j = 0; j < n; ++j) {
    const double s = nt.grev[j];
    for (int i = 0; i < n; ++i) {
      net.x[i + j * n] = bx[i] * (1.0 - s) + tx[i] * s;
      net.y[i + j * n] = by[i] * (1.0 - s) + ty[i] * s;
    }
  }
  return net;
}

// A sample of the beam centerline: position plus unit normal.
template <typename T>
struct BeamStation {
  T x, y, nx, ny;
};

// One cell's 18 nets in canonical order; see CellPatchIds.
template <typename T>
std::vector<NetT<T>> build_cell_nets(const NetTools &nt, const CellScalars<T> &c, T base) {
  using std::numbers::pi;
  using std::cos, std::sin, std::sqrt; // Dual overloads found via ADL
  const int n = static_cast<int>(nt.grev.size());

  const T two_t = 2.0 * c.t;
  const T half_L = 0.5 * c.L;
  const T m1 = half_L - 0.5 * c.t;   // beam split left of center
  const T m2 = half_L + 0.5 * c.t;   // beam split right of center
  const T x_root_r = c.L - two_t;
  const T span = c.L - 4.0 * c.t;
  const T amp = 0.5 * (c.h2 - c.h1);
  const T omega = (2.0 * pi) / span;

  const T y_floor = base;
  const T y_int = base + c.t;             // interior floor level
  const T y_root = y_int + c.h1;          // beam centerline at the roots
  const T y_top = base + c.t + c.h3;      // cell top (apex block tops)
  const T half_tb = 0.5 * c.t_beam;

  // Wall top: tall enough to clear the beam root band, and at least up to
  // the beam apex height when that is higher (the usual case).
  const T wall_top_h = (value_of(c.h2) > value_of(c.h1 + c.t_beam))
                           ? c.h2
                           : c.h1 + c.t_beam;
  const T y_wall_top = y_int + wall_top_h;
  const T y_band_lo = y_root - half_tb;
  const T y_band_hi = y_root + half_tb;

  std::vector<NetT<T>> nets;
  nets.reserve(18);

  // --- floor strip (6 pieces, split to match wall / beam / apex x-lines)
  nets.push_back(rect_net<T>(nt, T(0.0), y_floor, two_t, c.t));
  nets.push_back(rect_net<T>(nt, two_t, y_floor, m1 - two_t, c.t));
  nets.push_back(rect_net<T>(nt, m1, y_floor, half_L - m1, c.t));
  nets.push_back(rect_net<T>(nt, half_L, y_floor, m2 - half_L, c.t));
  nets.push_back(rect_net<T>(nt, m2, y_floor, x_root_r - m2, c.t));
  nets.push_back(rect_net<T>(nt, x_root_r, y_floor, c.L - x_root_r, c.t));

  // --- left wall column (A below the root band, B the band, C above)
  nets.push_back(rect_net<T>(nt, T(0.0), y_int, two_t, c.h1 - half_tb));
  nets.push_back(rect_net<T>(nt, T(0.0), y_band_lo, two_t, c.t_beam));
  nets.push_back(rect_net<T>(nt, T(0.0), y_band_hi, two_t, y_wall_top - y_band_hi));

  // --- right wall column
  nets.push_back(rect_net<T>(nt, x_root_r, y_int, two_t, c.h1 - half_tb));
  nets.push_back(rect_net<T>(nt, x_root_r, y_band_lo, two_t, c.t_beam));
  nets.push_back(rect_net<T>(nt, x_root_r, y_band_hi, two_t, y_wall_top - y_band_hi));

  // --- beam: four serial patches on a shared station grid so that serial
  // interfaces are sampled (and hence interpolated) bitwise identically.
  const std::array<T, 5> xb = {two_t, m1, half_L, m2, x_root_r};
  const int seg = n - 1;
  std::vector<BeamStation<T>> st(4 * seg + 1);
  for (int s = 0; s < static_cast<int>(st.size()); ++s) {
    T x;
    if (s % seg == 0) {
      x = xb[s / seg];
    } else {
      const int k = s / seg;
      x = xb[k] + nt.grev[s - k * seg] * (xb[k + 1] - xb[k]);
    }
    const T arc = omega * (x - two_t);
    const T w0 = amp * (1.0 - cos(arc));
    const T w0p = amp * omega * sin(arc);
    const T inv_len = 1.0 / sqrt(1.0 + w0p * w0p);
    st[s] = BeamStation<T>{x, y_root + w0, -w0p * inv_len, inv_len};
  }
  for (int k = 0; k < 4; ++k) {
    NetT<T> net(n);
    std::vector<T> dx(n), dy(n);
    for (int j = 0; j < n; ++j) {
      const double tau = nt.grev[j] - 0.5;
      for (int i = 0; i < n; ++i) {
        const BeamStation<T> &s = st[k * seg + i];
        dx[i] = s.x + (tau * c.t_beam) * s.nx;
        dy[i] = s.y + (tau * c.t_beam) * s.ny;
      }
      // Fit one control row through the offset samples (fixed collocation
      // inverse, so this is a plain linear map and stays differentiable).
      for (int i = 0; i < n; ++i) {
        T cx(0.0), cy(0.0);
        for (int q = 0; q < n; ++q) {
          cx = cx + nt.interp(i, q) * dx[q];
          cy = cy + nt.interp(i, q) * dy[q];
        }
        net.x[i + j * n] = cx;
        net.y[i + j * n] = cy;
      }
    }
    nets.push_back(std::move(net));
  }

  // --- apex blocks: ruled between the beam-top surface rows of the two
  // central beam patches and the flat cell top.
  for (int a = 0; a < 2; ++a) {
    const NetT<T> &bn = nets[12 + 1 + a]; // beam patch 2 or 3
    std::vector<T> bx(n), by(n), tx(n), ty(n);
    const T xa0 = (a == 0) ? m1 : half_L;
    const T xa1 = (a == 0) ? half_L : m2;
    for (int i = 0; i < n; ++i) {
      bx[i] = bn.x[i + (n - 1) * n];
      by[i] = bn.y[i + (n - 1) * n];
      tx[i] = xa0 + nt.grev[i] * (xa1 - xa0);
      ty[i] = y_top;
    }
    nets.push_back(ruled_net<T>(nt, bx, by, tx, ty));
  }

  return nets;
}

template <typename T>
std::vector<NetT<T>> build_structure_nets(const NetTools &nt,
                                          const std::vector<CellScalars<T>> &cells) {
  std::vector<NetT<T>> nets;
  T base(0.0);
  for (const auto &c : cells) {
    auto row = build_cell_nets<T>(nt, c, base);
    for (auto &net : row)
      nets.push_back(std::move(net));
    base = base + (c.t + c.h3);
  }
  return nets;
}

template <typename T>
std::vector<CellScalars<T>> cells_from_design(const DesignParams &d) {
  std::vector<CellScalars<T>> out(d.n_rows);
  for (int r = 0; r < d.n_rows; ++r) {
    const CellGeometry c = d.cell(r);
    out[r] = CellScalars<T>{T(c.L), T(c.t), T(c.h1), T(c.h2), T(c.h3), T(c.t_beam)};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Static per-cell metadata: names, rigid flags, edge tags, adjacency.

constexpr int kFloor = 0, kWallL = 6, kWallR = 9, kBeam = 12, kApex = 16;
constexpr int kPatchesPerCell = 18;

const char *patch_basename(int idx) {
  static const char *names[kPatchesPerCell] = {
      "floor.corner_l", "floor.bar_l", "floor.center_l", "floor.center_r",
      "floor.bar_r",    "floor.corner_r",
      "wall_l.below",   "wall_l.band", "wall_l.above",
      "wall_r.below",   "wall_r.band", "wall_r.above",
      "beam.1",         "beam.2",      "beam.3",         "beam.4",
      "apex.l",         "apex.r"};
  return names[idx];
}

bool patch_rigid(int idx) {
  // 9 rigid pieces per cell: the floor strip, both below-root wall pieces
  // and the left above-root wall piece.  The root bands, the beam, the apex
  // blocks and the right above-root piece stay flexible.
  switch (idx) {
  case kFloor + 0: case kFloor + 1: case kFloor + 2:
  case kFloor + 3: case kFloor + 4: case kFloor + 5:
  case kWallL + 0: case kWallR + 0:
  case kWallL + 2:
    return true;
  default:
    return false;
  }
}

struct EdgeRef {
  int patch; // cell-local index
  PatchEdge edge;
};
struct Adjacency {
  EdgeRef a, b; // b's edge is overwritten with a's points when stitching
};

// The 19 conforming interfaces inside one cell.
std::vector<Adjacency> cell_adjacencies() {
  std::vector<Adjacency> adj;
  auto add = [&](int pa, PatchEdge ea, int pb, PatchEdge eb) {
    adj.push_back({{pa, ea}, {pb, eb}});
  };
  for (int k = 0; k < 5; ++k)
    add(kFloor + k, UMax, kFloor + k + 1, UMin);
  add(kFloor + 0, VMax, kWallL + 0, VMin);
  add(kFloor + 5, VMax, kWallR + 0, VMin);
  add(kWallL + 0, VMax, kWallL + 1, VMin);
  add(kWallL + 1, VMax, kWallL + 2, VMin);
  add(kWallR + 0, VMax, kWallR + 1, VMin);
  add(kWallR + 1, VMax, kWallR + 2, VMin);
  add(kWallL + 1, UMax, kBeam + 0, UMin); // left root band -> beam
  add(kBeam + 3, UMax, kWallR + 1, UMin); // beam -> right root band
  for (int k = 0; k < 3; ++k)
    add(kBeam + k, UMax, kBeam + k + 1, UMin);
  add(kBeam + 1, VMax, kApex + 0, VMin);
  add(kBeam + 2, VMax, kApex + 1, VMin);
  add(kApex + 0, UMax, kApex + 1, UMin);
  return adj;
}

std::vector<int> edge_point_ids(int res, PatchEdge e) {
  std::vector<int> ids(res);
  for (int k = 0; k < res; ++k) {
    switch (e) {
    case UMin: ids[k] = 0 + k * res; break;
    case UMax: ids[k] = (res - 1) + k * res; break;
    case VMin: ids[k] = k; break;
    case VMax: ids[k] = k + (res - 1) * res; break;
    }
  }
  return ids;
}

// Identify the k-th point of edge a with the k-th point of edge b for every
// declared interface, then give each identified cluster one representative
// coordinate.  Pairwise copying would be order-sensitive at junctions where
// three or more patches meet (a root-band corner sits on the wall column and
// on the beam), and a one-ulp disagreement there disconnects the patches in
// the dof map, which groups points by exact bit pattern.
template <typename T>
void stitch(std::vector<NetT<T>> &nets, int res, const std::vector<Adjacency> &adj,
            double scale) {
  const int pts = res * res;
  std::vector<int> parent(nets.size() * pts);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int s) {
    while (parent[s] != s) {
      parent[s] = parent[parent[s]];
      s = parent[s];
    }
    return s;
  };
  for (const auto &ad : adj) {
    const auto ia = edge_point_ids(res, ad.a.edge);
    const auto ib = edge_point_ids(res, ad.b.edge);
    for (int k = 0; k < res; ++k) {
      const double dx = value_of(nets[ad.a.patch].x[ia[k]]) -
                        value_of(nets[ad.b.patch].x[ib[k]]);
      const double dy = value_of(nets[ad.a.patch].y[ia[k]]) -
                        value_of(nets[ad.b.patch].y[ib[k]]);
      if (std::abs(dx) > 1e-9 * scale || std::abs(dy) > 1e-9 * scale)
        throw ConstructionError("patch interfaces failed to line up during construction");
      const int ra = find(ad.a.patch * pts + ia[k]);
      const int rb = find(ad.b.patch * pts + ib[k]);
      if (ra != rb)
        parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  // Roots keep their own coordinates, so each cluster inherits the value of
  // its lowest (patch, point) slot no matter how the interfaces were listed.
  for (int s = 0; s < static_cast<int>(parent.size()); ++s) {
    const int r = find(s);
    if (r == s)
      continue;
    nets[s / pts].x[s % pts] = nets[r / pts].x[r % pts];
    nets[s / pts].y[s % pts] = nets[r / pts].y[r % pts];
  }
}

std::vector<Adjacency> structure_adjacencies(int n_rows) {
  std::vector<Adjacency> adj;
  const auto cell = cell_adjacencies();
  for (int r = 0; r < n_rows; ++r) {
    const int off = r * kPatchesPerCell;
    for (auto a : cell) {
      a.a.patch += off;
      a.b.patch += off;
      adj.push_back(a);
    }
    if (r + 1 < n_rows) {
      // Apex tops of this cell carry the floor centre pieces of the next.
      adj.push_back({{off + kApex + 0, VMax},
                     {off + kPatchesPerCell + kFloor + 2, VMin}});
      adj.push_back({{off + kApex + 1, VMax},
                     {off + kPatchesPerCell + kFloor + 3, VMin}});
    }
  }
  return adj;
}

// Positive-Jacobian sanity check at every quadrature point of every patch.
void validate_jacobians(const PatchSet &ps) {
  const GaussRule g1 = gauss_rule(ps.degree + 1);
  const int nsp = ps.kv.num_spans();
  const Eigen::VectorXd unit_w = Eigen::VectorXd::Ones(ps.res * ps.res);
  for (int p = 0; p < ps.num_patches(); ++p) {
    const auto &net = ps.patches[p].net;
    for (int su = 0; su < nsp; ++su)
      for (int sv = 0; sv < nsp; ++sv)
        for (int qu = 0; qu < ps.degree + 1; ++qu)
          for (int qv = 0; qv < ps.degree + 1; ++qv) {
            const double u0 = ps.kv.knots[ps.degree + su];
            const double u1 = ps.kv.knots[ps.degree + su + 1];
            const double v0 = ps.kv.knots[ps.degree + sv];
            const double v1 = ps.kv.knots[ps.degree + sv + 1];
            const double xi = 0.5 * (u0 + u1) + 0.5 * (u1 - u0) * g1.points[qu];
            const double eta = 0.5 * (v0 + v1) + 0.5 * (v1 - v0) * g1.points[qv];
            const NurbsEval2D ev = nurbs_basis_2d(ps.kv, ps.kv, unit_w, xi, eta);
            Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
            for (int b = 0; b < ev.value.size(); ++b) {
              const int i = ev.first_u + b % (ps.degree + 1);
              const int j = ev.first_v + b / (ps.degree + 1);
              const int pt = ps.point_index(i, j);
              J(0, 0) += net(pt, 0) * ev.du[b];
              J(0, 1) += net(pt, 0) * ev.dv[b];
              J(1, 0) += net(pt, 1) * ev.du[b];
              J(1, 1) += net(pt, 1) * ev.dv[b];
            }
            if (J.determinant() <= 0.0)
              throw ConstructionError("non-positive geometry Jacobian in patch " +
                                      ps.patches[p].name);
          }
  }
}

PatchSet finish_structure(const DesignParams &design, int res, int degree,
                          std::vector<NetT<double>> nets) {
  PatchSet ps;
  ps.kv = KnotVector::open_uniform(res, degree);
  ps.res = res;
  ps.degree = degree;
  ps.n_rows = design.n_rows;

  double base = 0.0, width = 0.0;
  for (int r = 0; r < design.n_rows; ++r) {
    const CellGeometry c = design.cell(r);
    ps.cells.push_back(c);
    ps.row_base.push_back(base);
    base += c.t + c.h3;
    width = std::max(width, c.L);
  }
  ps.total_height = base;
  ps.width = width;

  for (int r = 0; r < design.n_rows; ++r) {
    CellPatchIds ids{};
    for (int k = 0; k < kPatchesPerCell; ++k) {
      const int gid = r * kPatchesPerCell + k;
      Patch p;
      p.net.resize(res * res, 2);
      for (int q = 0; q < res * res; ++q) {
        p.net(q, 0) = nets[gid].x[q];
        p.net(q, 1) = nets[gid].y[q];
      }
      p.rigid = patch_rigid(k);
      p.row = r;
      p.name = "r" + std::to_string(r + 1) + "." + patch_basename(k);
      if (r == 0 && k >= kFloor && k < kFloor + 6)
        p.edge_bc[VMin] = EdgeBC::Fixed; // ground
      if (k == kFloor + 0 || k == kWallL + 0 || k == kWallL + 1 || k == kWallL + 2)
        p.edge_bc[UMin] = EdgeBC::SlideX; // guided left face
      if (k == kFloor + 5 || k == kWallR + 0 || k == kWallR + 1 || k == kWallR + 2)
        p.edge_bc[UMax] = EdgeBC::SlideX; // guided right face
      if (r == design.n_rows - 1 && (k == kApex + 0 || k == kApex + 1))
        p.edge_bc[VMax] = EdgeBC::Top; // loading platen
      ps.patches.push_back(std::move(p));

      if (k < 6) ids.floor[k] = gid;
      else if (k < 9) ids.wall_left[k - kWallL] = gid;
      else if (k < 12) ids.wall_right[k - kWallR] = gid;
      else if (k < 16) ids.beam[k - kBeam] = gid;
      else ids.apex[k - kApex] = gid;
    }
    ps.rows.push_back(ids);
  }

  validate_jacobians(ps);
  return ps;
}

} // namespace

std::vector<int> PatchSet::edge_points(PatchEdge e) const {
  return edge_point_ids(res, e);
}

PatchSet assemble_structure(const DesignParams &design, int res, int degree) {
  design.validate();
  if (res < degree + 1)
    throw ConfigError("resolution must provide at least degree+1 control points");

  const KnotVector kv = KnotVector::open_uniform(res, degree);
  const NetTools nt(kv);
  auto cells = cells_from_design<double>(design);
  auto nets = build_structure_nets<double>(nt, cells);
  stitch(nets, res, structure_adjacencies(design.n_rows), design.L);
  return finish_structure(design, res, degree, std::move(nets));
}

PatchSet build_unit_cell(const CellGeometry &cell, int res, int degree) {
  DesignParams d;
  d.mode = DesignParams::Mode::Identical;
  d.n_rows = 1;
  d.L = cell.L;
  d.t = cell.t;
  d.h1 = {cell.h1};
  d.h2 = {cell.h2};
  d.h3 = {cell.h3};
  d.t_beam = {cell.t_beam};
  return assemble_structure(d, res, degree);
}

PatchSet build_patch_strip(int n_patches, int res, int degree, bool fix_top,
                           int rigid_patch) {
  if (n_patches < 1 || res < degree + 1)
    throw ConfigError("invalid strip configuration");
  PatchSet ps;
  ps.kv = KnotVector::open_uniform(res, degree);
  ps.res = res;
  ps.degree = degree;
  ps.n_rows = 1;
  ps.width = n_patches;
  ps.total_height = 1.0;

  const NetTools nt(ps.kv);
  for (int k = 0; k < n_patches; ++k) {
    NetT<double> net =
        rect_net<double>(nt, static_cast<double>(k), 0.0, 1.0, 1.0);
    Patch p;
    p.net.resize(res * res, 2);
    for (int q = 0; q < res * res; ++q) {
      p.net(q, 0) = net.x[q];
      p.net(q, 1) = net.y[q];
    }
    p.rigid = (k == rigid_patch);
    p.name = "strip." + std::to_string(k + 1);
    if (fix_top)
      p.edge_bc[VMax] = EdgeBC::Fixed;
    ps.patches.push_back(std::move(p));
  }
  // Stitch serial interfaces (they already agree; this documents adjacency).
  std::vector<Adjacency> adj;
  for (int k = 0; k + 1 < n_patches; ++k)
    adj.push_back({{k, UMax}, {k + 1, UMin}});
  std::vector<NetT<double>> nets;
  for (auto &p : ps.patches) {
    NetT<double> n(res);
    for (int q = 0; q < res * res; ++q) {
      n.x[q] = p.net(q, 0);
      n.y[q] = p.net(q, 1);
    }
    nets.push_back(std::move(n));
  }
  stitch(nets, res, adj, 1.0);
  for (int k = 0; k < n_patches; ++k)
    for (int q = 0; q < res * res; ++q) {
      ps.patches[k].net(q, 0) = nets[k].x[q];
      ps.patches[k].net(q, 1) = nets[k].y[q];
    }
  return ps;
}

Eigen::MatrixXd geometry_jacobian(const DesignParams &design, int res, int degree) {
  design.validate();
  const KnotVector kv = KnotVector::open_uniform(res, degree);
  const NetTools nt(kv);
  const int npp = res * res;
  const int n_coords = design.n_rows * kPatchesPerCell * npp * 2;
  const int n_params = design.num_params();
  Eigen::MatrixXd J(n_coords, n_params);
  J.setZero();

  const Eigen::VectorXd theta = design.pack();
  const auto adj = structure_adjacencies(design.n_rows);

  for (int k = 0; k < n_params; ++k) {
    if (design.optimize_E && k == n_params - 1)
      continue; // stiffness does not move the geometry
    DesignParams d = design;
    // Seed one packed parameter with a unit derivative and rebuild.
    std::vector<Dual> packed(theta.size());
    for (int m = 0; m < theta.size(); ++m)
      packed[m] = Dual(theta[m], m == k ? 1.0 : 0.0);

    std::vector<CellScalars<Dual>> cells(d.n_rows);
    int pos = 0;
    auto next = [&]() { return packed[pos++]; };
    if (d.mode == DesignParams::Mode::Identical) {
      const Dual L = next(), t = next(), h1 = next(), h2 = next(), h3 = next();
      for (int r = 0; r < d.n_rows; ++r)
        cells[r] = CellScalars<Dual>{L, t, h1, h2, h3, Dual(0)};
      for (int r = 0; r < d.n_rows; ++r)
        cells[r].t_beam = next();
    } else {
      const Dual L = next(), t = next();
      for (int r = 0; r < d.n_rows; ++r) {
        const Dual h1 = next(), h2 = next(), h3 = next(), tb = next();
        cells[r] = CellScalars<Dual>{L, t, h1, h2, h3, tb};
      }
    }

    auto nets = build_structure_nets<Dual>(nt, cells);
    stitch(nets, res, adj, design.L);
    for (std::size_t g = 0; g < nets.size(); ++g) {
      const int row = static_cast<int>(g) * 2 * npp;
      for (int q = 0; q < npp; ++q) {
        J(row + 2 * q + 0, k) = nets[g].x[q].d;
        J(row + 2 * q + 1, k) = nets[g].y[q].d;
      }
    }
  }
  return J;
}

// ---------------------------------------------------------------------------
// DofMap

namespace {

struct CoordKey {
  std::int64_t x, y;
  bool operator==(const CoordKey &o) const { return x == o.x && y == o.y; }
};
struct CoordKeyHash {
  std::size_t operator()(const CoordKey &k) const {
    std::size_t h = std::hash<std::int64_t>()(k.x);
    h ^= std::hash<std::int64_t>()(k.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

// Exact bit-pattern key: grouping relies on stitched (bitwise equal) edges.
CoordKey key_of(double x, double y) {
  CoordKey k;
  static_assert(sizeof(double) == sizeof(std::int64_t));
  std::memcpy(&k.x, &x, sizeof(double));
  std::memcpy(&k.y, &y, sizeof(double));
  // Collapse -0.0 onto +0.0 so both spellings of zero coincide.
  if (x == 0.0) k.x = 0;
  if (y == 0.0) k.y = 0;
  return k;
}

int find_root(std::vector<int> &parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

} // namespace

int DofMap::num_free_point_groups() const {
  int n = 0;
  for (const auto &g : groups)
    if (g.rigid < 0 && (g.bc[0] == CompBC::Free || g.bc[1] == CompBC::Free))
      ++n;
  return n;
}

DofMap build_dof_map(const PatchSet &ps) {
  DofMap dm;
  const int npp = ps.points_per_patch();
  dm.group_of.assign(ps.num_patches(), std::vector<int>(npp, -1));

  // 1. Group coincident control points by exact coordinates.
  std::unordered_map<CoordKey, int, CoordKeyHash> lookup;
  for (int p = 0; p < ps.num_patches(); ++p)
    for (int q = 0; q < npp; ++q) {
      const CoordKey key = key_of(ps.patches[p].net(q, 0), ps.patches[p].net(q, 1));
      auto it = lookup.find(key);
      if (it == lookup.end()) {
        const int id = static_cast<int>(dm.groups.size());
        lookup.emplace(key, id);
        DofMap::Group g;
        g.rep_patch = p;
        g.rep_point = q;
        dm.groups.push_back(g);
        dm.group_of[p][q] = id;
      } else {
        dm.group_of[p][q] = it->second;
      }
    }

  // 2. Merge per-component boundary conditions from the edge tags.
  auto apply_bc = [&](DofMap::Group &g, EdgeBC bc) {
    auto raise = [](CompBC &c, CompBC v) {
      if (static_cast<int>(v) > static_cast<int>(c))
        c = v;
    };
    switch (bc) {
    case EdgeBC::Fixed:
      raise(g.bc[0], CompBC::Zero);
      raise(g.bc[1], CompBC::Zero);
      break;
    case EdgeBC::SlideX:
      raise(g.bc[0], CompBC::Zero);
      break;
    case EdgeBC::Top:
      raise(g.bc[0], CompBC::Zero);
      if (g.bc[1] == CompBC::Zero)
        throw ConstructionError("conflicting fixed/prescribed vertical constraints");
      g.bc[1] = CompBC::Top;
      break;
    case EdgeBC::None:
      break;
    }
  };
  for (int p = 0; p < ps.num_patches(); ++p)
    for (int e = 0; e < 4; ++e) {
      const EdgeBC bc = ps.patches[p].edge_bc[e];
      if (bc == EdgeBC::None)
        continue;
      for (int q : edge_point_ids(ps.res, static_cast<PatchEdge>(e)))
        apply_bc(dm.groups[dm.group_of[p][q]], bc);
    }

  // 3. Rigidity: connected rigid patches move as one translating body, and
  // every point they touch (including shared interface points) follows it.
  std::vector<int> parent(ps.num_patches());
  for (int p = 0; p < ps.num_patches(); ++p)
    parent[p] = p;
  {
    // Rigid patches sharing any point group belong to the same body.
    std::unordered_map<int, int> owner; // point group -> rigid patch
    for (int p = 0; p < ps.num_patches(); ++p) {
      if (!ps.patches[p].rigid)
        continue;
      for (int q = 0; q < npp; ++q) {
        const int g = dm.group_of[p][q];
        auto it = owner.find(g);
        if (it == owner.end())
          owner.emplace(g, p);
        else
          parent[find_root(parent, p)] = find_root(parent, it->second);
      }
    }
  }
  std::unordered_map<int, int> body_id; // union-find root -> rigid group id
  for (int p = 0; p < ps.num_patches(); ++p) {
    if (!ps.patches[p].rigid)
      continue;
    const int root = find_root(parent, p);
    auto it = body_id.find(root);
    int rid;
    if (it == body_id.end()) {
      rid = static_cast<int>(dm.rigid_groups.size());
      body_id.emplace(root, rid);
      dm.rigid_groups.emplace_back();
    } else {
      rid = it->second;
    }
    dm.rigid_groups[rid].patches.push_back(p);
    for (int q = 0; q < npp; ++q)
      dm.groups[dm.group_of[p][q]].rigid = rid;
  }
  // Rigid-group constraints: the union of all member-point constraints.
  for (auto &g : dm.groups) {
    if (g.rigid < 0)
      continue;
    auto &rg = dm.rigid_groups[g.rigid];
    for (int c = 0; c < 2; ++c) {
      if (g.bc[c] == CompBC::Top && rg.bc[c] == CompBC::Zero)
        throw ConstructionError("rigid body pinned to both ground and platen");
      if (static_cast<int>(g.bc[c]) > static_cast<int>(rg.bc[c]))
        rg.bc[c] = g.bc[c];
    }
  }

  // 4. Number the surviving dofs in deterministic discovery order.
  int next = 0;
  for (auto &rg : dm.rigid_groups)
    for (int c = 0; c < 2; ++c)
      if (rg.bc[c] == CompBC::Free)
        rg.dof[c] = next++;
  for (auto &g : dm.groups) {
    if (g.rigid >= 0)
      continue;
    for (int c = 0; c < 2; ++c)
      if (g.bc[c] == CompBC::Free)
        g.dof[c] = next++;
  }
  dm.n_dofs = next;
  return dm;
}

std::vector<Eigen::MatrixX2d> global_to_local(const PatchSet &ps, const DofMap &dm,
                                              const Eigen::VectorXd &q, double d) {
  if (q.size() != dm.n_dofs)
    throw ConstructionError("dof vector size mismatch");
  const int npp = ps.points_per_patch();
  std::vector<Eigen::MatrixX2d> local(ps.num_patches());
  for (int p = 0; p < ps.num_patches(); ++p) {
    local[p].resize(npp, 2);
    for (int pt = 0; pt < npp; ++pt) {
      const auto &g = dm.groups[dm.group_of[p][pt]];
      const auto *bc = g.rigid >= 0 ? dm.rigid_groups[g.rigid].bc.data() : g.bc.data();
      const auto *dof = g.rigid >= 0 ? dm.rigid_groups[g.rigid].dof.data() : g.dof.data();
      for (int c = 0; c < 2; ++c) {
        switch (bc[c]) {
        case CompBC::Free: local[p](pt, c) = q[dof[c]]; break;
        case CompBC::Zero: local[p](pt, c) = 0.0; break;
        case CompBC::Top: local[p](pt, c) = -d; break;
        }
      }
    }
  }
  return local;
}

Eigen::VectorXd local_to_global(const PatchSet &ps, const DofMap &dm,
                                const std::vector<Eigen::MatrixX2d> &local) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(dm.n_dofs);
  for (const auto &g : dm.groups) {
    const auto *bc = g.rigid >= 0 ? dm.rigid_groups[g.rigid].bc.data() : g.bc.data();
    const auto *dof = g.rigid >= 0 ? dm.rigid_groups[g.rigid].dof.data() : g.dof.data();
    for (int c = 0; c < 2; ++c)
      if (bc[c] == CompBC::Free)
        q[dof[c]] = local[g.rep_patch](g.rep_point, c);
  }
  (void)ps;
  return q;
}

} // namespace sims
