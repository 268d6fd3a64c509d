#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sims/design.hpp"
#include "sims/splines.hpp"

namespace sims {

// Per-edge boundary condition tag.  Fixed pins both components, SlideX pins
// only the horizontal component (guided edge), Top prescribes the loading:
// vertical = -d, horizontal = 0.
enum class EdgeBC : std::uint8_t { None, Fixed, SlideX, Top };

// Patch edge ids: u = first parametric direction (points ordered u-fastest).
enum PatchEdge { UMin = 0, UMax = 1, VMin = 2, VMax = 3 };

// One tensor-product spline patch with an (res x res) control net.  All
// patches of a structure share the same open-uniform knot vector in both
// directions and unit weights.
struct Patch {
  Eigen::Matrix<double, Eigen::Dynamic, 2> net; // (res*res) x 2, u fastest
  bool rigid = false;
  int row = 0;            // cell row this patch belongs to
  std::string name;
  std::array<EdgeBC, 4> edge_bc = {EdgeBC::None, EdgeBC::None, EdgeBC::None,
                                   EdgeBC::None};
};

// Indices of the 18 patches of one cell, in construction order.
struct CellPatchIds {
  // floor strip: corner-L, bar-L, center-L, center-R, bar-R, corner-R
  std::array<int, 6> floor;
  std::array<int, 3> wall_left;  // below-root, root-band, above-root
  std::array<int, 3> wall_right;
  std::array<int, 4> beam;       // left to right along the span
  std::array<int, 2> apex;       // left, right block above the beam apex
};

// A multi-patch structure: stacked bistable cells plus DofMap inputs.
struct PatchSet {
  KnotVector kv;          // shared by both directions of every patch
  int res = 7;            // control points per direction
  int degree = 3;
  int n_rows = 1;
  std::vector<Patch> patches;
  std::vector<CellPatchIds> rows;
  std::vector<CellGeometry> cells;     // geometry each row was built from
  std::vector<double> row_base;        // y offset of each cell
  double width = 0, total_height = 0;

  int points_per_patch() const { return res * res; }
  int num_patches() const { return static_cast<int>(patches.size()); }
  int point_index(int i, int j) const { return i + j * res; }
  // Local point ids along one edge, ordered by the free parameter.
  std::vector<int> edge_points(PatchEdge e) const;
};

// Build the 18-patch bistable cell.  Layout (per cell, 9 rigid / 9 flexible):
//
//   patch            extent                              rigid
//   floor x6         full-width strip, height t          yes (all 6)
//   wall A x2        column 2t wide, floor top..root     yes
//   wall B x2        root band (beam root glues here)    no
//   wall C           above root band up to wall top      left yes / right no
//   beam x4          cosine arc, thickness t_beam        no
//   apex x2          beam apex up to the cell top        no
//
// The beam spans [2t, L-2t]; walls are 2t wide; the apex block is 2t wide
// and centred, so beam patches split at L/2 -+ t and L/2.  Cells stack by
// standing each floor on the apex blocks of the cell below; the load path
// therefore runs through every beam in series.  The single left/right
// asymmetry (wall C) only breaks the tie needed to flag exactly 9 patches
// rigid; the piece sits above the root band outside the load path.
PatchSet build_unit_cell(const CellGeometry &cell, int res = 7, int degree = 3);

// Stack n_rows cells (bottom row first).  Shared interface edges are
// constructed bitwise-identical so the DofMap can merge them exactly.
PatchSet assemble_structure(const DesignParams &design, int res = 7, int degree = 3);

// Rectangular n-patch strip [0,n] x [0,1]; useful as a small calibration
// model.  fix_top tags every patch's VMax edge as fully fixed;
// rigid_patch >= 0 flags that patch rigid.
PatchSet build_patch_strip(int n_patches, int res = 4, int degree = 3,
                           bool fix_top = true, int rigid_patch = -1);

// Jacobian of every control-net coordinate with respect to the packed
// design vector, computed by forward-mode dual numbers through the same
// construction code.  Row ordering: patch-major, point-major, component
// fastest (x then y); column ordering matches DesignParams::pack().
Eigen::MatrixXd geometry_jacobian(const DesignParams &design, int res = 7,
                                  int degree = 3);

// ---------------------------------------------------------------------------
// Degree-of-freedom bookkeeping.

// Per-component constraint state of a group of coincident control points.
enum class CompBC : std::uint8_t { Free = 0, Zero = 1, Top = 2 };

struct DofMap {
  struct Group {
    std::array<int, 2> dof = {-1, -1};       // global dof per component
    std::array<CompBC, 2> bc = {CompBC::Free, CompBC::Free};
    int rigid = -1;                          // owning rigidity group, if any
    int rep_patch = 0, rep_point = 0;        // first member (representative)
  };
  struct RigidGroup {
    std::array<int, 2> dof = {-1, -1};
    std::array<CompBC, 2> bc = {CompBC::Free, CompBC::Free};
    std::vector<int> patches;                // member rigid patches
  };

  std::vector<std::vector<int>> group_of;    // [patch][point] -> group id
  std::vector<Group> groups;
  std::vector<RigidGroup> rigid_groups;
  int n_dofs = 0;

  // Counts used by the dof-accounting identity and reporting.
  int num_free_point_groups() const;
};

// Groups coincident control points (exact coordinate match), merges edge
// boundary conditions per component, forms rigidity groups from connected
// rigid patches and numbers the surviving dofs.
DofMap build_dof_map(const PatchSet &ps);

// Expand the global dof vector into per-patch local control-point values.
// d is the current prescribed top-edge compression.  Rows: local point,
// columns: x/y displacement.
std::vector<Eigen::MatrixX2d> global_to_local(const PatchSet &ps, const DofMap &dm,
                                              const Eigen::VectorXd &q, double d);

// Collapse per-patch local values onto the global vector by reading each
// group's representative.  Inverse of global_to_local on consistent data.
Eigen::VectorXd local_to_global(const PatchSet &ps, const DofMap &dm,
                                const std::vector<Eigen::MatrixX2d> &local);

} // namespace sims
