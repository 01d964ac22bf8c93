#pragma once

#include <memory>

#include "mpcdwr/fem.hpp"

namespace mpcdwr {

using GridPtr = std::shared_ptr<const SpaceTimeGrid>;

// Piecewise-constant-in-time, piecewise-linear-in-space trajectory.
// vals[m] for m >= 1 is the value on slab m (equal to the right limit at t_m),
// vals[0] is the left limit at t_0 on the initial-time mesh.
struct DgTrajectory {
  GridPtr grid;
  std::vector<Vec> vals;

  const Vec& value_minus(int m) const { return vals[m]; }
  const Vec& value_plus(int m) const { return vals[m + 1]; }
  static DgTrajectory zeros(GridPtr g);
};

// Per-slab control coefficients: nodal (Distributed) or an endpoint pair
// (NeumannBoundary). vals[0] is unused.
struct ControlTrajectory {
  GridPtr grid;
  ControlKind kind = ControlKind::Distributed;
  std::vector<Vec> vals;

  static ControlTrajectory zeros(GridPtr g, ControlKind kind);
};

// value_plus(m) - value_minus(m) on the common refinement of the two adjacent
// meshes; m ranges over 0..M-1.
Vec jump(const DgTrajectory& traj, int m);

// Carry a trajectory to a finer grid: each target slab takes the value of the
// enclosing source slab, interpolated onto the target mesh.
DgTrajectory transfer(const DgTrajectory& traj, GridPtr target);
ControlTrajectory transfer(const ControlTrajectory& u, GridPtr target);

struct NormWeight {
  bool l2_part = true;
  double grad_part_coeff = 0.0;
};
// Per-slab norms, index 0 holding the initial value's norm.
Vec l2v_norm(const DgTrajectory& traj, NormWeight weight);

// (C v)_i = <v, phi_i^to> for v given on `from`; exact via the common refinement.
Vec cross_mass_apply(const SpaceMesh& from, const Vec& v, const SpaceMesh& to);
// L2 projection of v onto `to`.
Vec l2_project(const SpaceMesh& from, const Vec& v, const SpaceMesh& to);
// Exact L2 inner product of two piecewise-linear functions on distinct meshes.
double cross_inner(const SpaceMesh& ma, const Vec& a, const SpaceMesh& mb, const Vec& b);

}  // namespace mpcdwr
