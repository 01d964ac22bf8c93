#pragma once

#include "mpcdwr/solver.hpp"

namespace mpcdwr {

// Time-linear test function on each slab: values at the slab's left and right
// endpoints, carried on a per-slab evaluation mesh, plus a separate component
// at the initial time (left limit at t_0).
struct TestFunction {
  GridPtr grid;
  std::vector<SpaceMesh> meshes;    // index 1..M
  std::vector<Vec> left, right;     // index 1..M, nodal on meshes[m]
  SpaceMesh init_mesh;
  Vec init;

  static TestFunction zero(GridPtr g);
};

// Control-space analog; Distributed weights are nodal on per-slab meshes,
// NeumannBoundary weights are endpoint pairs.
struct ControlTestFunction {
  GridPtr grid;
  ControlKind kind = ControlKind::Distributed;
  std::vector<SpaceMesh> meshes;
  std::vector<Vec> left, right;

  static ControlTestFunction zero(GridPtr g, ControlKind kind);
};

// Piecewise-constant-in-time test built from a discrete trajectory; the forms
// vanish on these up to solver tolerance.
TestFunction discrete_test(const DgTrajectory& t);
ControlTestFunction discrete_test(const ControlTrajectory& u);

// Difference between the piecewise-linear interpolant through the slab samples
// (value at each t_m, left limit at t_0) and the piecewise-constant trajectory:
// on slab m a ramp from value_{m-1} - value_m down to zero, carried on the
// common refinement of the adjacent meshes. Controls have no t_0 sample, so
// their first-slab weight is zero. Requires at least two slabs.
TestFunction reconstruct_time(const DgTrajectory& traj);
ControlTestFunction reconstruct_time(const ControlTrajectory& u);

// Patch-quadratic enrichment increment: per element, the amplitude of the
// quadratic bubble 4 z (1 - z) added by fitting three-node patches; interior
// elements average their two patches. Requires at least two elements.
Vec reconstruct_space(const Vec& values, const SpaceMesh& mesh);

// Per-slab bubble amplitudes on each slab's own mesh ([0] = initial mesh).
// Meshes with fewer than two elements get zero amplitudes.
struct SpaceWeights {
  std::vector<Vec> amp;
};
struct ControlSpaceWeights {
  std::vector<Vec> amp;  // empty per slab for NeumannBoundary controls
};
SpaceWeights space_increments(const DgTrajectory& traj);
ControlSpaceWeights space_increments(const ControlTrajectory& u);

// One value per slab, slot 0 collecting the initial-time terms.
struct ResidualTriple {
  Vec state_row;    // state equation tested with the z-slot weight
  Vec control_row;  // stationarity in u tested with the q-slot weight
  Vec adjoint_row;  // stationarity in x tested with the v-slot weight
};

// One value per (slab, element); slot 0 runs over the initial mesh.
struct SpaceResidualTriple {
  std::vector<Vec> state_row, control_row, adjoint_row;
};

// First-order optimality residuals at the discrete triple.
ResidualTriple residuals_primal(const ProblemSpec& spec, const KktSolution& base,
                                const TestFunction& wv, const ControlTestFunction& wq,
                                const TestFunction& wz);
SpaceResidualTriple space_residuals_primal(const ProblemSpec& spec, const KktSolution& base,
                                           const SpaceWeights& wv, const ControlSpaceWeights& wq,
                                           const SpaceWeights& wz);

// Curvature-system residuals at (base, chi) for the interest window of `qoi`;
// state_row is the linearized state equation (defines v) tested with the
// lambda-slot weight, adjoint_row the v/z equation tested with the x-slot
// weight, control_row the q equation tested with the u-slot weight.
ResidualTriple residuals_dual(const ProblemSpec& spec, const KktSolution& base,
                              const SecondarySolution& chi, const Qoi& qoi,
                              const TestFunction& wx, const ControlTestFunction& wu,
                              const TestFunction& wlam);
SpaceResidualTriple space_residuals_dual(const ProblemSpec& spec, const KktSolution& base,
                                         const SecondarySolution& chi, const Qoi& qoi,
                                         const SpaceWeights& wx, const ControlSpaceWeights& wu,
                                         const SpaceWeights& wlam);

struct Indicators {
  Vec time;                // per slab, [0] = initial-time slot
  std::vector<Vec> space;  // [m][e] over slab m's elements, m = 0..M

  double eta_k() const;
  double eta_h() const;
};

// Goal-error indicators: half the sum of the six residual rows, primal rows
// weighted with curvature-variable reconstruction increments and curvature
// rows with primal increments; time localization per slab, space localization
// per element.
Indicators estimate(const ProblemSpec& spec, const KktSolution& base,
                    const SecondarySolution& chi, const Qoi& qoi);

// Space-time bilinear form of the evolution operator linearized at base_x,
// with time-derivative terms reduced to jumps (piecewise constants in time):
// sum_m k_m a'(x_m)(v_m, z_m) + sum_m <v_m - v_{m-1}, z_m> + <v_0, z_0>.
double evolution_form(const ProblemSpec& spec, const DgTrajectory& base_x, const DgTrajectory& v,
                      const DgTrajectory& z);
// Same value arranged with downwind jumps and a terminal pairing:
// sum_m k_m a'(x_m)(v_m, z_m) + sum_{m<M} <z_m - z_{m+1}, v_m> + <z_M, v_M>
// + <z_0 - z_1, v_0>; agrees with evolution_form by summation by parts.
double evolution_form_adjoint(const ProblemSpec& spec, const DgTrajectory& base_x,
                              const DgTrajectory& z, const DgTrajectory& v);

}  // namespace mpcdwr
