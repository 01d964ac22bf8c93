#pragma once

#include "mpcdwr/trajectory.hpp"

namespace mpcdwr {

enum class DynamicsKind { Linear, Quasilinear };
enum class ReferenceKind { Static, Dynamic, ExpIncreasing };

// Heat-type dynamics on [0, L]:
//   Linear:       x' - nu x'' - s x = B u + f     (Dirichlet when Distributed)
//   Quasilinear:  x' - (kappa(x) x')' = f, kappa(x) x' = u at the ends
// with tracking cost 1/2 Int ||x - x_d||^2 + alpha ||u||_U^2.
struct ProblemSpec {
  double L = 3.0;
  double T = 10.0;
  DynamicsKind dynamics = DynamicsKind::Linear;
  double nu = 0.1;
  double s = 0.0;
  double c = 0.1;
  double d = 0.1;
  ControlKind control = ControlKind::Distributed;
  ReferenceKind reference = ReferenceKind::Static;
  double alpha = 1e-3;
  // Absolute time of the grid's local t = 0; references are evaluated at
  // absolute time so receding horizons shift them correctly.
  double time_offset = 0.0;
  // Initial state as a nodal function; empty mesh means zero.
  SpaceMesh x0_mesh;
  Vec x0_vals;

  bool dirichlet() const { return control == ControlKind::Distributed; }
  void validate() const;
};

struct Qoi {
  enum class Kind { Full, Truncated };
  Kind kind = Kind::Full;
  double tau = 0.5;

  static Qoi full() { return {Kind::Full, 0.0}; }
  static Qoi truncated(double tau) { return {Kind::Truncated, tau}; }
};

// 10 e^{1 - 1/(1-s^2)} inside |s| < 1, zero outside.
double bump(double s);
// Reference value at absolute time t and coordinate w.
double eval_reference(const ProblemSpec& spec, double t, double w);
// Nodal interpolant of the reference at local time t on a mesh.
Vec reference_nodal(const ProblemSpec& spec, double t_local, const SpaceMesh& mesh);
// Nodal interpolant of the initial state.
Vec initial_nodal(const ProblemSpec& spec, const SpaceMesh& mesh);

// ||u||_U^2 on one slab: mass-weighted for Distributed, endpoint pair sum for
// NeumannBoundary.
double control_norm_sq(ControlKind kind, const TriMatrix& mass, const Vec& u);

// Box-rule cost over the window [a, b] in grid-local time; [a, b] must align
// with slab boundaries.
double eval_cost(const DgTrajectory& x, const ControlTrajectory& u, const ProblemSpec& spec,
                 double a, double b);
double eval_qoi(const DgTrajectory& x, const ControlTrajectory& u, const ProblemSpec& spec,
                const Qoi& qoi);
// Largest slab index m with t_m inside the QOI window (0 when empty).
int qoi_last_slab(const TimeGrid& time, const Qoi& qoi);

}  // namespace mpcdwr
