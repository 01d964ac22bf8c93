#pragma once

#include "mpcdwr/model.hpp"

namespace mpcdwr {

enum class HessianMode { Exact, GaussNewton };

struct SolveOptions {
  // Per-slab nonlinear solve (quasilinear forward step).
  double newton_abs_tol = 1e-11;
  int newton_max_iter = 25;
  // Reduced CG for the linear-quadratic problem.
  double cg_rel_tol = 1e-9;
  int cg_max_iter = 500;
  // Outer Newton-CG loop (quasilinear problem).
  double outer_tol = 1e-8;
  int outer_max_iter = 50;
  double armijo_sigma = 1e-4;
  int armijo_max_halvings = 30;
  int inner_cg_max_iter = 250;
  // Reduced CG for the sensitivity system.
  double secondary_rel_tol = 1e-11;
  int secondary_max_iter = 2000;
  HessianMode hessian_mode = HessianMode::Exact;
};

struct ConvergenceRow {
  int iteration = 0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct SolverInfo {
  bool converged = false;
  int outer_iterations = 0;
  int cg_iterations = 0;
  double final_gradient_norm = 0.0;
  std::vector<ConvergenceRow> history;
};

// Stationary triple of the control problem; lam.vals[0] carries the left limit
// of the adjoint at t_0 (L2 projection of the first slab value).
struct KktSolution {
  DgTrajectory x;
  ControlTrajectory u;
  DgTrajectory lam;
  SolverInfo info;
};

// Sensitivity triple (v, q, z): curvature system of the Lagrangian driven by
// the negative derivative of a quantity of interest.
struct SecondarySolution {
  DgTrajectory v;
  ControlTrajectory q;
  DgTrajectory z;
  SolverInfo info;
};

// March the state forward: per slab solve (M + k A(x)) x_m = C x_{m-1} + k B u_m
// with the previous value carried across meshes by the exact cross mass matrix.
// Quasilinear slabs run a damped Newton iteration.
DgTrajectory solve_forward(const ProblemSpec& spec, const ControlTrajectory& u,
                           const SolveOptions& opts = {});

// Backward sweep (M + k A'(x)^T) lam_m = C^T lam_{m+1} - k M (x_m - xd_m) with
// the misfit forcing active on slabs whose right endpoint lies in
// (window_begin, window_end]; zero value after the horizon.
DgTrajectory solve_adjoint(const ProblemSpec& spec, const DgTrajectory& x, double window_begin,
                           double window_end);

// Cost gradient in dual (coefficient) form: alpha R_u u_m - B* lam_m per slab;
// the derivative of the cost w.r.t. the control coefficient u_{m,i} equals
// k_m times entry i of slab m.
ControlTrajectory reduced_gradient(const ProblemSpec& spec, const ControlTrajectory& u,
                                   const DgTrajectory& lam);

// Action of the reduced Hessian on a control direction, in dual form.
// GaussNewton drops the state-curvature term weighted by the adjoint.
ControlTrajectory hessian_apply(const ProblemSpec& spec, const KktSolution& base,
                                const ControlTrajectory& du, HessianMode mode);

// Solve the control problem on the grid. Linear dynamics: a single reduced CG
// solve. Quasilinear: Newton-CG with Armijo backtracking. `warm` seeds the
// control iterate (transferred onto the grid when it lives elsewhere).
KktSolution solve_ocp(GridPtr grid, const ProblemSpec& spec, const KktSolution* warm = nullptr,
                      const SolveOptions& opts = {});

// Solve the curvature system at `base` for the given quantity of interest:
// reduced CG on q with linearized forward/backward sweeps frozen at base.x.
SecondarySolution solve_secondary(const ProblemSpec& spec, const KktSolution& base, const Qoi& qoi,
                                  const SolveOptions& opts = {});

// Control-space inner product sum_m k_m <a_m, b_m>_U and induced norm.
double control_inner(const ControlTrajectory& a, const ControlTrajectory& b);
double control_norm(const ControlTrajectory& u);

}  // namespace mpcdwr
