#pragma once

#include "mpcdwr/adapt.hpp"

namespace mpcdwr {

// Receding-horizon driver: each step optimizes over a fresh horizon-local grid,
// applies the first tau of the optimal control to a fine-grid plant simulation,
// and hands the measured terminal state to the next step.
struct MpcConfig {
  double tau = 0.5;
  int n_steps = 4;
  AdaptConfig adapt;
  int sim_time_points_per_tau = 51;
  int sim_uniform_refs = 5;
  Qoi::Kind refinement_qoi = Qoi::Kind::Truncated;
  // Fresh per-step open-loop discretization; tau is inserted into the time
  // grid when the uniform points miss it.
  int initial_time_points = 5;
  int initial_space_elems = 8;

  void validate(const ProblemSpec& spec) const;
};

struct MpcStep {
  int step = 0;
  double qoi_value = 0.0;
  double step_cost = 0.0;
  int time_points = 0;
  int space_dofs = 0;
  int adapt_rounds = 0;
  GridPtr ocp_grid;
};

struct ClosedLoopResult {
  double closed_loop_cost = 0.0;
  std::vector<MpcStep> steps;
  // Implemented control and simulated plant state over [0, n_steps * tau],
  // concatenated on the per-step simulation grids (grid-local time).
  DgTrajectory sim_state;
  ControlTrajectory sim_control;
};

ClosedLoopResult mpc_run(const ProblemSpec& spec, const MpcConfig& cfg,
                         const SolveOptions& opts = {});

// Least-squares line through (t, log value) for samples inside [a, b] with
// value above the floor; fewer than 3 usable points leaves ok = false.
struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points_used = 0;
  bool ok = false;
};

DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values,
                   double a, double b, double floor);

struct DecayRow {
  double t = 0.0;
  double v_norm = 0.0;
  double q_norm = 0.0;
  double z_norm = 0.0;
  double eta_k_abs = 0.0;
  double eta_h_abs = 0.0;
};

// Per-slab norms of the sensitivity triple and indicator magnitudes, with
// decay fits over [2 tau, 0.6 T].
struct DecayReport {
  std::vector<DecayRow> rows;
  DecayFit fit_v;
  DecayFit fit_q;
  DecayFit fit_z;
  DecayFit fit_eta_k;
  DecayFit fit_eta_h;
};

DecayReport decay_report(const ProblemSpec& spec, const KktSolution& base,
                         const SecondarySolution& chi, const Indicators& ind, double tau,
                         double floor = 1e-11);

}  // namespace mpcdwr
