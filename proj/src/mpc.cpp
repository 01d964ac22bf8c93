#include "mpcdwr/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mpcdwr {

void MpcConfig::validate(const ProblemSpec& spec) const {
  if (!(tau > 0.0) || tau > spec.T + 1e-12 * std::max(1.0, spec.T))
    throw std::invalid_argument("mpc: tau must lie in (0, T]");
  if (n_steps < 1) throw std::invalid_argument("mpc: n_steps must be at least 1");
  if (sim_time_points_per_tau < 2)
    throw std::invalid_argument("mpc: simulation needs at least 2 time points per step");
  if (sim_uniform_refs < 0) throw std::invalid_argument("mpc: negative refinement count");
  if (initial_time_points < 3)
    throw std::invalid_argument("mpc: open-loop grid needs at least 3 time points");
  if (initial_space_elems < 1)
    throw std::invalid_argument("mpc: open-loop mesh needs at least 1 element");
}

ClosedLoopResult mpc_run(const ProblemSpec& spec, const MpcConfig& cfg,
                         const SolveOptions& opts) {
  spec.validate();
  cfg.validate(spec);
  const double tau = cfg.tau;
  const SpaceMesh base_mesh = make_uniform_mesh(spec.L, cfg.initial_space_elems);
  const SpaceMesh sim_mesh = uniform_refine(base_mesh, cfg.sim_uniform_refs);

  SpaceMesh hand_mesh = spec.x0_mesh;
  Vec hand_vals = spec.x0_vals;

  ClosedLoopResult out;
  std::vector<double> global_pts{0.0};
  std::vector<Vec> global_x;
  std::vector<Vec> global_u;
  Vec global_x0;

  for (int k = 0; k < cfg.n_steps; ++k) {
    ProblemSpec hspec = spec;
    hspec.time_offset = spec.time_offset + k * tau;
    hspec.x0_mesh = hand_mesh;
    hspec.x0_vals = hand_vals;

    TimeGrid coarse = make_uniform_time_grid(0.0, spec.T, cfg.initial_time_points);
    coarse = with_time_point(coarse, tau);
    auto start = std::make_shared<const SpaceTimeGrid>(make_space_time_grid(coarse, base_mesh));
    Qoi refine_qoi =
        cfg.refinement_qoi == Qoi::Kind::Full ? Qoi::full() : Qoi::truncated(tau);

    AdaptResult open_loop;
    try {
      open_loop = adapt_loop(hspec, refine_qoi, cfg.adapt, start, opts);
    } catch (const std::exception& e) {
      throw std::runtime_error("mpc step " + std::to_string(k) + ": " + e.what());
    }
    if (!open_loop.converged)
      throw std::runtime_error("mpc step " + std::to_string(k) + ": open-loop solve failed");

    MpcStep st;
    st.step = k;
    st.qoi_value = open_loop.history.back().qoi_value;
    st.time_points = static_cast<int>(open_loop.grid->time.points.size());
    st.space_dofs = open_loop.grid->total_space_dofs();
    st.adapt_rounds = static_cast<int>(open_loop.history.size()) - 1;
    st.ocp_grid = open_loop.grid;
    out.steps.push_back(st);

    // The plant grid joins the uniform simulation points with the open-loop
    // breakpoints so the piecewise-constant control is carried exactly.
    std::vector<double> pts;
    for (int i = 0; i < cfg.sim_time_points_per_tau; ++i)
      pts.push_back(tau * i / (cfg.sim_time_points_per_tau - 1));
    double tol = 1e-12 * std::max(1.0, tau);
    for (double p : open_loop.grid->time.points)
      if (p > tol && p < tau - tol) pts.push_back(p);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [&](double a, double b) { return std::abs(a - b) <= tol; }),
              pts.end());
    pts.front() = 0.0;
    pts.back() = tau;
    SpaceTimeGrid sim;
    sim.time = TimeGrid{pts};
    sim.meshes.assign(pts.size(), sim_mesh);
    auto sim_grid = std::make_shared<const SpaceTimeGrid>(std::move(sim));

    ControlTrajectory u_sim = ControlTrajectory::zeros(sim_grid, spec.control);
    for (int m = 1; m <= sim_grid->time.slabs(); ++m) {
      double mid = 0.5 * (sim_grid->time.t(m - 1) + sim_grid->time.t(m));
      int j = open_loop.grid->time.slab_of(mid);
      const Vec& uj = open_loop.solution.u.vals[j];
      u_sim.vals[m] = spec.control == ControlKind::Distributed
                          ? prolong(uj, open_loop.grid->mesh(j), sim_mesh)
                          : uj;
    }

    DgTrajectory x_sim;
    try {
      x_sim = solve_forward(hspec, u_sim, opts);
    } catch (const std::exception& e) {
      throw std::runtime_error("mpc step " + std::to_string(k) +
                               ": plant simulation failed: " + e.what());
    }
    double step_cost = eval_cost(x_sim, u_sim, hspec, 0.0, tau);
    out.steps.back().step_cost = step_cost;
    out.closed_loop_cost += step_cost;

    if (k == 0) global_x0 = x_sim.vals[0];
    for (int m = 1; m <= sim_grid->time.slabs(); ++m) {
      global_pts.push_back(k * tau + sim_grid->time.t(m));
      global_x.push_back(x_sim.vals[m]);
      global_u.push_back(u_sim.vals[m]);
    }

    hand_mesh = base_mesh;
    hand_vals = l2_project(sim_mesh, x_sim.vals.back(), base_mesh);
    if (hspec.dirichlet()) {
      hand_vals.front() = 0.0;
      hand_vals.back() = 0.0;
    }
  }

  SpaceTimeGrid global;
  global.time = TimeGrid{global_pts};
  global.meshes.assign(global_pts.size(), sim_mesh);
  auto global_grid = std::make_shared<const SpaceTimeGrid>(std::move(global));
  out.sim_state.grid = global_grid;
  out.sim_state.vals.clear();
  out.sim_state.vals.push_back(std::move(global_x0));
  for (auto& v : global_x) out.sim_state.vals.push_back(std::move(v));
  out.sim_control = ControlTrajectory::zeros(global_grid, spec.control);
  for (size_t i = 0; i < global_u.size(); ++i) out.sim_control.vals[i + 1] = std::move(global_u[i]);
  return out;
}

DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values,
                   double a, double b, double floor) {
  if (times.size() != values.size())
    throw std::invalid_argument("fit_decay: mismatched series lengths");
  if (!(a < b)) throw std::invalid_argument("fit_decay: empty window");
  if (!(floor > 0.0)) throw std::invalid_argument("fit_decay: floor must be positive");
  std::vector<double> ts;
  std::vector<double> ys;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < a || times[i] > b) continue;
    if (!(values[i] > floor)) continue;
    ts.push_back(times[i]);
    ys.push_back(std::log(values[i]));
  }
  DecayFit fit;
  fit.points_used = static_cast<int>(ts.size());
  if (fit.points_used < 3) return fit;
  double tm = 0.0, ym = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    tm += ts[i];
    ym += ys[i];
  }
  tm /= ts.size();
  ym /= ys.size();
  double var = 0.0, cov = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    var += (ts[i] - tm) * (ts[i] - tm);
    cov += (ts[i] - tm) * (ys[i] - ym);
  }
  if (!(var > 0.0)) return fit;
  fit.slope = cov / var;
  fit.intercept = ym - fit.slope * tm;
  fit.ok = true;
  return fit;
}

DecayReport decay_report(const ProblemSpec& spec, const KktSolution& base,
                         const SecondarySolution& chi, const Indicators& ind, double tau,
                         double floor) {
  const SpaceTimeGrid& g = *base.x.grid;
  int M = g.time.slabs();
  DecayReport rep;
  std::vector<double> ts, vs, qs, zs, eks, ehs;
  for (int m = 1; m <= M; ++m) {
    TriMatrix mass = assemble_mass(g.mesh(m));
    DecayRow row;
    row.t = g.time.t(m);
    row.v_norm = std::sqrt(std::max(0.0, dot(chi.v.vals[m], mass.apply(chi.v.vals[m]))));
    row.q_norm = std::sqrt(std::max(0.0, control_norm_sq(spec.control, mass, chi.q.vals[m])));
    row.z_norm = std::sqrt(std::max(0.0, dot(chi.z.vals[m], mass.apply(chi.z.vals[m]))));
    row.eta_k_abs = std::abs(ind.time[m]);
    for (double e : ind.space[m]) row.eta_h_abs += std::abs(e);
    rep.rows.push_back(row);
    ts.push_back(row.t);
    vs.push_back(row.v_norm);
    qs.push_back(row.q_norm);
    zs.push_back(row.z_norm);
    eks.push_back(row.eta_k_abs);
    ehs.push_back(row.eta_h_abs);
  }
  double a = 2.0 * tau;
  double b = 0.6 * g.time.horizon();
  rep.fit_v = fit_decay(ts, vs, a, b, floor);
  rep.fit_q = fit_decay(ts, qs, a, b, floor);
  rep.fit_z = fit_decay(ts, zs, a, b, floor);
  rep.fit_eta_k = fit_decay(ts, eks, a, b, floor);
  rep.fit_eta_h = fit_decay(ts, ehs, a, b, floor);
  return rep;
}

}  // namespace mpcdwr
