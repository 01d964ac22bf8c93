#include "mpcdwr/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace mpcdwr {

namespace {

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

void vadd_scaled(Vec& y, double a, const Vec& x) {
  for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Vec vscale(double a, const Vec& v) {
  Vec out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = a * v[i];
  return out;
}

// Per-slab factorized step operators frozen at a base state, shared by the
// linearized sweeps and the reduced CG loops.
struct SlabOps {
  TriMatrix mass;
  TriLU lu;    // M + k A' (Dirichlet-constrained when applicable)
  TriLU lu_t;  // transpose factorization
  TriMatrix wmat;
  bool has_w = false;
};

struct Ops {
  GridPtr grid;
  const ProblemSpec* spec = nullptr;
  std::vector<SlabOps> slab;  // index 1..M
};

Ops build_ops(GridPtr grid, const ProblemSpec& spec, const DgTrajectory* base_x,
              const DgTrajectory* base_lam, bool with_curvature) {
  Ops ops;
  ops.grid = grid;
  ops.spec = &spec;
  int M = grid->time.slabs();
  ops.slab.resize(M + 1);
  for (int m = 1; m <= M; ++m) {
    const SpaceMesh& mesh = grid->mesh(m);
    double k = grid->time.k(m);
    SlabOps& so = ops.slab[m];
    so.mass = assemble_mass(mesh);
    TriMatrix lhs = so.mass;
    if (spec.dynamics == DynamicsKind::Linear) {
      lhs.add_scaled(assemble_stiffness(mesh, spec.nu), k);
      if (spec.s != 0.0) lhs.add_scaled(so.mass, -k * spec.s);
    } else {
      lhs.add_scaled(assemble_quasilinear_jacobian(mesh, base_x->vals[m], spec.c, spec.d), k);
    }
    if (spec.dirichlet()) constrain_matrix(lhs);
    so.lu = TriLU::factor(lhs);
    so.lu_t = TriLU::factor(lhs.transposed());
    if (with_curvature && spec.dynamics == DynamicsKind::Quasilinear) {
      so.wmat = assemble_quasilinear_second_form(mesh, base_x->vals[m], base_lam->vals[m], spec.c,
                                                 spec.d);
      so.has_w = true;
    }
  }
  return ops;
}

using CtrlVals = std::vector<Vec>;

CtrlVals ctrl_zeros(const Ops& ops) {
  int M = ops.grid->time.slabs();
  CtrlVals v(M + 1);
  for (int m = 1; m <= M; ++m)
    v[m].assign(control_dim(ops.spec->control, ops.grid->mesh(m)), 0.0);
  return v;
}

void cv_add_scaled(CtrlVals& y, double a, const CtrlVals& x) {
  for (size_t m = 1; m < y.size(); ++m) vadd_scaled(y[m], a, x[m]);
}

double inner_u(const Ops& ops, const CtrlVals& a, const CtrlVals& b) {
  double sum = 0.0;
  for (int m = 1; m <= ops.grid->time.slabs(); ++m) {
    double km = ops.grid->time.k(m);
    if (ops.spec->control == ControlKind::Distributed)
      sum += km * dot(a[m], ops.slab[m].mass.apply(b[m]));
    else
      sum += km * dot(a[m], b[m]);
  }
  return sum;
}

// Forward sweep of the frozen linearization: v_0 given, then
// (M + k A') v_m = C v_{m-1} + forcing_m.
DgTrajectory lin_forward(const Ops& ops, const std::vector<Vec>& forcing, Vec v0) {
  const auto& g = *ops.grid;
  DgTrajectory out;
  out.grid = ops.grid;
  out.vals.resize(g.time.slabs() + 1);
  out.vals[0] = std::move(v0);
  for (int m = 1; m <= g.time.slabs(); ++m) {
    Vec rhs = cross_mass_apply(g.mesh(m - 1), out.vals[m - 1], g.mesh(m));
    vadd_scaled(rhs, 1.0, forcing[m]);
    if (ops.spec->dirichlet()) constrain_vec(rhs);
    out.vals[m] = ops.slab[m].lu.solve(rhs);
  }
  return out;
}

// Backward sweep of the transposed linearization with zero terminal value:
// (M + k A')^T z_m = C^T z_{m+1} + forcing_m; the left limit at t_0 is the
// L2 projection of the first slab value.
DgTrajectory lin_backward(const Ops& ops, const std::vector<Vec>& forcing) {
  const auto& g = *ops.grid;
  int M = g.time.slabs();
  DgTrajectory out;
  out.grid = ops.grid;
  out.vals.resize(M + 1);
  for (int m = M; m >= 1; --m) {
    Vec rhs = m == M ? Vec(g.mesh(m).n_nodes(), 0.0)
                     : cross_mass_apply(g.mesh(m + 1), out.vals[m + 1], g.mesh(m));
    vadd_scaled(rhs, 1.0, forcing[m]);
    if (ops.spec->dirichlet()) constrain_vec(rhs);
    out.vals[m] = ops.slab[m].lu_t.solve(rhs);
  }
  out.vals[0] = l2_project(g.mesh(1), out.vals[1], g.mesh(0));
  return out;
}

// forcing_m = k B q_m.
std::vector<Vec> control_forcing(const Ops& ops, const CtrlVals& q) {
  const auto& g = *ops.grid;
  std::vector<Vec> f(g.time.slabs() + 1);
  for (int m = 1; m <= g.time.slabs(); ++m)
    f[m] = vscale(g.time.k(m),
                  control_apply(ops.spec->control, g.mesh(m), q[m], ops.slab[m].mass));
  return f;
}

// forcing_m = -k M (x_m - xd_m) on slabs 1..last, zero beyond.
std::vector<Vec> misfit_forcing(const Ops& ops, const DgTrajectory& x, int last) {
  const auto& g = *ops.grid;
  std::vector<Vec> f(g.time.slabs() + 1);
  for (int m = 1; m <= g.time.slabs(); ++m) {
    const SpaceMesh& mesh = g.mesh(m);
    if (m <= last) {
      Vec mis = x.vals[m];
      Vec ref = reference_nodal(*ops.spec, g.time.t(m), mesh);
      vadd_scaled(mis, -1.0, ref);
      f[m] = vscale(-g.time.k(m), ops.slab[m].mass.apply(mis));
    } else {
      f[m].assign(mesh.n_nodes(), 0.0);
    }
  }
  return f;
}

// forcing_m = -k (M + W) dx_m.
std::vector<Vec> curvature_forcing(const Ops& ops, const DgTrajectory& dx) {
  const auto& g = *ops.grid;
  std::vector<Vec> f(g.time.slabs() + 1);
  for (int m = 1; m <= g.time.slabs(); ++m) {
    double km = g.time.k(m);
    f[m] = vscale(-km, ops.slab[m].mass.apply(dx.vals[m]));
    if (ops.slab[m].has_w) vadd_scaled(f[m], -km, ops.slab[m].wmat.apply(dx.vals[m]));
  }
  return f;
}

// Riesz representation of the reduced Hessian action at the frozen base.
CtrlVals hessian_riesz(const Ops& ops, const CtrlVals& p) {
  const auto& g = *ops.grid;
  DgTrajectory dx = lin_forward(ops, control_forcing(ops, p), Vec(g.mesh(0).n_nodes(), 0.0));
  DgTrajectory dz = lin_backward(ops, curvature_forcing(ops, dx));
  CtrlVals out(g.time.slabs() + 1);
  for (int m = 1; m <= g.time.slabs(); ++m) {
    out[m] = vscale(ops.spec->alpha, p[m]);
    vadd_scaled(out[m], -1.0, control_adjoint(ops.spec->control, g.mesh(m), dz.vals[m]));
  }
  return out;
}

struct CgOutcome {
  int iterations = 0;
  bool converged = false;
  double final_norm = 0.0;
};

// CG on the reduced operator in the time-weighted control inner product;
// the convergence reference is max(||b||, ||r0||) so warm starts cannot make
// the relative target unreachable.
template <class Apply>
CgOutcome cg_solve(const Ops& ops, Apply&& apply, const CtrlVals& b, CtrlVals& x, double rel_tol,
                   int max_iter) {
  CgOutcome out;
  CtrlVals r = apply(x);
  for (size_t m = 1; m < r.size(); ++m) r[m] = axpy(-1.0, r[m], b[m]);
  double bn = std::sqrt(inner_u(ops, b, b));
  double rn2 = inner_u(ops, r, r);
  double ref = std::max(bn, std::sqrt(rn2));
  if (ref == 0.0) {
    out.converged = true;
    return out;
  }
  double tol = rel_tol * ref;
  CtrlVals p = r;
  while (std::sqrt(rn2) > tol && out.iterations < max_iter) {
    CtrlVals hp = apply(p);
    double php = inner_u(ops, p, hp);
    if (php <= 0.0) break;
    double a = rn2 / php;
    cv_add_scaled(x, a, p);
    cv_add_scaled(r, -a, hp);
    double rn2n = inner_u(ops, r, r);
    double beta = rn2n / rn2;
    rn2 = rn2n;
    for (size_t m = 1; m < p.size(); ++m) p[m] = axpy(beta, p[m], r[m]);
    ++out.iterations;
  }
  out.final_norm = std::sqrt(rn2);
  out.converged = out.final_norm <= tol;
  return out;
}

// Truncated CG for the Newton step H d = -g with negative-curvature exit.
CtrlVals steihaug(const Ops& ops, const CtrlVals& g, double gn, double eta, int cap,
                  int& cg_count) {
  CtrlVals s = ctrl_zeros(ops);
  CtrlVals r(g.size());
  for (size_t m = 1; m < g.size(); ++m) r[m] = vscale(-1.0, g[m]);
  CtrlVals p = r;
  double rn2 = gn * gn;
  double stop = eta * gn;
  for (int it = 0; it < cap && std::sqrt(rn2) > stop; ++it) {
    CtrlVals hp = hessian_riesz(ops, p);
    double php = inner_u(ops, p, hp);
    ++cg_count;
    if (php <= 0.0) return it == 0 ? p : s;
    double a = rn2 / php;
    cv_add_scaled(s, a, p);
    cv_add_scaled(r, -a, hp);
    double rn2n = inner_u(ops, r, r);
    double beta = rn2n / rn2;
    rn2 = rn2n;
    for (size_t m = 1; m < p.size(); ++m) p[m] = axpy(beta, p[m], r[m]);
  }
  return s;
}

CtrlVals riesz_gradient(const Ops& ops, const CtrlVals& u, const DgTrajectory& lam) {
  const auto& g = *ops.grid;
  CtrlVals out(g.time.slabs() + 1);
  for (int m = 1; m <= g.time.slabs(); ++m) {
    out[m] = vscale(ops.spec->alpha, u[m]);
    vadd_scaled(out[m], -1.0, control_adjoint(ops.spec->control, g.mesh(m), lam.vals[m]));
  }
  return out;
}

Vec newton_slab(const SpaceMesh& mesh, const TriMatrix& mass, double k, const Vec& load, Vec y,
                const ProblemSpec& spec, const SolveOptions& opts, int slab_index) {
  bool dir = spec.dirichlet();
  if (dir) {
    y.front() = 0.0;
    y.back() = 0.0;
  }
  auto residual = [&](const Vec& yy) {
    Vec r = mass.apply(yy);
    vadd_scaled(r, k, assemble_quasilinear_residual(mesh, yy, spec.c, spec.d));
    vadd_scaled(r, -1.0, load);
    if (dir) constrain_vec(r);
    return r;
  };
  Vec r = residual(y);
  double rn = norm2(r);
  for (int it = 0; it < opts.newton_max_iter && rn > opts.newton_abs_tol; ++it) {
    TriMatrix jac = mass;
    jac.add_scaled(assemble_quasilinear_jacobian(mesh, y, spec.c, spec.d), k);
    if (dir) constrain_matrix(jac);
    Vec delta = TriLU::factor(jac).solve(vscale(-1.0, r));
    double t = 1.0;
    Vec ytrial, rtrial;
    double rtn = 0.0;
    for (int h = 0;; ++h) {
      ytrial = y;
      vadd_scaled(ytrial, t, delta);
      rtrial = residual(ytrial);
      rtn = norm2(rtrial);
      if (rtn <= rn || h >= 20) break;
      t *= 0.5;
    }
    y = std::move(ytrial);
    r = std::move(rtrial);
    rn = rtn;
  }
  if (rn > opts.newton_abs_tol)
    throw std::runtime_error("state solve stalled on slab " + std::to_string(slab_index) +
                             " at residual " + std::to_string(rn));
  return y;
}

KktSolution solve_ocp_linear(GridPtr grid, const ProblemSpec& spec, const KktSolution* warm,
                             const SolveOptions& opts) {
  Ops ops = build_ops(grid, spec, nullptr, nullptr, false);
  int M = grid->time.slabs();
  std::vector<Vec> zero_f(M + 1);
  for (int m = 1; m <= M; ++m) zero_f[m].assign(grid->mesh(m).n_nodes(), 0.0);
  DgTrajectory x_aff = lin_forward(ops, zero_f, initial_nodal(spec, grid->mesh(0)));
  DgTrajectory lam_aff = lin_backward(ops, misfit_forcing(ops, x_aff, M));
  CtrlVals b(M + 1);
  for (int m = 1; m <= M; ++m)
    b[m] = control_adjoint(spec.control, grid->mesh(m), lam_aff.vals[m]);

  CtrlVals u = warm ? transfer(warm->u, grid).vals : ctrl_zeros(ops);
  auto apply = [&](const CtrlVals& p) { return hessian_riesz(ops, p); };
  CgOutcome cg = cg_solve(ops, apply, b, u, opts.cg_rel_tol, opts.cg_max_iter);

  ControlTrajectory uc;
  uc.grid = grid;
  uc.kind = spec.control;
  uc.vals = u;
  DgTrajectory x = lin_forward(ops, control_forcing(ops, u), initial_nodal(spec, grid->mesh(0)));
  DgTrajectory lam = lin_backward(ops, misfit_forcing(ops, x, M));
  CtrlVals g = riesz_gradient(ops, u, lam);
  double gn = std::sqrt(inner_u(ops, g, g));

  SolverInfo info;
  info.converged = cg.converged;
  info.outer_iterations = 1;
  info.cg_iterations = cg.iterations;
  info.final_gradient_norm = gn;
  info.history.push_back({0, gn, 1.0});
  return {std::move(x), std::move(uc), std::move(lam), std::move(info)};
}

KktSolution solve_ocp_newton(GridPtr grid, const ProblemSpec& spec, const KktSolution* warm,
                             const SolveOptions& opts) {
  int M = grid->time.slabs();
  double t0 = grid->time.points.front();
  double t1 = grid->time.points.back();
  ControlTrajectory uc = warm ? transfer(warm->u, grid) : ControlTrajectory::zeros(grid, spec.control);
  SolverInfo info;
  DgTrajectory x = solve_forward(spec, uc, opts);
  DgTrajectory lam;
  double gn = 0.0;
  double step_len = 0.0;
  bool converged = false;
  int outer = 0;
  for (; outer < opts.outer_max_iter; ++outer) {
    lam = solve_adjoint(spec, x, t0, t1);
    Ops ops = build_ops(grid, spec, &x, &lam, opts.hessian_mode == HessianMode::Exact);
    CtrlVals g = riesz_gradient(ops, uc.vals, lam);
    gn = std::sqrt(inner_u(ops, g, g));
    info.history.push_back({outer, gn, step_len});
    if (gn <= opts.outer_tol) {
      converged = true;
      break;
    }
    double eta = std::min(0.1, std::sqrt(gn));
    CtrlVals d = steihaug(ops, g, gn, eta, opts.inner_cg_max_iter, info.cg_iterations);
    double dd = inner_u(ops, g, d);
    if (!(dd < 0.0)) {
      d.assign(g.size(), Vec());
      for (size_t m = 1; m < g.size(); ++m) d[m] = vscale(-1.0, g[m]);
      dd = -gn * gn;
    }
    double j0 = eval_cost(x, uc, spec, t0, t1);
    double t = 1.0;
    bool accepted = false;
    ControlTrajectory u_try = uc;
    DgTrajectory x_try;
    for (int h = 0; h <= opts.armijo_max_halvings; ++h) {
      u_try.vals = uc.vals;
      cv_add_scaled(u_try.vals, t, d);
      x_try = solve_forward(spec, u_try, opts);
      double jt = eval_cost(x_try, u_try, spec, t0, t1);
      if (jt <= j0 + opts.armijo_sigma * t * dd) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    uc.vals = u_try.vals;
    x = std::move(x_try);
    step_len = t;
  }
  if (!converged) {
    lam = solve_adjoint(spec, x, t0, t1);
    Ops ops = build_ops(grid, spec, &x, &lam, false);
    CtrlVals g = riesz_gradient(ops, uc.vals, lam);
    gn = std::sqrt(inner_u(ops, g, g));
  }
  info.converged = converged;
  info.outer_iterations = outer;
  info.final_gradient_norm = gn;
  return {std::move(x), std::move(uc), std::move(lam), std::move(info)};
}

}  // namespace

DgTrajectory solve_forward(const ProblemSpec& spec, const ControlTrajectory& u,
                           const SolveOptions& opts) {
  GridPtr grid = u.grid;
  const auto& g = *grid;
  DgTrajectory x;
  x.grid = grid;
  x.vals.resize(g.time.slabs() + 1);
  x.vals[0] = initial_nodal(spec, g.mesh(0));
  for (int m = 1; m <= g.time.slabs(); ++m) {
    const SpaceMesh& mesh = g.mesh(m);
    double k = g.time.k(m);
    TriMatrix mass = assemble_mass(mesh);
    Vec load = cross_mass_apply(g.mesh(m - 1), x.vals[m - 1], mesh);
    vadd_scaled(load, k, control_apply(spec.control, mesh, u.vals[m], mass));
    if (spec.dynamics == DynamicsKind::Linear) {
      TriMatrix lhs = mass;
      lhs.add_scaled(assemble_stiffness(mesh, spec.nu), k);
      if (spec.s != 0.0) lhs.add_scaled(mass, -k * spec.s);
      if (spec.dirichlet()) {
        constrain_matrix(lhs);
        constrain_vec(load);
      }
      x.vals[m] = TriLU::factor(lhs).solve(load);
    } else {
      if (spec.dirichlet()) constrain_vec(load);
      Vec guess = prolong(x.vals[m - 1], g.mesh(m - 1), mesh);
      x.vals[m] = newton_slab(mesh, mass, k, load, std::move(guess), spec, opts, m);
    }
  }
  return x;
}

DgTrajectory solve_adjoint(const ProblemSpec& spec, const DgTrajectory& x, double window_begin,
                           double window_end) {
  GridPtr grid = x.grid;
  const auto& g = *grid;
  int M = g.time.slabs();
  double tol = 1e-9 * std::max(1.0, g.time.horizon());
  DgTrajectory lam;
  lam.grid = grid;
  lam.vals.resize(M + 1);
  for (int m = M; m >= 1; --m) {
    const SpaceMesh& mesh = g.mesh(m);
    double k = g.time.k(m);
    TriMatrix mass = assemble_mass(mesh);
    Vec rhs = m == M ? Vec(mesh.n_nodes(), 0.0)
                     : cross_mass_apply(g.mesh(m + 1), lam.vals[m + 1], mesh);
    double tm = g.time.t(m);
    if (tm > window_begin + tol && tm <= window_end + tol) {
      Vec mis = x.vals[m];
      vadd_scaled(mis, -1.0, reference_nodal(spec, tm, mesh));
      vadd_scaled(rhs, -k, mass.apply(mis));
    }
    TriMatrix lhs = mass;
    if (spec.dynamics == DynamicsKind::Linear) {
      lhs.add_scaled(assemble_stiffness(mesh, spec.nu), k);
      if (spec.s != 0.0) lhs.add_scaled(mass, -k * spec.s);
    } else {
      lhs.add_scaled(assemble_quasilinear_jacobian(mesh, x.vals[m], spec.c, spec.d), k);
    }
    if (spec.dirichlet()) {
      constrain_matrix(lhs);
      constrain_vec(rhs);
    }
    lam.vals[m] = TriLU::factor(lhs.transposed()).solve(rhs);
  }
  lam.vals[0] = l2_project(g.mesh(1), lam.vals[1], g.mesh(0));
  return lam;
}

ControlTrajectory reduced_gradient(const ProblemSpec& spec, const ControlTrajectory& u,
                                   const DgTrajectory& lam) {
  GridPtr grid = u.grid;
  const auto& g = *grid;
  ControlTrajectory out;
  out.grid = grid;
  out.kind = u.kind;
  out.vals.resize(g.time.slabs() + 1);
  for (int m = 1; m <= g.time.slabs(); ++m) {
    const SpaceMesh& mesh = g.mesh(m);
    Vec w = vscale(spec.alpha, u.vals[m]);
    vadd_scaled(w, -1.0, control_adjoint(u.kind, mesh, lam.vals[m]));
    out.vals[m] = u.kind == ControlKind::Distributed ? assemble_mass(mesh).apply(w) : w;
  }
  return out;
}

ControlTrajectory hessian_apply(const ProblemSpec& spec, const KktSolution& base,
                                const ControlTrajectory& du, HessianMode mode) {
  GridPtr grid = base.x.grid;
  const auto& g = *grid;
  bool with_curvature = mode == HessianMode::Exact;
  Ops ops = build_ops(grid, spec, &base.x, &base.lam, with_curvature);
  DgTrajectory dx =
      lin_forward(ops, control_forcing(ops, du.vals), Vec(g.mesh(0).n_nodes(), 0.0));
  DgTrajectory dz = lin_backward(ops, curvature_forcing(ops, dx));
  ControlTrajectory out;
  out.grid = grid;
  out.kind = du.kind;
  out.vals.resize(g.time.slabs() + 1);
  for (int m = 1; m <= g.time.slabs(); ++m) {
    Vec w = vscale(spec.alpha, du.vals[m]);
    vadd_scaled(w, -1.0, control_adjoint(du.kind, g.mesh(m), dz.vals[m]));
    out.vals[m] = du.kind == ControlKind::Distributed ? ops.slab[m].mass.apply(w) : w;
  }
  return out;
}

KktSolution solve_ocp(GridPtr grid, const ProblemSpec& spec, const KktSolution* warm,
                      const SolveOptions& opts) {
  spec.validate();
  return spec.dynamics == DynamicsKind::Linear ? solve_ocp_linear(grid, spec, warm, opts)
                                               : solve_ocp_newton(grid, spec, warm, opts);
}

SecondarySolution solve_secondary(const ProblemSpec& spec, const KktSolution& base, const Qoi& qoi,
                                  const SolveOptions& opts) {
  GridPtr grid = base.x.grid;
  const auto& g = *grid;
  int M = g.time.slabs();
  int last = qoi_last_slab(g.time, qoi);
  Ops ops = build_ops(grid, spec, &base.x, &base.lam, spec.dynamics == DynamicsKind::Quasilinear);

  std::vector<Vec> f_aff = misfit_forcing(ops, base.x, last);
  DgTrajectory z_aff = lin_backward(ops, f_aff);
  CtrlVals b(M + 1);
  for (int m = 1; m <= M; ++m) {
    b[m] = control_adjoint(spec.control, g.mesh(m), z_aff.vals[m]);
    if (m <= last) vadd_scaled(b[m], -spec.alpha, base.u.vals[m]);
  }

  CtrlVals q = ctrl_zeros(ops);
  auto apply = [&](const CtrlVals& p) { return hessian_riesz(ops, p); };
  CgOutcome cg = cg_solve(ops, apply, b, q, opts.secondary_rel_tol, opts.secondary_max_iter);

  DgTrajectory v = lin_forward(ops, control_forcing(ops, q), Vec(g.mesh(0).n_nodes(), 0.0));
  std::vector<Vec> fz = curvature_forcing(ops, v);
  for (int m = 1; m <= M; ++m) vadd_scaled(fz[m], 1.0, f_aff[m]);
  DgTrajectory z = lin_backward(ops, fz);

  SecondarySolution out;
  out.v = std::move(v);
  out.z = std::move(z);
  out.q.grid = grid;
  out.q.kind = spec.control;
  out.q.vals = std::move(q);
  out.info.converged = cg.converged;
  out.info.outer_iterations = 1;
  out.info.cg_iterations = cg.iterations;
  out.info.final_gradient_norm = cg.final_norm;
  return out;
}

double control_inner(const ControlTrajectory& a, const ControlTrajectory& b) {
  const auto& g = *a.grid;
  double sum = 0.0;
  for (int m = 1; m <= g.time.slabs(); ++m) {
    double km = g.time.k(m);
    if (a.kind == ControlKind::Distributed)
      sum += km * dot(a.vals[m], assemble_mass(g.mesh(m)).apply(b.vals[m]));
    else
      sum += km * dot(a.vals[m], b.vals[m]);
  }
  return sum;
}

double control_norm(const ControlTrajectory& u) { return std::sqrt(control_inner(u, u)); }

}  // namespace mpcdwr
