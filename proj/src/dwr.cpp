#include "mpcdwr/dwr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mpcdwr {

namespace {

constexpr double kGaussPoint = 0.7745966692414834;  // sqrt(3/5)
constexpr double kGaussSide = 5.0 / 9.0;
constexpr double kGaussMid = 8.0 / 9.0;

double p1_at(const SpaceMesh& mesh, const Vec& v, double w) {
  int e = mesh.locate(w);
  double t = (w - mesh.nodes[e]) / mesh.h(e);
  return v[e] + t * (v[e + 1] - v[e]);
}

double p1_grad_at(const SpaceMesh& mesh, const Vec& v, double w) {
  int e = mesh.locate(w);
  return (v[e + 1] - v[e]) / mesh.h(e);
}

// Breakpoints of [lo, hi] at the interior nodes of the given meshes, so that
// 3-point Gauss per piece integrates products of piecewise polynomials exactly.
std::vector<double> cut_points(double lo, double hi,
                               std::initializer_list<const SpaceMesh*> meshes) {
  std::vector<double> cuts{lo, hi};
  double tol = 1e-12 * std::max(1.0, hi - lo);
  for (const SpaceMesh* m : meshes) {
    if (m == nullptr) continue;
    for (double w : m->nodes)
      if (w > lo + tol && w < hi - tol) cuts.push_back(w);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [tol](double a, double b) { return std::abs(a - b) <= tol; }),
             cuts.end());
  return cuts;
}

template <class F>
double piecewise_gauss(const std::vector<double>& cuts, F&& f) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double half = 0.5 * (cuts[i + 1] - cuts[i]);
    if (half <= 0.0) continue;
    double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    double off = half * kGaussPoint;
    total += half * (kGaussSide * f(mid - off) + kGaussMid * f(mid) + kGaussSide * f(mid + off));
  }
  return total;
}

// Integral of a' b' for piecewise-linear a, b on possibly distinct meshes.
double h1_cross(const SpaceMesh& ma, const Vec& a, const SpaceMesh& mb, const Vec& b) {
  auto cuts = cut_points(ma.nodes.front(), ma.nodes.back(), {&ma, &mb});
  return piecewise_gauss(cuts,
                         [&](double w) { return p1_grad_at(ma, a, w) * p1_grad_at(mb, b, w); });
}

Vec vsub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec vavg(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = 0.5 * (a[i] + b[i]);
  return r;
}

bool slot_empty(const std::vector<Vec>& slots, int m) {
  return m >= static_cast<int>(slots.size()) || slots[m].empty();
}

// Directional derivative of the diffusion form at state x, direction y, tested
// with psi: nu (y', psi') - s (y, psi) for linear dynamics, else
// Int (2 c x y x' + kappa(x) y') psi'.
double diffusion_derivative(const ProblemSpec& spec, const SpaceMesh& mx, const Vec& x,
                            const Vec& y, const SpaceMesh& mpsi, const Vec& psi) {
  if (spec.dynamics == DynamicsKind::Linear)
    return spec.nu * h1_cross(mx, y, mpsi, psi) - spec.s * cross_inner(mx, y, mpsi, psi);
  auto cuts = cut_points(mx.nodes.front(), mx.nodes.back(), {&mx, &mpsi});
  double c = spec.c, d = spec.d;
  return piecewise_gauss(cuts, [&](double w) {
    double xv = p1_at(mx, x, w), xg = p1_grad_at(mx, x, w);
    return (2.0 * c * xv * p1_at(mx, y, w) * xg + (c * xv * xv + d) * p1_grad_at(mx, y, w)) *
           p1_grad_at(mpsi, psi, w);
  });
}

// Same form with the test function in the direction slot:
// Int (2 c x psi x' + kappa(x) psi') zeta'.
double diffusion_derivative_tested(const ProblemSpec& spec, const SpaceMesh& mx, const Vec& x,
                                   const Vec& zeta, const SpaceMesh& mpsi, const Vec& psi) {
  if (spec.dynamics == DynamicsKind::Linear)
    return spec.nu * h1_cross(mx, zeta, mpsi, psi) - spec.s * cross_inner(mx, zeta, mpsi, psi);
  auto cuts = cut_points(mx.nodes.front(), mx.nodes.back(), {&mx, &mpsi});
  double c = spec.c, d = spec.d;
  return piecewise_gauss(cuts, [&](double w) {
    double xv = p1_at(mx, x, w), xg = p1_grad_at(mx, x, w);
    return (2.0 * c * xv * p1_at(mpsi, psi, w) * xg + (c * xv * xv + d) * p1_grad_at(mpsi, psi, w)) *
           p1_grad_at(mx, zeta, w);
  });
}

// Second linearization of the diffusion form weighted by lam' and paired with
// the secondary state v: Int 2c (psi v x' + x psi v' + x v psi') lam'.
double diffusion_curvature(const ProblemSpec& spec, const SpaceMesh& mx, const Vec& x,
                           const Vec& lam, const Vec& v, const SpaceMesh& mpsi, const Vec& psi) {
  auto cuts = cut_points(mx.nodes.front(), mx.nodes.back(), {&mx, &mpsi});
  double c = spec.c;
  return piecewise_gauss(cuts, [&](double w) {
    double xv = p1_at(mx, x, w), xg = p1_grad_at(mx, x, w);
    double vv = p1_at(mx, v, w), vg = p1_grad_at(mx, v, w);
    double pv = p1_at(mpsi, psi, w), pg = p1_grad_at(mpsi, psi, w);
    return 2.0 * c * (pv * vv * xg + xv * pv * vg + xv * vv * pg) * p1_grad_at(mx, lam, w);
  });
}

// State-equation row, one value per slab plus the initial pairing in slot 0:
//   <y_m - y_{m-1}, phi_left> + k a(.)(avg phi) - k <B w_m, avg phi>
// with a the diffusion form at y itself, or its derivative at base_x when
// `linearized` is set.
Vec row_state_time(const ProblemSpec& spec, const DgTrajectory& y, const ControlTrajectory& w,
                   const Vec& init_ref, bool linearized, const DgTrajectory* base_x,
                   const TestFunction& phi) {
  const SpaceTimeGrid& g = *y.grid;
  int M = g.time.slabs();
  Vec out(M + 1, 0.0);
  if (!phi.init.empty())
    out[0] = cross_inner(g.mesh(0), vsub(y.vals[0], init_ref), phi.init_mesh, phi.init);
  for (int m = 1; m <= M; ++m) {
    if (slot_empty(phi.left, m)) continue;
    const SpaceMesh& wm = phi.meshes[m];
    const Vec& left = phi.left[m];
    Vec avg = vavg(left, phi.right[m]);
    double k = g.time.k(m);
    double val = cross_inner(g.mesh(m), y.vals[m], wm, left) -
                 cross_inner(g.mesh(m - 1), y.vals[m - 1], wm, left);
    if (linearized) {
      val += k * diffusion_derivative(spec, g.mesh(m), base_x->vals[m], y.vals[m], wm, avg);
    } else if (spec.dynamics == DynamicsKind::Linear) {
      val += k * (spec.nu * h1_cross(g.mesh(m), y.vals[m], wm, avg) -
                  spec.s * cross_inner(g.mesh(m), y.vals[m], wm, avg));
    } else {
      const SpaceMesh& mx = g.mesh(m);
      auto cuts = cut_points(mx.nodes.front(), mx.nodes.back(), {&mx, &wm});
      const Vec& ym = y.vals[m];
      double c = spec.c, d = spec.d;
      val += k * piecewise_gauss(cuts, [&](double ww) {
        double xv = p1_at(mx, ym, ww);
        return (c * xv * xv + d) * p1_grad_at(mx, ym, ww) * p1_grad_at(wm, avg, ww);
      });
    }
    if (w.kind == ControlKind::Distributed)
      val -= k * cross_inner(g.mesh(m), w.vals[m], wm, avg);
    else
      val -= k * (w.vals[m][0] * avg.front() + w.vals[m][1] * avg.back());
    out[m] = val;
  }
  return out;
}

// Stationarity-in-state row:
//   k <g_m, avg phi> + k a'(x_m)(avg phi, zeta_m) [+ k W(avg phi, v_m)]
//   + <zeta_m, phi_left> - <zeta_{m+1}, phi_right>
// with slot 0 = <zeta_0 - zeta_1, phi_init>. `curv_*` supply the lam-weighted
// second linearization for the curvature system (quasilinear only).
Vec row_adjoint_time(const ProblemSpec& spec, const DgTrajectory& x, const DgTrajectory& zeta,
                     const std::vector<Vec>& gvals, const DgTrajectory* curv_weight,
                     const DgTrajectory* curv_dir, const TestFunction& phi) {
  const SpaceTimeGrid& g = *x.grid;
  int M = g.time.slabs();
  Vec out(M + 1, 0.0);
  if (!phi.init.empty())
    out[0] = cross_inner(g.mesh(0), zeta.vals[0], phi.init_mesh, phi.init) -
             cross_inner(g.mesh(1), zeta.vals[1], phi.init_mesh, phi.init);
  for (int m = 1; m <= M; ++m) {
    if (slot_empty(phi.left, m)) continue;
    const SpaceMesh& wm = phi.meshes[m];
    Vec avg = vavg(phi.left[m], phi.right[m]);
    double k = g.time.k(m);
    double val = k * cross_inner(g.mesh(m), gvals[m], wm, avg);
    val += k * diffusion_derivative_tested(spec, g.mesh(m), x.vals[m], zeta.vals[m], wm, avg);
    if (curv_weight != nullptr && spec.dynamics == DynamicsKind::Quasilinear)
      val += k * diffusion_curvature(spec, g.mesh(m), x.vals[m], curv_weight->vals[m],
                                     curv_dir->vals[m], wm, avg);
    val += cross_inner(g.mesh(m), zeta.vals[m], wm, phi.left[m]);
    if (m < M) val -= cross_inner(g.mesh(m + 1), zeta.vals[m + 1], wm, phi.right[m]);
    out[m] = val;
  }
  return out;
}

// Stationarity-in-control row: k <r_m, avg phi>_U per slab.
Vec row_control_time(const SpaceTimeGrid& g, const std::vector<Vec>& rvals,
                     const ControlTestFunction& phi) {
  int M = g.time.slabs();
  Vec out(M + 1, 0.0);
  for (int m = 1; m <= M; ++m) {
    if (slot_empty(phi.left, m)) continue;
    Vec avg = vavg(phi.left[m], phi.right[m]);
    double k = g.time.k(m);
    if (phi.kind == ControlKind::Distributed)
      out[m] = k * cross_inner(g.mesh(m), rvals[m], phi.meshes[m], avg);
    else
      out[m] = k * (rvals[m][0] * avg[0] + rvals[m][1] * avg[1]);
  }
  return out;
}

double bubble_at(double w, double lo, double h) {
  double z = (w - lo) / h;
  return 4.0 * z * (1.0 - z);
}

double bubble_grad_at(double w, double lo, double h) {
  double z = (w - lo) / h;
  return (4.0 - 8.0 * z) / h;
}

// Integral over element e of `mb` of p1(ma, a) times the unit bubble of e.
double bubble_inner(const SpaceMesh& ma, const Vec& a, const SpaceMesh& mb, int e) {
  double lo = mb.nodes[e], hi = mb.nodes[e + 1], h = hi - lo;
  auto cuts = cut_points(lo, hi, {&ma});
  return piecewise_gauss(cuts, [&](double w) { return p1_at(ma, a, w) * bubble_at(w, lo, h); });
}

// Space-weight analog of row_state_time; the test on slab m is, per element,
// the unit bubble scaled by sw.amp[m][e], constant in time over the slab.
std::vector<Vec> row_state_space(const ProblemSpec& spec, const DgTrajectory& y,
                                 const ControlTrajectory& w, const Vec& init_ref, bool linearized,
                                 const DgTrajectory* base_x, const SpaceWeights& sw) {
  const SpaceTimeGrid& g = *y.grid;
  int M = g.time.slabs();
  std::vector<Vec> out(M + 1);
  for (int m = 0; m <= M; ++m) out[m] = Vec(g.mesh(m).n_elems(), 0.0);
  if (!slot_empty(sw.amp, 0)) {
    Vec diff = vsub(y.vals[0], init_ref);
    for (int e = 0; e < g.mesh(0).n_elems(); ++e) {
      double beta = sw.amp[0][e];
      if (beta != 0.0) out[0][e] = beta * bubble_inner(g.mesh(0), diff, g.mesh(0), e);
    }
  }
  double c = spec.c, d = spec.d;
  for (int m = 1; m <= M; ++m) {
    if (slot_empty(sw.amp, m)) continue;
    const SpaceMesh& mx = g.mesh(m);
    const SpaceMesh& prev = g.mesh(m - 1);
    double k = g.time.k(m);
    const Vec& ym = y.vals[m];
    for (int e = 0; e < mx.n_elems(); ++e) {
      double beta = sw.amp[m][e];
      if (beta == 0.0) continue;
      double lo = mx.nodes[e], hi = mx.nodes[e + 1], h = hi - lo;
      double val = beta * bubble_inner(mx, ym, mx, e) -
                   beta * bubble_inner(prev, y.vals[m - 1], mx, e);
      auto cuts = cut_points(lo, hi, {&mx});
      if (spec.dynamics == DynamicsKind::Linear) {
        val += k * beta *
               piecewise_gauss(cuts, [&](double ww) {
                 return spec.nu * p1_grad_at(mx, ym, ww) * bubble_grad_at(ww, lo, h) -
                        spec.s * p1_at(mx, ym, ww) * bubble_at(ww, lo, h);
               });
      } else if (linearized) {
        const Vec& xb = base_x->vals[m];
        val += k * beta *
               piecewise_gauss(cuts, [&](double ww) {
                 double xv = p1_at(mx, xb, ww), xg = p1_grad_at(mx, xb, ww);
                 return (2.0 * c * xv * p1_at(mx, ym, ww) * xg +
                         (c * xv * xv + d) * p1_grad_at(mx, ym, ww)) *
                        bubble_grad_at(ww, lo, h);
               });
      } else {
        val += k * beta *
               piecewise_gauss(cuts, [&](double ww) {
                 double xv = p1_at(mx, ym, ww);
                 return (c * xv * xv + d) * p1_grad_at(mx, ym, ww) * bubble_grad_at(ww, lo, h);
               });
      }
      // Boundary controls act at the domain endpoints where bubbles vanish.
      if (w.kind == ControlKind::Distributed)
        val -= k * beta * bubble_inner(mx, w.vals[m], mx, e);
      out[m][e] = val;
    }
  }
  return out;
}

std::vector<Vec> row_adjoint_space(const ProblemSpec& spec, const DgTrajectory& x,
                                   const DgTrajectory& zeta, const std::vector<Vec>& gvals,
                                   const DgTrajectory* curv_weight, const DgTrajectory* curv_dir,
                                   const SpaceWeights& sw) {
  const SpaceTimeGrid& g = *x.grid;
  int M = g.time.slabs();
  std::vector<Vec> out(M + 1);
  for (int m = 0; m <= M; ++m) out[m] = Vec(g.mesh(m).n_elems(), 0.0);
  if (!slot_empty(sw.amp, 0)) {
    for (int e = 0; e < g.mesh(0).n_elems(); ++e) {
      double beta = sw.amp[0][e];
      if (beta != 0.0)
        out[0][e] = beta * (bubble_inner(g.mesh(0), zeta.vals[0], g.mesh(0), e) -
                            bubble_inner(g.mesh(1), zeta.vals[1], g.mesh(0), e));
    }
  }
  double c = spec.c, d = spec.d;
  bool curved = curv_weight != nullptr && spec.dynamics == DynamicsKind::Quasilinear;
  for (int m = 1; m <= M; ++m) {
    if (slot_empty(sw.amp, m)) continue;
    const SpaceMesh& mx = g.mesh(m);
    double k = g.time.k(m);
    const Vec& xm = x.vals[m];
    const Vec& zm = zeta.vals[m];
    for (int e = 0; e < mx.n_elems(); ++e) {
      double beta = sw.amp[m][e];
      if (beta == 0.0) continue;
      double lo = mx.nodes[e], hi = mx.nodes[e + 1], h = hi - lo;
      double val = k * beta * bubble_inner(mx, gvals[m], mx, e);
      auto cuts = cut_points(lo, hi, {&mx});
      if (spec.dynamics == DynamicsKind::Linear) {
        val += k * beta *
               piecewise_gauss(cuts, [&](double ww) {
                 return spec.nu * bubble_grad_at(ww, lo, h) * p1_grad_at(mx, zm, ww) -
                        spec.s * bubble_at(ww, lo, h) * p1_at(mx, zm, ww);
               });
      } else {
        val += k * beta *
               piecewise_gauss(cuts, [&](double ww) {
                 double xv = p1_at(mx, xm, ww), xg = p1_grad_at(mx, xm, ww);
                 return (2.0 * c * xv * bubble_at(ww, lo, h) * xg +
                         (c * xv * xv + d) * bubble_grad_at(ww, lo, h)) *
                        p1_grad_at(mx, zm, ww);
               });
        if (curved) {
          const Vec& lam = curv_weight->vals[m];
          const Vec& vv = curv_dir->vals[m];
          val += k * beta * 2.0 * c *
                 piecewise_gauss(cuts, [&](double ww) {
                   double xv = p1_at(mx, xm, ww), xg = p1_grad_at(mx, xm, ww);
                   double vvv = p1_at(mx, vv, ww), vg = p1_grad_at(mx, vv, ww);
                   double bv = bubble_at(ww, lo, h), bg = bubble_grad_at(ww, lo, h);
                   return (bv * vvv * xg + xv * bv * vg + xv * vvv * bg) *
                          p1_grad_at(mx, lam, ww);
                 });
        }
      }
      val += beta * bubble_inner(mx, zm, mx, e);
      if (m < M) val -= beta * bubble_inner(g.mesh(m + 1), zeta.vals[m + 1], mx, e);
      out[m][e] = val;
    }
  }
  return out;
}

std::vector<Vec> row_control_space(const SpaceTimeGrid& g, const std::vector<Vec>& rvals,
                                   const ControlSpaceWeights& sw) {
  int M = g.time.slabs();
  std::vector<Vec> out(M + 1);
  for (int m = 0; m <= M; ++m) out[m] = Vec(g.mesh(m).n_elems(), 0.0);
  for (int m = 1; m <= M; ++m) {
    if (slot_empty(sw.amp, m)) continue;
    const SpaceMesh& mx = g.mesh(m);
    double k = g.time.k(m);
    for (int e = 0; e < mx.n_elems(); ++e) {
      double beta = sw.amp[m][e];
      if (beta != 0.0) out[m][e] = k * beta * bubble_inner(mx, rvals[m], mx, e);
    }
  }
  return out;
}

// Tracking misfit x_m - xd_m per slab as nodal fields ([0] unused).
std::vector<Vec> misfit_fields(const ProblemSpec& spec, const DgTrajectory& x) {
  const SpaceTimeGrid& g = *x.grid;
  int M = g.time.slabs();
  std::vector<Vec> out(M + 1);
  for (int m = 1; m <= M; ++m)
    out[m] = vsub(x.vals[m], reference_nodal(spec, g.time.t(m), g.mesh(m)));
  return out;
}

// Riesz coefficients of the control-stationarity residual per slab.
std::vector<Vec> control_residual_fields(const ProblemSpec& spec, const KktSolution& base,
                                         const SecondarySolution* chi, int last) {
  const SpaceTimeGrid& g = *base.x.grid;
  int M = g.time.slabs();
  std::vector<Vec> out(M + 1);
  for (int m = 1; m <= M; ++m) {
    const Vec& u = base.u.vals[m];
    if (chi == nullptr) {
      const Vec& lam = base.lam.vals[m];
      if (base.u.kind == ControlKind::Distributed) {
        out[m] = Vec(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) out[m][i] = spec.alpha * u[i] - lam[i];
      } else {
        out[m] = {spec.alpha * u[0] - lam.front(), spec.alpha * u[1] - lam.back()};
      }
    } else {
      const Vec& q = chi->q.vals[m];
      const Vec& z = chi->z.vals[m];
      double au = m <= last ? spec.alpha : 0.0;
      if (base.u.kind == ControlKind::Distributed) {
        out[m] = Vec(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
          out[m][i] = spec.alpha * q[i] + au * u[i] - z[i];
      } else {
        out[m] = {spec.alpha * q[0] + au * u[0] - z.front(),
                  spec.alpha * q[1] + au * u[1] - z.back()};
      }
    }
  }
  return out;
}

// Misfit-like fields of the curvature system: v_m plus the interest-window
// tracking misfit.
std::vector<Vec> dual_volume_fields(const ProblemSpec& spec, const KktSolution& base,
                                    const SecondarySolution& chi, int last) {
  const SpaceTimeGrid& g = *base.x.grid;
  int M = g.time.slabs();
  std::vector<Vec> out(M + 1);
  auto mis = misfit_fields(spec, base.x);
  for (int m = 1; m <= M; ++m) {
    out[m] = chi.v.vals[m];
    if (m <= last)
      for (std::size_t i = 0; i < out[m].size(); ++i) out[m][i] += mis[m][i];
  }
  return out;
}

}  // namespace

TestFunction TestFunction::zero(GridPtr g) {
  TestFunction tf;
  tf.grid = g;
  int M = g->time.slabs();
  tf.meshes.resize(M + 1);
  tf.left.resize(M + 1);
  tf.right.resize(M + 1);
  for (int m = 1; m <= M; ++m) {
    tf.meshes[m] = g->mesh(m);
    tf.left[m] = Vec(g->mesh(m).n_nodes(), 0.0);
    tf.right[m] = tf.left[m];
  }
  tf.init_mesh = g->mesh(0);
  tf.init = Vec(g->mesh(0).n_nodes(), 0.0);
  return tf;
}

ControlTestFunction ControlTestFunction::zero(GridPtr g, ControlKind kind) {
  ControlTestFunction tf;
  tf.grid = g;
  tf.kind = kind;
  int M = g->time.slabs();
  tf.meshes.resize(M + 1);
  tf.left.resize(M + 1);
  tf.right.resize(M + 1);
  for (int m = 1; m <= M; ++m) {
    tf.meshes[m] = g->mesh(m);
    tf.left[m] = Vec(control_dim(kind, g->mesh(m)), 0.0);
    tf.right[m] = tf.left[m];
  }
  return tf;
}

TestFunction discrete_test(const DgTrajectory& t) {
  TestFunction tf = TestFunction::zero(t.grid);
  int M = t.grid->time.slabs();
  for (int m = 1; m <= M; ++m) {
    tf.left[m] = t.vals[m];
    tf.right[m] = t.vals[m];
  }
  tf.init = t.vals[0];
  return tf;
}

ControlTestFunction discrete_test(const ControlTrajectory& u) {
  ControlTestFunction tf = ControlTestFunction::zero(u.grid, u.kind);
  int M = u.grid->time.slabs();
  for (int m = 1; m <= M; ++m) {
    tf.left[m] = u.vals[m];
    tf.right[m] = u.vals[m];
  }
  return tf;
}

TestFunction reconstruct_time(const DgTrajectory& traj) {
  const SpaceTimeGrid& g = *traj.grid;
  int M = g.time.slabs();
  if (M < 2) throw std::invalid_argument("time reconstruction needs at least two slabs");
  TestFunction tf;
  tf.grid = traj.grid;
  tf.meshes.resize(M + 1);
  tf.left.resize(M + 1);
  tf.right.resize(M + 1);
  for (int m = 1; m <= M; ++m) {
    SpaceMesh cr = common_refinement(g.mesh(m - 1), g.mesh(m));
    tf.left[m] = vsub(prolong(traj.vals[m - 1], g.mesh(m - 1), cr),
                      prolong(traj.vals[m], g.mesh(m), cr));
    tf.right[m] = Vec(cr.n_nodes(), 0.0);
    tf.meshes[m] = std::move(cr);
  }
  tf.init_mesh = g.mesh(0);
  tf.init = Vec(g.mesh(0).n_nodes(), 0.0);
  return tf;
}

ControlTestFunction reconstruct_time(const ControlTrajectory& u) {
  const SpaceTimeGrid& g = *u.grid;
  int M = g.time.slabs();
  if (M < 2) throw std::invalid_argument("time reconstruction needs at least two slabs");
  ControlTestFunction tf;
  tf.grid = u.grid;
  tf.kind = u.kind;
  tf.meshes.resize(M + 1);
  tf.left.resize(M + 1);
  tf.right.resize(M + 1);
  // No sample at t_0: the interpolant is constant on the first slab.
  tf.meshes[1] = g.mesh(1);
  tf.left[1] = Vec(control_dim(u.kind, g.mesh(1)), 0.0);
  tf.right[1] = tf.left[1];
  for (int m = 2; m <= M; ++m) {
    if (u.kind == ControlKind::Distributed) {
      SpaceMesh cr = common_refinement(g.mesh(m - 1), g.mesh(m));
      tf.left[m] =
          vsub(prolong(u.vals[m - 1], g.mesh(m - 1), cr), prolong(u.vals[m], g.mesh(m), cr));
      tf.right[m] = Vec(cr.n_nodes(), 0.0);
      tf.meshes[m] = std::move(cr);
    } else {
      tf.meshes[m] = g.mesh(m);
      tf.left[m] = vsub(u.vals[m - 1], u.vals[m]);
      tf.right[m] = Vec(2, 0.0);
    }
  }
  return tf;
}

Vec reconstruct_space(const Vec& values, const SpaceMesh& mesh) {
  int n = mesh.n_elems();
  if (n < 2) throw std::invalid_argument("space reconstruction needs at least two elements");
  Vec amp(n, 0.0);
  std::vector<int> hits(n, 0);
  for (int i = 1; i + 1 < mesh.n_nodes(); ++i) {
    double hl = mesh.nodes[i] - mesh.nodes[i - 1];
    double hr = mesh.nodes[i + 1] - mesh.nodes[i];
    double d2 = ((values[i + 1] - values[i]) / hr - (values[i] - values[i - 1]) / hl) /
                (mesh.nodes[i + 1] - mesh.nodes[i - 1]);
    amp[i - 1] += -d2 * hl * hl / 4.0;
    amp[i] += -d2 * hr * hr / 4.0;
    ++hits[i - 1];
    ++hits[i];
  }
  for (int e = 0; e < n; ++e)
    if (hits[e] > 1) amp[e] /= hits[e];
  return amp;
}

SpaceWeights space_increments(const DgTrajectory& traj) {
  const SpaceTimeGrid& g = *traj.grid;
  int M = g.time.slabs();
  SpaceWeights sw;
  sw.amp.resize(M + 1);
  for (int m = 0; m <= M; ++m)
    sw.amp[m] = g.mesh(m).n_elems() < 2 ? Vec(g.mesh(m).n_elems(), 0.0)
                                        : reconstruct_space(traj.vals[m], g.mesh(m));
  return sw;
}

ControlSpaceWeights space_increments(const ControlTrajectory& u) {
  const SpaceTimeGrid& g = *u.grid;
  int M = g.time.slabs();
  ControlSpaceWeights sw;
  sw.amp.resize(M + 1);
  if (u.kind == ControlKind::Distributed)
    for (int m = 1; m <= M; ++m)
      sw.amp[m] = g.mesh(m).n_elems() < 2 ? Vec(g.mesh(m).n_elems(), 0.0)
                                          : reconstruct_space(u.vals[m], g.mesh(m));
  return sw;
}

ResidualTriple residuals_primal(const ProblemSpec& spec, const KktSolution& base,
                                const TestFunction& wv, const ControlTestFunction& wq,
                                const TestFunction& wz) {
  ResidualTriple t;
  const SpaceTimeGrid& g = *base.x.grid;
  t.adjoint_row =
      row_adjoint_time(spec, base.x, base.lam, misfit_fields(spec, base.x), nullptr, nullptr, wv);
  t.control_row = row_control_time(g, control_residual_fields(spec, base, nullptr, 0), wq);
  t.state_row = row_state_time(spec, base.x, base.u, initial_nodal(spec, g.mesh(0)), false,
                               nullptr, wz);
  return t;
}

ResidualTriple residuals_dual(const ProblemSpec& spec, const KktSolution& base,
                              const SecondarySolution& chi, const Qoi& qoi,
                              const TestFunction& wx, const ControlTestFunction& wu,
                              const TestFunction& wlam) {
  ResidualTriple t;
  const SpaceTimeGrid& g = *base.x.grid;
  int last = qoi_last_slab(g.time, qoi);
  t.adjoint_row = row_adjoint_time(spec, base.x, chi.z, dual_volume_fields(spec, base, chi, last),
                                   &base.lam, &chi.v, wx);
  t.control_row = row_control_time(g, control_residual_fields(spec, base, &chi, last), wu);
  t.state_row = row_state_time(spec, chi.v, chi.q, Vec(g.mesh(0).n_nodes(), 0.0), true, &base.x,
                               wlam);
  return t;
}

SpaceResidualTriple space_residuals_primal(const ProblemSpec& spec, const KktSolution& base,
                                           const SpaceWeights& wv, const ControlSpaceWeights& wq,
                                           const SpaceWeights& wz) {
  SpaceResidualTriple t;
  const SpaceTimeGrid& g = *base.x.grid;
  t.adjoint_row =
      row_adjoint_space(spec, base.x, base.lam, misfit_fields(spec, base.x), nullptr, nullptr, wv);
  t.control_row = row_control_space(g, control_residual_fields(spec, base, nullptr, 0), wq);
  t.state_row = row_state_space(spec, base.x, base.u, initial_nodal(spec, g.mesh(0)), false,
                                nullptr, wz);
  return t;
}

SpaceResidualTriple space_residuals_dual(const ProblemSpec& spec, const KktSolution& base,
                                         const SecondarySolution& chi, const Qoi& qoi,
                                         const SpaceWeights& wx, const ControlSpaceWeights& wu,
                                         const SpaceWeights& wlam) {
  SpaceResidualTriple t;
  const SpaceTimeGrid& g = *base.x.grid;
  int last = qoi_last_slab(g.time, qoi);
  t.adjoint_row = row_adjoint_space(spec, base.x, chi.z, dual_volume_fields(spec, base, chi, last),
                                    &base.lam, &chi.v, wx);
  t.control_row = row_control_space(g, control_residual_fields(spec, base, &chi, last), wu);
  t.state_row = row_state_space(spec, chi.v, chi.q, Vec(g.mesh(0).n_nodes(), 0.0), true, &base.x,
                                wlam);
  return t;
}

double Indicators::eta_k() const { return std::accumulate(time.begin(), time.end(), 0.0); }

double Indicators::eta_h() const {
  double s = 0.0;
  for (const Vec& row : space) s = std::accumulate(row.begin(), row.end(), s);
  return s;
}

Indicators estimate(const ProblemSpec& spec, const KktSolution& base,
                    const SecondarySolution& chi, const Qoi& qoi) {
  const SpaceTimeGrid& g = *base.x.grid;
  int M = g.time.slabs();
  ResidualTriple p = residuals_primal(spec, base, reconstruct_time(chi.v), reconstruct_time(chi.q),
                                      reconstruct_time(chi.z));
  ResidualTriple d = residuals_dual(spec, base, chi, qoi, reconstruct_time(base.x),
                                    reconstruct_time(base.u), reconstruct_time(base.lam));
  SpaceResidualTriple ps = space_residuals_primal(spec, base, space_increments(chi.v),
                                                  space_increments(chi.q), space_increments(chi.z));
  SpaceResidualTriple ds = space_residuals_dual(spec, base, chi, qoi, space_increments(base.x),
                                                space_increments(base.u),
                                                space_increments(base.lam));
  Indicators ind;
  ind.time = Vec(M + 1, 0.0);
  for (int m = 0; m <= M; ++m)
    ind.time[m] = 0.5 * (p.state_row[m] + p.control_row[m] + p.adjoint_row[m] + d.state_row[m] +
                         d.control_row[m] + d.adjoint_row[m]);
  ind.space.resize(M + 1);
  for (int m = 0; m <= M; ++m) {
    int ne = g.mesh(m).n_elems();
    ind.space[m] = Vec(ne, 0.0);
    for (int e = 0; e < ne; ++e)
      ind.space[m][e] = 0.5 * (ps.state_row[m][e] + ps.control_row[m][e] + ps.adjoint_row[m][e] +
                               ds.state_row[m][e] + ds.control_row[m][e] + ds.adjoint_row[m][e]);
  }
  return ind;
}

double evolution_form(const ProblemSpec& spec, const DgTrajectory& base_x, const DgTrajectory& v,
                      const DgTrajectory& z) {
  const SpaceTimeGrid& g = *v.grid;
  int M = g.time.slabs();
  double total = 0.0;
  for (int m = 1; m <= M; ++m) {
    total += g.time.k(m) * diffusion_derivative(spec, g.mesh(m), base_x.vals[m], v.vals[m],
                                                g.mesh(m), z.vals[m]);
    total += cross_inner(g.mesh(m), v.vals[m], g.mesh(m), z.vals[m]) -
             cross_inner(g.mesh(m - 1), v.vals[m - 1], g.mesh(m), z.vals[m]);
  }
  total += cross_inner(g.mesh(0), v.vals[0], g.mesh(0), z.vals[0]);
  return total;
}

double evolution_form_adjoint(const ProblemSpec& spec, const DgTrajectory& base_x,
                              const DgTrajectory& z, const DgTrajectory& v) {
  const SpaceTimeGrid& g = *v.grid;
  int M = g.time.slabs();
  double total = 0.0;
  for (int m = 1; m <= M; ++m)
    total += g.time.k(m) * diffusion_derivative(spec, g.mesh(m), base_x.vals[m], v.vals[m],
                                                g.mesh(m), z.vals[m]);
  for (int m = 1; m < M; ++m)
    total += cross_inner(g.mesh(m), z.vals[m], g.mesh(m), v.vals[m]) -
             cross_inner(g.mesh(m + 1), z.vals[m + 1], g.mesh(m), v.vals[m]);
  total += cross_inner(g.mesh(M), z.vals[M], g.mesh(M), v.vals[M]);
  total += cross_inner(g.mesh(0), z.vals[0], g.mesh(0), v.vals[0]) -
           cross_inner(g.mesh(1), z.vals[1], g.mesh(0), v.vals[0]);
  return total;
}

}  // namespace mpcdwr
