#include "mpcdwr/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace mpcdwr {

DgTrajectory DgTrajectory::zeros(GridPtr g) {
  DgTrajectory t;
  t.grid = g;
  t.vals.resize(g->time.slabs() + 1);
  for (int m = 0; m <= g->time.slabs(); ++m) t.vals[m].assign(g->mesh(m).n_nodes(), 0.0);
  return t;
}

ControlTrajectory ControlTrajectory::zeros(GridPtr g, ControlKind kind) {
  ControlTrajectory u;
  u.grid = g;
  u.kind = kind;
  u.vals.resize(g->time.slabs() + 1);
  for (int m = 1; m <= g->time.slabs(); ++m)
    u.vals[m].assign(control_dim(kind, g->mesh(m)), 0.0);
  return u;
}

Vec jump(const DgTrajectory& traj, int m) {
  const auto& g = *traj.grid;
  if (m < 0 || m >= g.time.slabs()) throw std::out_of_range("jump index out of range");
  auto cr = common_refinement(g.mesh(m), g.mesh(m + 1));
  Vec plus = prolong(traj.vals[m + 1], g.mesh(m + 1), cr);
  Vec minus = prolong(traj.vals[m], g.mesh(m), cr);
  for (size_t i = 0; i < plus.size(); ++i) plus[i] -= minus[i];
  return plus;
}

namespace {
void require_time_refinement(const TimeGrid& src, const TimeGrid& tgt) {
  double tol = 1e-9 * std::max(1.0, src.horizon());
  for (double p : src.points) {
    bool found = false;
    for (double q : tgt.points)
      if (std::abs(p - q) <= tol) {
        found = true;
        break;
      }
    if (!found)
      throw std::invalid_argument("transfer target is not a time refinement of the source");
  }
}
}  // namespace

DgTrajectory transfer(const DgTrajectory& traj, GridPtr target) {
  const auto& src = *traj.grid;
  const auto& tgt = *target;
  require_time_refinement(src.time, tgt.time);
  DgTrajectory out;
  out.grid = target;
  out.vals.resize(tgt.time.slabs() + 1);
  out.vals[0] = prolong(traj.vals[0], src.mesh(0), tgt.mesh(0));
  for (int m = 1; m <= tgt.time.slabs(); ++m) {
    int j = src.time.slab_of(0.5 * (tgt.time.t(m - 1) + tgt.time.t(m)));
    out.vals[m] = prolong(traj.vals[j], src.mesh(j), tgt.mesh(m));
  }
  return out;
}

ControlTrajectory transfer(const ControlTrajectory& u, GridPtr target) {
  const auto& src = *u.grid;
  const auto& tgt = *target;
  require_time_refinement(src.time, tgt.time);
  ControlTrajectory out;
  out.grid = target;
  out.kind = u.kind;
  out.vals.resize(tgt.time.slabs() + 1);
  for (int m = 1; m <= tgt.time.slabs(); ++m) {
    int j = src.time.slab_of(0.5 * (tgt.time.t(m - 1) + tgt.time.t(m)));
    if (u.kind == ControlKind::Distributed)
      out.vals[m] = prolong(u.vals[j], src.mesh(j), tgt.mesh(m));
    else
      out.vals[m] = u.vals[j];
  }
  return out;
}

Vec l2v_norm(const DgTrajectory& traj, NormWeight weight) {
  const auto& g = *traj.grid;
  Vec out(g.time.slabs() + 1, 0.0);
  for (int m = 0; m <= g.time.slabs(); ++m) {
    const auto& mesh = g.mesh(m);
    double val = 0.0;
    if (weight.l2_part) {
      auto mass = assemble_mass(mesh);
      val += std::sqrt(std::max(0.0, dot(traj.vals[m], mass.apply(traj.vals[m]))));
    }
    if (weight.grad_part_coeff != 0.0) {
      auto stiff = assemble_stiffness(mesh, 1.0);
      val += weight.grad_part_coeff *
             std::sqrt(std::max(0.0, dot(traj.vals[m], stiff.apply(traj.vals[m]))));
    }
    out[m] = val;
  }
  return out;
}

Vec cross_mass_apply(const SpaceMesh& from, const Vec& v, const SpaceMesh& to) {
  auto cr = common_refinement(from, to);
  Vec pv = prolong(v, from, cr);
  auto mass = assemble_mass(cr);
  return restrict_dual(mass.apply(pv), cr, to);
}

Vec l2_project(const SpaceMesh& from, const Vec& v, const SpaceMesh& to) {
  Vec rhs = cross_mass_apply(from, v, to);
  auto lu = TriLU::factor(assemble_mass(to));
  return lu.solve(rhs);
}

double cross_inner(const SpaceMesh& ma, const Vec& a, const SpaceMesh& mb, const Vec& b) {
  auto cr = common_refinement(ma, mb);
  Vec pa = prolong(a, ma, cr);
  Vec pb = prolong(b, mb, cr);
  double sum = 0.0;
  for (int e = 0; e < cr.n_elems(); ++e)
    sum += cr.h(e) / 6.0 *
           (2.0 * pa[e] * pb[e] + pa[e] * pb[e + 1] + pa[e + 1] * pb[e] +
            2.0 * pa[e + 1] * pb[e + 1]);
  return sum;
}

}  // namespace mpcdwr
