#include "mpcdwr/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mpcdwr {

void ProblemSpec::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (!(L > 0.0)) throw std::invalid_argument("L must be positive");
  if (dynamics == DynamicsKind::Linear && !(nu > 0.0))
    throw std::invalid_argument("nu must be positive");
  if (dynamics == DynamicsKind::Quasilinear) {
    if (!(d > 0.0)) throw std::invalid_argument("d must be positive");
    if (c < 0.0) throw std::invalid_argument("c must be nonnegative");
  }
  if (!x0_mesh.nodes.empty() && x0_vals.size() != x0_mesh.nodes.size())
    throw std::invalid_argument("initial state values do not match its mesh");
}

double bump(double s) {
  double s2 = s * s;
  if (s2 >= 1.0) return 0.0;
  return 10.0 * std::exp(1.0 - 1.0 / (1.0 - s2));
}

double eval_reference(const ProblemSpec& spec, double t, double w) {
  switch (spec.reference) {
    case ReferenceKind::Static:
      return bump(10.0 / 3.0 * std::abs(w - 1.5));
    case ReferenceKind::Dynamic: {
      double peak = 1.5 - std::cos(M_PI * t / 10.0);
      return bump(10.0 / 3.0 * std::abs(w - peak));
    }
    case ReferenceKind::ExpIncreasing:
      return std::exp(0.5 * t) * bump(10.0 / 3.0 * std::abs(w - 3.0));
  }
  return 0.0;
}

Vec reference_nodal(const ProblemSpec& spec, double t_local, const SpaceMesh& mesh) {
  Vec out(mesh.n_nodes());
  double t = spec.time_offset + t_local;
  for (int i = 0; i < mesh.n_nodes(); ++i) out[i] = eval_reference(spec, t, mesh.nodes[i]);
  return out;
}

Vec initial_nodal(const ProblemSpec& spec, const SpaceMesh& mesh) {
  if (spec.x0_mesh.nodes.empty()) return Vec(mesh.n_nodes(), 0.0);
  return prolong(spec.x0_vals, spec.x0_mesh, mesh);
}

double control_norm_sq(ControlKind kind, const TriMatrix& mass, const Vec& u) {
  if (kind == ControlKind::Distributed) return dot(u, mass.apply(u));
  return u[0] * u[0] + u[1] * u[1];
}

double eval_cost(const DgTrajectory& x, const ControlTrajectory& u, const ProblemSpec& spec,
                 double a, double b) {
  const auto& g = *x.grid;
  double tol = 1e-9 * std::max(1.0, g.time.horizon());
  if (b < a - tol) throw std::invalid_argument("cost window reversed");
  bool a_ok = false, b_ok = false;
  for (double p : g.time.points) {
    if (std::abs(p - a) <= tol) a_ok = true;
    if (std::abs(p - b) <= tol) b_ok = true;
  }
  if (!a_ok || !b_ok) throw std::invalid_argument("cost window must align with slab boundaries");
  double total = 0.0;
  for (int m = 1; m <= g.time.slabs(); ++m) {
    double tm = g.time.t(m);
    if (tm <= a + tol || tm > b + tol) continue;
    const auto& mesh = g.mesh(m);
    auto mass = assemble_mass(mesh);
    Vec xd = reference_nodal(spec, tm, mesh);
    Vec diff = x.vals[m];
    for (int i = 0; i < mesh.n_nodes(); ++i) diff[i] -= xd[i];
    double track = dot(diff, mass.apply(diff));
    double ctrl = control_norm_sq(u.kind, mass, u.vals[m]);
    total += 0.5 * g.time.k(m) * (track + spec.alpha * ctrl);
  }
  return total;
}

int qoi_last_slab(const TimeGrid& time, const Qoi& qoi) {
  if (qoi.kind == Qoi::Kind::Full) return time.slabs();
  double tol = 1e-9 * std::max(1.0, time.horizon());
  double end = time.points.front() + qoi.tau;
  bool aligned = false;
  for (double p : time.points)
    if (std::abs(p - end) <= tol) aligned = true;
  if (!aligned) throw std::invalid_argument("truncation time is not a grid point");
  int last = 0;
  for (int m = 1; m <= time.slabs(); ++m)
    if (time.t(m) <= end + tol) last = m;
  return last;
}

double eval_qoi(const DgTrajectory& x, const ControlTrajectory& u, const ProblemSpec& spec,
                const Qoi& qoi) {
  const auto& time = x.grid->time;
  double a = time.points.front();
  double b = qoi.kind == Qoi::Kind::Full ? time.points.back() : time.t(qoi_last_slab(time, qoi));
  return eval_cost(x, u, spec, a, b);
}

}  // namespace mpcdwr
