#include "mpcdwr/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace mpcdwr {

namespace {
constexpr double kGaussX[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGaussW[3] = {0.5555555555555556, 0.8888888888888888, 0.5555555555555556};
}  // namespace

Vec TriMatrix::apply(const Vec& x) const {
  Vec y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double v = diag[i] * x[i];
    if (i > 0) v += sub[i - 1] * x[i - 1];
    if (i + 1 < n) v += sup[i] * x[i + 1];
    y[i] = v;
  }
  return y;
}

Vec TriMatrix::apply_transpose(const Vec& x) const {
  Vec y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double v = diag[i] * x[i];
    if (i > 0) v += sup[i - 1] * x[i - 1];
    if (i + 1 < n) v += sub[i] * x[i + 1];
    y[i] = v;
  }
  return y;
}

void TriMatrix::add_scaled(const TriMatrix& other, double factor) {
  for (int i = 0; i < n; ++i) diag[i] += factor * other.diag[i];
  for (int i = 0; i + 1 < n; ++i) {
    sub[i] += factor * other.sub[i];
    sup[i] += factor * other.sup[i];
  }
}

void TriMatrix::scale(double factor) {
  for (auto& v : diag) v *= factor;
  for (auto& v : sub) v *= factor;
  for (auto& v : sup) v *= factor;
}

TriLU TriLU::factor(const TriMatrix& a) {
  TriLU f;
  f.n = a.n;
  f.dl = a.sub;
  f.d = a.diag;
  f.du = a.sup;
  f.du2.assign(a.n > 2 ? a.n - 2 : 0, 0.0);
  f.piv.assign(a.n, 0);
  int n = f.n;
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(f.d[i]) >= std::abs(f.dl[i])) {
      f.piv[i] = i;
      if (f.d[i] == 0.0) throw std::runtime_error("singular tridiagonal system");
      double fact = f.dl[i] / f.d[i];
      f.dl[i] = fact;
      f.d[i + 1] -= fact * f.du[i];
    } else {
      f.piv[i] = i + 1;
      double fact = f.d[i] / f.dl[i];
      f.d[i] = f.dl[i];
      f.dl[i] = fact;
      double tmp = f.du[i];
      f.du[i] = f.d[i + 1];
      f.d[i + 1] = tmp - fact * f.d[i + 1];
      if (i + 2 < n) {
        f.du2[i] = f.du[i + 1];
        f.du[i + 1] = -fact * f.du[i + 1];
      }
    }
  }
  f.piv[n - 1] = n - 1;
  if (f.d[n - 1] == 0.0) throw std::runtime_error("singular tridiagonal system");
  return f;
}

Vec TriLU::solve(const Vec& rhs) const {
  Vec x = rhs;
  for (int i = 0; i + 1 < n; ++i) {
    if (piv[i] == i) {
      x[i + 1] -= dl[i] * x[i];
    } else {
      double tmp = x[i];
      x[i] = x[i + 1];
      x[i + 1] = tmp - dl[i] * x[i];
    }
  }
  x[n - 1] /= d[n - 1];
  if (n > 1) x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
  for (int i = n - 3; i >= 0; --i) x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
  return x;
}

TriMatrix assemble_mass(const SpaceMesh& mesh) {
  TriMatrix m = TriMatrix::zero(mesh.n_nodes());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    double h = mesh.h(e);
    m.diag[e] += h / 3.0;
    m.diag[e + 1] += h / 3.0;
    m.sub[e] += h / 6.0;
    m.sup[e] += h / 6.0;
  }
  return m;
}

TriMatrix assemble_stiffness(const SpaceMesh& mesh, const Vec& coeff) {
  if (static_cast<int>(coeff.size()) != mesh.n_elems())
    throw std::invalid_argument("stiffness coefficient count mismatch");
  TriMatrix k = TriMatrix::zero(mesh.n_nodes());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    if (coeff[e] < 0.0) throw std::invalid_argument("negative diffusion coefficient");
    double v = coeff[e] / mesh.h(e);
    k.diag[e] += v;
    k.diag[e + 1] += v;
    k.sub[e] -= v;
    k.sup[e] -= v;
  }
  return k;
}

TriMatrix assemble_stiffness(const SpaceMesh& mesh, double coeff) {
  return assemble_stiffness(mesh, Vec(mesh.n_elems(), coeff));
}

Vec assemble_quasilinear_residual(const SpaceMesh& mesh, const Vec& xh, double c, double d) {
  if (d <= 0.0) throw std::invalid_argument("degenerate diffusion: d must be positive");
  if (c < 0.0) throw std::invalid_argument("negative quasilinear coefficient");
  Vec r(mesh.n_nodes(), 0.0);
  for (int e = 0; e < mesh.n_elems(); ++e) {
    double h = mesh.h(e);
    double dx = (xh[e + 1] - xh[e]) / h;
    double ikappa = 0.0;  // Integral of kappa(x) over the element
    for (int q = 0; q < 3; ++q) {
      double th = 0.5 * (1.0 + kGaussX[q]);
      double x = (1.0 - th) * xh[e] + th * xh[e + 1];
      ikappa += 0.5 * h * kGaussW[q] * (c * x * x + d);
    }
    r[e] -= ikappa * dx / h;
    r[e + 1] += ikappa * dx / h;
  }
  return r;
}

TriMatrix assemble_quasilinear_jacobian(const SpaceMesh& mesh, const Vec& xh, double c,
                                        double d) {
  if (d <= 0.0) throw std::invalid_argument("degenerate diffusion: d must be positive");
  TriMatrix a = TriMatrix::zero(mesh.n_nodes());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    double h = mesh.h(e);
    double dx = (xh[e + 1] - xh[e]) / h;
    double dphi[2] = {-1.0 / h, 1.0 / h};
    double loc[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (int q = 0; q < 3; ++q) {
      double th = 0.5 * (1.0 + kGaussX[q]);
      double w = 0.5 * h * kGaussW[q];
      double phi[2] = {1.0 - th, th};
      double x = phi[0] * xh[e] + phi[1] * xh[e + 1];
      double kap = c * x * x + d;
      double dkap = 2.0 * c * x;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          loc[i][j] += w * (kap * dphi[j] + dkap * phi[j] * dx) * dphi[i];
    }
    a.diag[e] += loc[0][0];
    a.diag[e + 1] += loc[1][1];
    a.sup[e] += loc[0][1];
    a.sub[e] += loc[1][0];
  }
  return a;
}

TriMatrix assemble_quasilinear_second_form(const SpaceMesh& mesh, const Vec& xh, const Vec& lam,
                                           double c, double d) {
  (void)d;
  TriMatrix w2 = TriMatrix::zero(mesh.n_nodes());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    double h = mesh.h(e);
    double dx = (xh[e + 1] - xh[e]) / h;
    double dlam = (lam[e + 1] - lam[e]) / h;
    double dphi[2] = {-1.0 / h, 1.0 / h};
    double loc[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (int q = 0; q < 3; ++q) {
      double th = 0.5 * (1.0 + kGaussX[q]);
      double wq = 0.5 * h * kGaussW[q];
      double phi[2] = {1.0 - th, th};
      double x = phi[0] * xh[e] + phi[1] * xh[e + 1];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          loc[i][j] += wq * 2.0 * c *
                       (phi[i] * phi[j] * dx + x * phi[i] * dphi[j] + x * phi[j] * dphi[i]) *
                       dlam;
    }
    w2.diag[e] += loc[0][0];
    w2.diag[e + 1] += loc[1][1];
    w2.sup[e] += loc[0][1];
    w2.sub[e] += loc[1][0];
  }
  return w2;
}

Vec control_apply(ControlKind kind, const SpaceMesh& mesh, const Vec& u, const TriMatrix& mass) {
  if (kind == ControlKind::Distributed) return mass.apply(u);
  Vec b(mesh.n_nodes(), 0.0);
  b.front() += u[0];
  b.back() += u[1];
  return b;
}

Vec control_adjoint(ControlKind kind, const SpaceMesh& mesh, const Vec& lam) {
  (void)mesh;
  if (kind == ControlKind::Distributed) return lam;
  return {lam.front(), lam.back()};
}

int control_dim(ControlKind kind, const SpaceMesh& mesh) {
  return kind == ControlKind::Distributed ? mesh.n_nodes() : 2;
}

void constrain_matrix(TriMatrix& a) {
  int n = a.n;
  a.diag[0] = 1.0;
  a.diag[n - 1] = 1.0;
  if (n > 1) {
    a.sup[0] = 0.0;
    a.sub[0] = 0.0;
    a.sup[n - 2] = 0.0;
    a.sub[n - 2] = 0.0;
  }
}

void constrain_vec(Vec& v) {
  v.front() = 0.0;
  v.back() = 0.0;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vec axpy(double a, const Vec& x, const Vec& y) {
  Vec out(y.size());
  for (size_t i = 0; i < y.size(); ++i) out[i] = a * x[i] + y[i];
  return out;
}

}  // namespace mpcdwr
