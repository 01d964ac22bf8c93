#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "mpcdwr/fem.hpp"

using namespace mpcdwr;

namespace {

const double g5x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                       0.9061798459386640};
const double g5w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                       0.4786286704993665, 0.2369268850561891};

// Reference assembly with 5-point Gauss, structured independently of the
// closed-form element matrices in fem.cpp.
TriMatrix reference_mass(const SpaceMesh& mesh) {
  TriMatrix m = TriMatrix::zero(mesh.n_nodes());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    double h = mesh.h(e);
    for (int q = 0; q < 5; ++q) {
      double th = 0.5 * (1.0 + g5x[q]);
      double w = 0.5 * h * g5w[q];
      double phi[2] = {1.0 - th, th};
      m.diag[e] += w * phi[0] * phi[0];
      m.diag[e + 1] += w * phi[1] * phi[1];
      m.sub[e] += w * phi[1] * phi[0];
      m.sup[e] += w * phi[0] * phi[1];
    }
  }
  return m;
}

void check_tri_close(const TriMatrix& a, const TriMatrix& b, double tol) {
  REQUIRE(a.n == b.n);
  for (int i = 0; i < a.n; ++i) CHECK(a.diag[i] == doctest::Approx(b.diag[i]).epsilon(tol));
  for (int i = 0; i + 1 < a.n; ++i) {
    CHECK(a.sub[i] == doctest::Approx(b.sub[i]).epsilon(tol));
    CHECK(a.sup[i] == doctest::Approx(b.sup[i]).epsilon(tol));
  }
}

}  // namespace

TEST_CASE("mass matrix entries") {
  SpaceMesh m{{0.0, 0.5, 1.0}, {0, 0}};
  auto mm = assemble_mass(m);
  CHECK(mm.diag == Vec{1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0});
  CHECK(mm.sub == Vec{1.0 / 12.0, 1.0 / 12.0});
  CHECK(mm.sup == Vec{1.0 / 12.0, 1.0 / 12.0});

  SpaceMesh one{{0.0, 1.0}, {0}};
  auto m1 = assemble_mass(one);
  CHECK(m1.diag == Vec{1.0 / 3.0, 1.0 / 3.0});
  CHECK(m1.sub == Vec{1.0 / 6.0});
}

TEST_CASE("mass entries sum to the domain length") {
  SpaceMesh m{{0.0, 0.3, 0.9, 2.1, 3.0}, {0, 0, 0, 0}};
  auto mm = assemble_mass(m);
  double total = 0.0;
  for (double v : mm.diag) total += v;
  for (double v : mm.sub) total += v;
  for (double v : mm.sup) total += v;
  CHECK(total == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("stiffness matrix entries") {
  SpaceMesh m{{0.0, 0.5, 1.0}, {0, 0}};
  auto k = assemble_stiffness(m, Vec{1.0, 1.0});
  CHECK(k.diag == Vec{2.0, 4.0, 2.0});
  CHECK(k.sub == Vec{-2.0, -2.0});
  CHECK(k.sup == Vec{-2.0, -2.0});

  auto kz = assemble_stiffness(m, Vec{0.0, 0.0});
  CHECK(kz.diag == Vec{0.0, 0.0, 0.0});

  SpaceMesh one{{0.0, 1.0}, {0}};
  auto kc = assemble_stiffness(one, Vec{0.7});
  CHECK(kc.diag == Vec{0.7, 0.7});
  CHECK(kc.sub == Vec{-0.7});

  CHECK_THROWS(assemble_stiffness(m, Vec{-1.0, 1.0}));
}

TEST_CASE("assembly matches 5-point Gauss reference") {
  SpaceMesh m{{0.0, 0.4, 1.1, 1.9, 3.0}, {0, 0, 0, 0}};
  check_tri_close(assemble_mass(m), reference_mass(m), 1e-12);
}

TEST_CASE("quasilinear residual") {
  SpaceMesh m{{0.0, 0.7, 1.6, 3.0}, {0, 0, 0}};
  Vec constant(m.n_nodes(), 2.5);
  auto r0 = assemble_quasilinear_residual(m, constant, 1.0, 1.0);
  for (double v : r0) CHECK(v == doctest::Approx(0.0).epsilon(1e-14));

  // c = 0 reduces to the linear stiffness action
  Vec x{0.1, -0.4, 0.9, 0.2};
  auto rl = assemble_quasilinear_residual(m, x, 0.0, 0.8);
  auto k = assemble_stiffness(m, 0.8);
  auto kx = k.apply(x);
  for (int i = 0; i < m.n_nodes(); ++i) CHECK(rl[i] == doctest::Approx(kx[i]).epsilon(1e-13));

  // hand integral: x(s) = s on [0,1], kappa = s^2 + 1 -> Integral = 4/3
  SpaceMesh one{{0.0, 1.0}, {0}};
  auto r = assemble_quasilinear_residual(one, {0.0, 1.0}, 1.0, 1.0);
  CHECK(r[0] == doctest::Approx(-4.0 / 3.0).epsilon(1e-14));
  CHECK(r[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-14));

  CHECK_THROWS(assemble_quasilinear_residual(one, {0.0, 1.0}, 1.0, 0.0));
}

TEST_CASE("quasilinear jacobian") {
  SpaceMesh m{{0.0, 0.6, 1.4, 2.2, 3.0}, {0, 0, 0, 0}};
  Vec x{0.3, -0.5, 1.1, 0.4, -0.2};

  auto a0 = assemble_quasilinear_jacobian(m, x, 0.0, 0.9);
  check_tri_close(a0, assemble_stiffness(m, 0.9), 1e-13);

  Vec zero(m.n_nodes(), 0.0);
  auto az = assemble_quasilinear_jacobian(m, zero, 2.0, 0.9);
  check_tri_close(az, assemble_stiffness(m, 0.9), 1e-13);

  // central differences of the residual column by column
  double c = 1.3, d = 0.7, eps = 1e-5;
  auto a = assemble_quasilinear_jacobian(m, x, c, d);
  for (int j = 0; j < m.n_nodes(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += eps;
    xm[j] -= eps;
    auto rp = assemble_quasilinear_residual(m, xp, c, d);
    auto rm = assemble_quasilinear_residual(m, xm, c, d);
    for (int i = 0; i < m.n_nodes(); ++i) {
      double fd = (rp[i] - rm[i]) / (2.0 * eps);
      double aij = 0.0;
      if (i == j) aij = a.diag[i];
      else if (i == j + 1) aij = a.sub[j];
      else if (j == i + 1) aij = a.sup[i];
      CHECK(aij == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("quasilinear second form is the x-derivative of the weighted jacobian") {
  SpaceMesh m{{0.0, 0.8, 1.7, 3.0}, {0, 0, 0}};
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ur(-1.0, 1.0);
  Vec x(m.n_nodes()), lam(m.n_nodes()), v(m.n_nodes()), w(m.n_nodes());
  for (auto* vec : {&x, &lam, &v, &w})
    for (auto& s : *vec) s = ur(rng);
  double c = 0.9, d = 0.5;

  auto w2 = assemble_quasilinear_second_form(m, x, lam, c, d);
  for (int i = 0; i + 1 < m.n_nodes(); ++i)
    CHECK(w2.sub[i] == doctest::Approx(w2.sup[i]).epsilon(1e-13));

  double eps = 1e-6;
  auto ap = assemble_quasilinear_jacobian(m, axpy(eps, v, x), c, d);
  auto am = assemble_quasilinear_jacobian(m, axpy(-eps, v, x), c, d);
  double fd = (dot(lam, ap.apply(w)) - dot(lam, am.apply(w))) / (2.0 * eps);
  CHECK(dot(w, w2.apply(v)) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("pivoted tridiagonal solve") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ur(-2.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 1 + static_cast<int>(rng() % 9);
    TriMatrix a = TriMatrix::zero(n);
    for (int i = 0; i < n; ++i) a.diag[i] = ur(rng);
    for (int i = 0; i + 1 < n; ++i) {
      a.sub[i] = ur(rng);
      a.sup[i] = ur(rng);
    }
    Vec xref(n);
    for (auto& v : xref) v = ur(rng);
    Vec b = a.apply(xref);
    auto lu = TriLU::factor(a);
    Vec x = lu.solve(b);
    double scale = 0.0;
    for (double v : xref) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < n; ++i) CHECK(std::abs(x[i] - xref[i]) <= 1e-9 * std::max(1.0, scale));

    // transpose path
    Vec bt = a.apply_transpose(xref);
    auto lut = TriLU::factor(a.transposed());
    Vec xt = lut.solve(bt);
    for (int i = 0; i < n; ++i) CHECK(std::abs(xt[i] - xref[i]) <= 1e-9 * std::max(1.0, scale));
  }
}

TEST_CASE("control action") {
  SpaceMesh m{{0.0, 0.5, 1.0}, {0, 0}};
  auto mass = assemble_mass(m);

  Vec ones(m.n_nodes(), 1.0);
  auto b = control_apply(ControlKind::Distributed, m, ones, mass);
  CHECK(b[0] == doctest::Approx(0.25));  // hat integrals
  CHECK(b[1] == doctest::Approx(0.5));
  CHECK(b[2] == doctest::Approx(0.25));

  auto bn = control_apply(ControlKind::NeumannBoundary, m, {1.0, 0.0}, mass);
  CHECK(bn == Vec{1.0, 0.0, 0.0});

  Vec zero(m.n_nodes(), 0.0);
  auto bz = control_apply(ControlKind::Distributed, m, zero, mass);
  CHECK(bz == Vec{0.0, 0.0, 0.0});

  Vec lam{0.2, 0.7, -0.1};
  CHECK(control_adjoint(ControlKind::Distributed, m, lam) == lam);
  CHECK(control_adjoint(ControlKind::NeumannBoundary, m, lam) == Vec{0.2, -0.1});
  CHECK(control_dim(ControlKind::Distributed, m) == 3);
  CHECK(control_dim(ControlKind::NeumannBoundary, m) == 2);
}

TEST_CASE("dirichlet constraint rows") {
  SpaceMesh m{{0.0, 1.0, 2.0, 3.0}, {0, 0, 0}};
  auto k = assemble_stiffness(m, 1.0);
  constrain_matrix(k);
  CHECK(k.diag[0] == 1.0);
  CHECK(k.diag[3] == 1.0);
  CHECK(k.sup[0] == 0.0);
  CHECK(k.sub[0] == 0.0);
  CHECK(k.sup[2] == 0.0);
  CHECK(k.sub[2] == 0.0);
  CHECK(k.diag[1] == 2.0);

  Vec v{1.0, 2.0, 3.0, 4.0};
  constrain_vec(v);
  CHECK(v == Vec{0.0, 2.0, 3.0, 0.0});
}
