#pragma once

#include "mpcdwr/grid.hpp"

namespace mpcdwr {

// Tridiagonal matrix: sub[i] = A(i+1,i), diag[i] = A(i,i), sup[i] = A(i,i+1).
struct TriMatrix {
  int n = 0;
  Vec sub, diag, sup;

  static TriMatrix zero(int n) { return {n, Vec(n > 0 ? n - 1 : 0, 0.0), Vec(n, 0.0), Vec(n > 0 ? n - 1 : 0, 0.0)}; }
  Vec apply(const Vec& x) const;
  Vec apply_transpose(const Vec& x) const;
  TriMatrix transposed() const { return {n, sup, diag, sub}; }
  void add_scaled(const TriMatrix& other, double factor);
  void scale(double factor);
};

// LU factorization of a tridiagonal matrix with partial pivoting. Row swaps
// between adjacent rows introduce fill-in on a second superdiagonal.
struct TriLU {
  int n = 0;
  Vec dl, d, du, du2;
  std::vector<int> piv;

  static TriLU factor(const TriMatrix& a);
  Vec solve(const Vec& rhs) const;
};

// M_ij = Integral of phi_i phi_j, exact.
TriMatrix assemble_mass(const SpaceMesh& mesh);
// K_ij = sum_e coeff_e * Integral_e phi_i' phi_j'. coeff per element, >= 0.
TriMatrix assemble_stiffness(const SpaceMesh& mesh, const Vec& coeff);
TriMatrix assemble_stiffness(const SpaceMesh& mesh, double coeff);

// Weak form of the quasilinear diffusion  w -> Integral kappa(x) x' w'  with
// kappa(x) = c x^2 + d, by 3-point Gauss per element (exact through degree 5).
Vec assemble_quasilinear_residual(const SpaceMesh& mesh, const Vec& xh, double c, double d);
// Directional derivative of the residual at xh (nonsymmetric).
TriMatrix assemble_quasilinear_jacobian(const SpaceMesh& mesh, const Vec& xh, double c, double d);
// lambda-weighted second linearization: W(v, w) = Integral 2c (v w x' + x v w' + x w v') lam'.
// Symmetric; enters the Hessian of the Lagrangian.
TriMatrix assemble_quasilinear_second_form(const SpaceMesh& mesh, const Vec& xh, const Vec& lam,
                                           double c, double d);

enum class ControlKind { Distributed, NeumannBoundary };

// B u as a load vector. Distributed: mass product with nodal u (full domain).
// NeumannBoundary: u = (u_left, u_right) adds point loads at the two ends.
Vec control_apply(ControlKind kind, const SpaceMesh& mesh, const Vec& u, const TriMatrix& mass);
// Riesz representative of B* lam in the control space: nodal copy of lam
// (Distributed, R_u = mass) or endpoint values (NeumannBoundary, R_u = I2).
Vec control_adjoint(ControlKind kind, const SpaceMesh& mesh, const Vec& lam);
int control_dim(ControlKind kind, const SpaceMesh& mesh);

// Homogeneous Dirichlet rows at both ends: zero row and column, unit diagonal.
void constrain_matrix(TriMatrix& a);
void constrain_vec(Vec& v);

double dot(const Vec& a, const Vec& b);
Vec axpy(double a, const Vec& x, const Vec& y);  // a*x + y

}  // namespace mpcdwr
