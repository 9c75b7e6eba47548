#include "mpcc/toys.hpp"

namespace mpcc::toys {

MpccProblem linear_axes() {
  MpccProblem p;
  p.name = "linear-axes";
  p.n_vars = 2;
  p.n_ineq = 1;
  p.n_comp = 1;
  p.f = [](const Vector& z) { return z[0] + z[1]; };
  p.grad_f = [](const Vector&) { return Vector::Constant(2, 1.0).eval(); };
  p.g = [](const Vector& z) { return Vector::Constant(1, z[0] + z[1]).eval(); };
  p.jac_g = [](const Vector&) {
    Matrix j(1, 2);
    j << 1.0, 1.0;
    return j;
  };
  p.G = [](const Vector& z) { return Vector::Constant(1, z[0]).eval(); };
  p.jac_G = [](const Vector&) {
    Matrix j(1, 2);
    j << 1.0, 0.0;
    return j;
  };
  p.H = [](const Vector& z) { return Vector::Constant(1, z[1]).eval(); };
  p.jac_H = [](const Vector&) {
    Matrix j(1, 2);
    j << 0.0, 1.0;
    return j;
  };
  // Everything is affine.
  p.lagrangian_hessian = [](const Vector&, double, const Vector&,
                            const Vector&, const Vector&, const Vector&) {
    return Matrix::Zero(2, 2).eval();
  };
  return p;
}

namespace {
double cubic(double t) { return t * t * t / 3.0 - 2.25 * t * t + 4.5 * t; }
double cubic_d(double t) { return (t - 1.5) * (t - 3.0); }
double cubic_dd(double t) { return 2.0 * t - 4.5; }
}  // namespace

MpccProblem cubic_axes() {
  MpccProblem p;
  p.name = "cubic-axes";
  p.n_vars = 2;
  p.n_comp = 1;
  p.f = [](const Vector& z) {
    return (z[0] - 3.0) * (z[0] - 3.0) + (z[1] - 3.0) * (z[1] - 3.0);
  };
  p.grad_f = [](const Vector& z) {
    Vector grad(2);
    grad << 2.0 * z[0] - 6.0, 2.0 * z[1] - 6.0;
    return grad;
  };
  p.G = [](const Vector& z) { return Vector::Constant(1, cubic(z[0])).eval(); };
  p.jac_G = [](const Vector& z) {
    Matrix j = Matrix::Zero(1, 2);
    j(0, 0) = cubic_d(z[0]);
    return j;
  };
  p.H = [](const Vector& z) { return Vector::Constant(1, cubic(z[1])).eval(); };
  p.jac_H = [](const Vector& z) {
    Matrix j = Matrix::Zero(1, 2);
    j(0, 1) = cubic_d(z[1]);
    return j;
  };
  p.lagrangian_hessian = [](const Vector& z, double sigma, const Vector&,
                            const Vector&, const Vector& nu_G,
                            const Vector& nu_H) {
    Matrix w = Matrix::Zero(2, 2);
    w(0, 0) = 2.0 * sigma - nu_G[0] * cubic_dd(z[0]);
    w(1, 1) = 2.0 * sigma - nu_H[0] * cubic_dd(z[1]);
    return w;
  };
  return p;
}

}  // namespace mpcc::toys
