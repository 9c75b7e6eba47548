#include "mpcc/svm.hpp"

#include <cmath>

#include "mpcc/errors.hpp"

namespace mpcc {

double rbf_kernel(const Vector& x1, const Vector& x2, double gamma) {
  if (x1.size() != x2.size())
    throw ContractError("rbf_kernel: dimension mismatch");
  if (gamma < 0.0) throw ContractError("rbf_kernel: gamma must be >= 0");
  return std::exp(-gamma * (x1 - x2).squaredNorm());
}

Matrix kernel_matrix(const Matrix& X, const Vector& y, double gamma,
                     bool* duplicate_rows) {
  const int n = static_cast<int>(X.rows());
  if (y.size() != n) throw ContractError("kernel_matrix: label count");
  Matrix q(n, n);
  bool dup = false;
  for (int i = 0; i < n; ++i) {
    q(i, i) = 1.0;  // y_i² exp(0)
    for (int j = i + 1; j < n; ++j) {
      const double d2 = (X.row(i) - X.row(j)).squaredNorm();
      if (d2 == 0.0) dup = true;
      // Flush far-out kernel values to exact zero rather than subnormals.
      const double e = -gamma * d2;
      const double v = e < -700.0 ? 0.0 : y[i] * y[j] * std::exp(e);
      q(i, j) = v;
      q(j, i) = v;
    }
  }
  if (duplicate_rows) *duplicate_rows = dup;
  return q;
}

SmoothIndicator smooth_indicator(double alpha, double C, double tau_ind) {
  if (C <= 0.0) throw ContractError("smooth_indicator: C must be positive");
  SmoothIndicator w;
  if (alpha < 0.0 || alpha > C) return w;  // outside branch: identically 0
  const double t = 2.0 * alpha / C - 1.0;
  w.value = 1.0 - t * t + tau_ind;
  const double c2 = C * C, c3 = c2 * C, c4 = c3 * C;
  w.d_alpha = (4.0 * C - 8.0 * alpha) / c2;
  w.d2_alpha = -8.0 / c2;
  w.d_C = (8.0 * alpha * alpha - 4.0 * alpha * C) / c3;
  w.d2_C = (8.0 * alpha * C - 24.0 * alpha * alpha) / c4;
  w.d_alpha_C = (16.0 * alpha - 4.0 * C) / c3;
  return w;
}

double svm_bias(const Vector& alpha, double C, double gamma,
                const Dataset& data, double tau_ind) {
  const int n = data.n();
  if (alpha.size() != n) throw ContractError("svm_bias: alpha size");
  double weight_sum = 0.0, acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = smooth_indicator(alpha[i], C, tau_ind).value;
    if (w == 0.0) continue;
    double margin = 0.0;
    for (int j = 0; j < n; ++j)
      margin += alpha[j] * data.y[j] *
                std::exp(-gamma * (data.X.row(i) - data.X.row(j)).squaredNorm());
    acc += w * (data.y[i] - margin);
    weight_sum += w;
  }
  if (weight_sum <= 0.0)
    throw FeasibilityError("svm_bias: all indicator weights vanish");
  return acc / weight_sum;
}

BiasDerivatives bias_with_derivatives(const Vector& alpha, double C,
                                      double gamma, const Matrix& kernel,
                                      const Matrix& sqdist, const Vector& y,
                                      double tau_ind) {
  const int n = static_cast<int>(alpha.size());
  if (kernel.rows() != n || sqdist.rows() != n || y.size() != n)
    throw ContractError("bias_with_derivatives: dimension mismatch");
  (void)gamma;  // kernel already carries exp(-gamma d_ij)

  // Interior-branch indicator values; the closed forms stay valid slightly
  // outside [0, C], which keeps the bias smooth for barrier iterates.
  Vector omega(n), omega_a(n), omega_aa(n), omega_c(n), omega_cc(n),
      omega_ac(n);
  const double c2 = C * C, c3 = c2 * C, c4 = c3 * C;
  for (int i = 0; i < n; ++i) {
    const double a = alpha[i];
    const double t = 2.0 * a / C - 1.0;
    omega[i] = 1.0 - t * t + tau_ind;
    omega_a[i] = (4.0 * C - 8.0 * a) / c2;
    omega_aa[i] = -8.0 / c2;
    omega_c[i] = (8.0 * a * a - 4.0 * a * C) / c3;
    omega_cc[i] = (8.0 * a * C - 24.0 * a * a) / c4;
    omega_ac[i] = (16.0 * a - 4.0 * C) / c3;
  }

  const Vector ay = alpha.cwiseProduct(y);
  const Vector q = kernel * ay;                                // Σ α y K
  const Vector t1 = kernel.cwiseProduct(sqdist) * ay;          // Σ α y d K
  const Vector t2 =
      kernel.cwiseProduct(sqdist.cwiseProduct(sqdist)) * ay;   // Σ α y d² K
  const Vector residual = y - q;

  const double s = omega.sum();
  if (std::abs(s) < 1e-300)
    throw FeasibilityError("bias_with_derivatives: weight sum vanishes");
  const double s_c = omega_c.sum();
  const double s_cc = omega_cc.sum();

  BiasDerivatives b;
  const double f = omega.dot(residual);
  b.value = f / s;

  // First order. S does not depend on gamma.
  Vector f_a(n);
  for (int k = 0; k < n; ++k)
    f_a[k] = omega_a[k] * residual[k] - y[k] * kernel.col(k).dot(omega);
  b.d_alpha = (f_a - b.value * omega_a) / s;
  const double f_c = omega_c.dot(residual);
  b.d_C = (f_c - b.value * s_c) / s;
  const double f_g = omega.dot(t1);
  b.d_gamma = f_g / s;

  // Second order, from b_xy = (f_xy − b S_xy − S_x b_y − S_y b_x) / S.
  b.d2_alpha.resize(n, n);
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      double f_kl = -omega_a[k] * y[l] * kernel(k, l) -
                    omega_a[l] * y[k] * kernel(l, k);
      double s_kl = 0.0;
      if (k == l) {
        f_kl += omega_aa[k] * residual[k];
        s_kl = omega_aa[k];
      }
      const double v = (f_kl - b.value * s_kl - omega_a[k] * b.d_alpha[l] -
                        omega_a[l] * b.d_alpha[k]) /
                       s;
      b.d2_alpha(k, l) = v;
      b.d2_alpha(l, k) = v;
    }
  }

  b.d2_alpha_C.resize(n);
  b.d2_alpha_gamma.resize(n);
  for (int k = 0; k < n; ++k) {
    const double f_kc =
        omega_ac[k] * residual[k] - y[k] * kernel.col(k).dot(omega_c);
    b.d2_alpha_C[k] = (f_kc - b.value * omega_ac[k] - omega_a[k] * b.d_C -
                       s_c * b.d_alpha[k]) /
                      s;
    const double f_kg = omega_a[k] * t1[k] +
                        y[k] * (kernel.col(k).cwiseProduct(sqdist.col(k)))
                                   .dot(omega);
    b.d2_alpha_gamma[k] = (f_kg - omega_a[k] * b.d_gamma) / s;
  }

  const double f_ccd = omega_cc.dot(residual);
  b.d2_C = (f_ccd - b.value * s_cc - 2.0 * s_c * b.d_C) / s;
  b.d2_gamma = omega.dot(-t2) / s;
  b.d2_C_gamma = (omega_c.dot(t1) - s_c * b.d_gamma) / s;
  return b;
}

TrainedSvm train_dual_svm(const Dataset& data, double C, double gamma,
                          double eps) {
  if (C <= 0.0 || gamma <= 0.0)
    throw ContractError("train_dual_svm: C and gamma must be positive");
  const int n = data.n();
  const Matrix q = kernel_matrix(data.X, data.y, gamma);
  const Vector y = data.y;

  Nlp qp;
  qp.name = "dual-svm";
  qp.n_vars = n;
  qp.n_ineq = 2 * n;
  qp.n_eq = 1;
  qp.objective = [q](const Vector& a) {
    return 0.5 * a.dot(q * a) - a.sum();
  };
  qp.gradient = [q, n](const Vector& a) {
    return (q * a - Vector::Ones(n)).eval();
  };
  qp.c_ineq = [C, n](const Vector& a) {
    Vector c(2 * n);
    c.head(n) = a;
    c.tail(n) = Vector::Constant(n, C) - a;
    return c;
  };
  qp.jac_ineq = [n](const Vector&) {
    Matrix j(2 * n, n);
    j.topRows(n) = Matrix::Identity(n, n);
    j.bottomRows(n) = -Matrix::Identity(n, n);
    return j;
  };
  qp.c_eq = [y](const Vector& a) {
    return Vector::Constant(1, y.dot(a)).eval();
  };
  qp.jac_eq = [y](const Vector&) { return Matrix(y.transpose()); };
  qp.lagrangian_hessian = [q](const Vector&, double sigma, const Vector&,
                              const Vector&) { return (sigma * q).eval(); };

  const Vector a0 = Vector::Constant(n, std::min(C / 2.0, 1.0));
  NlpResult inner = solve_nlp(qp, a0, eps);

  TrainedSvm out;
  out.model.alpha = inner.z;
  out.model.C = C;
  out.model.gamma = gamma;
  out.model.data = data;
  out.model.bias = svm_bias(inner.z, C, gamma, data);
  out.v = inner.mult_ineq.head(n);
  out.w = inner.mult_ineq.tail(n);
  out.u = -inner.mult_eq[0];
  out.inner = inner;
  return out;
}

int predict(const SvmModel& model, const Vector& x) {
  if (x.size() != model.data.d()) throw ContractError("predict: feature size");
  double score = model.bias;
  for (int j = 0; j < model.data.n(); ++j)
    score += model.alpha[j] * model.data.y[j] *
             std::exp(-model.gamma *
                      (model.data.X.row(j).transpose() - x).squaredNorm());
  return score < 0.0 ? -1 : 1;
}

double accuracy(const SvmModel& model, const Dataset& data) {
  if (data.n() == 0) return 0.0;
  int correct = 0;
  for (int i = 0; i < data.n(); ++i)
    if (predict(model, data.X.row(i).transpose()) ==
        static_cast<int>(data.y[i]))
      ++correct;
  return static_cast<double>(correct) / data.n();
}

}  // namespace mpcc
