#include "mpcc/ssn.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>

#include "mpcc/errors.hpp"

namespace mpcc {

namespace {

double sign1(double x) { return x < 0.0 ? -1.0 : 1.0; }  // sign(0) = +1

}  // namespace

double NcpFunction::eval(double a, double b) const {
  if (kind == NcpKind::Min) return std::min(a, b);
  return std::sqrt(a * a + b * b) - a - b;
}

std::pair<double, double> NcpFunction::derivative(double a, double b) const {
  if (kind == NcpKind::Min) {
    // Limit from the region a <= b.
    return a <= b ? std::make_pair(1.0, 0.0) : std::make_pair(0.0, 1.0);
  }
  const double norm = std::hypot(a, b);
  if (norm == 0.0) {
    const double v = 1.0 / std::sqrt(2.0) - 1.0;
    return {v, v};
  }
  return {a / norm - 1.0, b / norm - 1.0};
}

double ncp_eval(const NcpFunction& f, double a, double b) {
  return f.eval(a, b);
}

// The multiplier sign set {νG, νH >= 0} ∪ {νG νH = 0} is the union of the
// first quadrant and the two axes; min of the two distances-to-set pieces
// vanishes exactly on the union.
namespace {

double sign_set_residual(double nu_G, double nu_H) {
  const double axes = std::min(std::abs(nu_G), std::abs(nu_H));
  const double quadrant = std::max(std::max(-nu_G, -nu_H), 0.0);
  return std::min(axes, quadrant);
}

// Derivative of sign_set_residual in (nu_G, nu_H) with the documented tie
// conventions (min takes its first branch, max the earlier argument).
std::pair<double, double> sign_set_derivative(double nu_G, double nu_H) {
  const double axes = std::min(std::abs(nu_G), std::abs(nu_H));
  const double quadrant = std::max(std::max(-nu_G, -nu_H), 0.0);
  if (axes <= quadrant) {
    if (std::abs(nu_G) <= std::abs(nu_H)) return {sign1(nu_G), 0.0};
    return {0.0, sign1(nu_H)};
  }
  if (-nu_G >= quadrant) return {-1.0, 0.0};
  if (-nu_H >= quadrant) return {0.0, -1.0};
  return {0.0, 0.0};
}

const NcpFunction kFb{NcpKind::FischerBurmeister};

}  // namespace

Eigen::Vector2d m_stat_residual(double G, double H, double nu_G, double nu_H) {
  Eigen::Vector2d r;
  r[0] = kFb.eval(G, H);
  r[1] = std::abs(G * nu_G) + std::abs(H * nu_H) + sign_set_residual(nu_G, nu_H);
  return r;
}

Eigen::Matrix<double, 2, 4> m_stat_jacobian(double G, double H, double nu_G,
                                            double nu_H) {
  Eigen::Matrix<double, 2, 4> j = Eigen::Matrix<double, 2, 4>::Zero();
  const auto [da, db] = kFb.derivative(G, H);
  j(0, 0) = da;
  j(0, 1) = db;

  const double s1 = sign1(G * nu_G);
  const double s2 = sign1(H * nu_H);
  j(1, 0) = s1 * nu_G;
  j(1, 2) = s1 * G;
  j(1, 1) = s2 * nu_H;
  j(1, 3) = s2 * H;
  const auto [dg, dh] = sign_set_derivative(nu_G, nu_H);
  j(1, 2) += dg;
  j(1, 3) += dh;
  return j;
}

namespace {

struct Unpacked {
  Vector z;
  MultiplierSet m;
};

Unpacked unpack(const MpccProblem& p, const Vector& x) {
  const int n = p.n_vars;
  Unpacked u;
  u.z = x.head(n);
  u.m.nu_g = x.segment(n, p.n_ineq);
  u.m.nu_h = x.segment(n + p.n_ineq, p.n_eq);
  u.m.nu_G = x.segment(n + p.n_ineq + p.n_eq, p.n_comp);
  u.m.nu_H = x.tail(p.n_comp);
  return u;
}

}  // namespace

Vector assemble_F(const MpccProblem& problem, const Vector& z,
                  const MultiplierSet& m) {
  const int n = problem.n_vars, p = problem.n_ineq, q = problem.n_eq,
            r = problem.n_comp;
  Vector f(n + p + q + 2 * r);
  f.head(n) = lagrangian_grad(problem, z, m);
  if (p > 0) {
    const Vector gv = problem.g(z);
    for (int i = 0; i < p; ++i) f[n + i] = kFb.eval(gv[i], m.nu_g[i]);
  }
  if (q > 0) f.segment(n + p, q) = problem.h(z);
  if (r > 0) {
    const Vector Gv = problem.G(z);
    const Vector Hv = problem.H(z);
    for (int i = 0; i < r; ++i)
      f.segment(n + p + q + 2 * i, 2) =
          m_stat_residual(Gv[i], Hv[i], m.nu_G[i], m.nu_H[i]);
  }
  return f;
}

Matrix assemble_F_jacobian(const MpccProblem& problem, const Vector& z,
                           const MultiplierSet& m) {
  const int n = problem.n_vars, p = problem.n_ineq, q = problem.n_eq,
            r = problem.n_comp;
  const int dim = n + p + q + 2 * r;
  Matrix j = Matrix::Zero(dim, dim);

  Matrix jg, jh, jG, jH;
  if (p > 0) jg = problem.jac_g(z);
  if (q > 0) jh = problem.jac_h(z);
  if (r > 0) {
    jG = problem.jac_G(z);
    jH = problem.jac_H(z);
  }

  // ∇_z L block: Hessian w.r.t. z, constraint Jacobians w.r.t. multipliers.
  if (problem.lagrangian_hessian) {
    j.topLeftCorner(n, n) =
        problem.lagrangian_hessian(z, 1.0, m.nu_g, m.nu_h, m.nu_G, m.nu_H);
  } else {
    const double h_fd = 1e-7;
    for (int c = 0; c < n; ++c) {
      Vector zp = z, zm = z;
      zp[c] += h_fd;
      zm[c] -= h_fd;
      j.block(0, c, n, 1) = (lagrangian_grad(problem, zp, m) -
                             lagrangian_grad(problem, zm, m)) /
                            (2.0 * h_fd);
    }
  }
  if (p > 0) j.block(0, n, n, p) = -jg.transpose();
  if (q > 0) j.block(0, n + p, n, q) = -jh.transpose();
  if (r > 0) {
    j.block(0, n + p + q, n, r) = -jG.transpose();
    j.block(0, n + p + q + r, n, r) = -jH.transpose();
  }

  if (p > 0) {
    const Vector gv = problem.g(z);
    for (int i = 0; i < p; ++i) {
      const auto [da, db] = kFb.derivative(gv[i], m.nu_g[i]);
      j.block(n + i, 0, 1, n) = da * jg.row(i);
      j(n + i, n + i) = db;
    }
  }
  if (q > 0) j.block(n + p, 0, q, n) = jh;
  if (r > 0) {
    const Vector Gv = problem.G(z);
    const Vector Hv = problem.H(z);
    for (int i = 0; i < r; ++i) {
      const auto block = m_stat_jacobian(Gv[i], Hv[i], m.nu_G[i], m.nu_H[i]);
      const int row = n + p + q + 2 * i;
      for (int s = 0; s < 2; ++s) {
        j.block(row + s, 0, 1, n) =
            block(s, 0) * jG.row(i) + block(s, 1) * jH.row(i);
        j(row + s, n + p + q + i) = block(s, 2);
        j(row + s, n + p + q + r + i) = block(s, 3);
      }
    }
  }
  return j;
}

SolveTrace solve_semismooth_newton(const MpccProblem& problem,
                                   const Vector& x0, const SsnParams& params) {
  const int n = problem.n_vars, p = problem.n_ineq, q = problem.n_eq,
            r = problem.n_comp;
  const int dim = n + p + q + 2 * r;
  if (x0.size() != dim)
    throw ContractError("solve_semismooth_newton: x0 must stack z and all "
                        "multipliers");
  const auto t_start = std::chrono::steady_clock::now();

  SolveTrace trace;
  Vector x = x0;
  trace.status = SolveStatus::IterLimit;

  auto record = [&](int iter, const Unpacked& u, double fnorm) {
    TraceRecord rec;
    rec.outer = iter;
    rec.eps = params.tol;
    rec.z = u.z;
    rec.inner_iterations = 1;
    rec.kkt.stationarity = fnorm;
    rec.comp_violation = complementarity_violation(problem, u.z);
    rec.product = r > 0 ? problem.G(u.z).dot(problem.H(u.z)) : 0.0;
    rec.wall_time = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
    trace.records.push_back(rec);
  };

  for (int iter = 0; iter < params.max_iter; ++iter) {
    Unpacked u = unpack(problem, x);
    const Vector f = assemble_F(problem, u.z, u.m);
    const double fnorm = f.lpNorm<Eigen::Infinity>();
    record(iter, u, fnorm);
    if (fnorm <= params.tol) {
      trace.status = SolveStatus::Converged;
      break;
    }

    Matrix jac = assemble_F_jacobian(problem, u.z, u.m);
    Vector d;
    bool solved = false;
    double delta = 0.0;
    for (int tries = 0; tries < 6; ++tries) {
      Matrix jreg = jac + delta * Matrix::Identity(dim, dim);
      Eigen::PartialPivLU<Matrix> lu(jreg);
      d = lu.solve(-f);
      const double resid = (jreg * d + f).lpNorm<Eigen::Infinity>();
      if (d.allFinite() && resid <= 1e-8 * std::max(1.0, fnorm)) {
        solved = true;
        break;
      }
      delta = delta == 0.0 ? 1e-8 : delta * 100.0;
    }
    if (!solved) {
      trace.status = SolveStatus::SingularJacobian;
      break;
    }

    // Armijo on ½‖F‖² along the Newton direction.
    const double theta0 = 0.5 * f.squaredNorm();
    const double slope = f.dot(jac * d);  // = -‖F‖² for an exact solve
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls <= params.max_backtracks; ++ls) {
      const Vector x_trial = x + alpha * d;
      const Unpacked ut = unpack(problem, x_trial);
      const Vector f_trial = assemble_F(problem, ut.z, ut.m);
      const double theta = 0.5 * f_trial.squaredNorm();
      if (std::isfinite(theta) &&
          theta <= theta0 + params.armijo_slope * alpha * slope) {
        x = x_trial;
        accepted = true;
        break;
      }
      alpha *= params.backtrack;
    }
    if (!accepted) {
      trace.status = SolveStatus::LineSearchFail;
      break;
    }
  }

  const Unpacked u = unpack(problem, x);
  trace.z = u.z;
  trace.multipliers = u.m;
  trace.objective = problem.f(u.z);
  trace.final_param = 0.0;
  trace.wall_time = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
  return trace;
}

}  // namespace mpcc
