#pragma once

#include <functional>
#include <string>

#include "mpcc/types.hpp"

namespace mpcc {

/// Smooth NLP   min f(z)  s.t.  c_ineq(z) >= 0,  c_eq(z) = 0,
/// as a callback bundle. The optional Hessian evaluator returns the weighted
/// Lagrangian Hessian
///   sigma * ∇²f − Σ λ_i ∇²c_ineq_i − Σ y_j ∇²c_eq_j;
/// when it is absent the solver falls back to damped rank-two updates.
struct Nlp {
  int n_vars = 0;
  int n_ineq = 0;
  int n_eq = 0;

  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  std::function<Vector(const Vector&)> c_ineq, c_eq;
  std::function<Matrix(const Vector&)> jac_ineq, jac_eq;
  std::function<Matrix(const Vector&, double, const Vector&, const Vector&)>
      lagrangian_hessian;

  std::string name;
};

enum class NlpStatus { Converged, IterLimit, LineSearchFail, Diverged };

const char* to_string(NlpStatus status);

struct NlpResult {
  Vector z;
  Vector mult_ineq;  // >= 0
  Vector mult_eq;    // free
  KktResidual residuals;
  double kkt_residual = 0.0;  // max of the three residual norms
  NlpStatus status = NlpStatus::IterLimit;
  int iterations = 0;
  double wall_time = 0.0;
};

struct NlpOptions {
  int max_iter = 500;
  double mu0 = 0.02;
  // Optional multiplier warm start; sizes must match when nonempty.
  Vector mult_ineq0, mult_eq0;
};

/// Primal-dual interior-point method with slack variables, fraction-to-
/// boundary rule 0.995, monotone barrier reduction mu <- max(eps/10, 0.2 mu)
/// and an l1-merit Armijo backtracking line search. On Converged the point
/// is an eps-KKT point: stationarity norm <= eps, primal feasibility within
/// eps, multiplier signs exact, complementarity products |c_i λ_i| <= eps.
/// z0 need not be feasible; slacks start at max(c_ineq(z0), 0.1).
NlpResult solve_nlp(const Nlp& nlp, const Vector& z0, double eps,
                    const NlpOptions& opts = {});

/// The three residual norms of solve_nlp's convergence test, recomputed from
/// scratch: stationarity ‖∇f − Jineqᵀλ − Jeqᵀy‖_∞, feasibility
/// max(‖c_eq‖_∞, ‖min(c_ineq, 0)‖_∞), complementarity max_i |c_ineq_i λ_i|.
KktResidual kkt_residual_nlp(const Nlp& nlp, const Vector& z,
                             const Vector& mult_ineq, const Vector& mult_eq);

}  // namespace mpcc
