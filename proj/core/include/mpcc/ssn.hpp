#pragma once

#include <utility>

#include "mpcc/problem.hpp"
#include "mpcc/trace.hpp"
#include "mpcc/types.hpp"

namespace mpcc {

enum class NcpKind { Min, FischerBurmeister };

/// Complementarity residual function: zero iff a >= 0, b >= 0, ab = 0.
struct NcpFunction {
  NcpKind kind = NcpKind::FischerBurmeister;

  double eval(double a, double b) const;

  /// One element (∂a, ∂b) of the generalized derivative. Tie conventions are
  /// fixed: min takes the limit from the region a <= b, and
  /// Fischer-Burmeister at the origin takes (1/√2 − 1) in both slots.
  std::pair<double, double> derivative(double a, double b) const;
};

double ncp_eval(const NcpFunction& f, double a, double b);

/// Residual whose zero level set is the per-pair M-stationarity set
///   0 <= G ⊥ H >= 0,  G νG = 0,  H νH = 0,  (νG, νH >= 0  or  νG νH = 0).
/// Built from min/abs/Fischer-Burmeister pieces, so it is piecewise smooth
/// everywhere; the concrete composition is this repo's construction and is
/// pinned down by the truth-table property, not by any external formula.
Eigen::Vector2d m_stat_residual(double G, double H, double nu_G, double nu_H);

/// One element of the generalized Jacobian of m_stat_residual with respect
/// to (G, H, nu_G, nu_H); selection conventions as in NcpFunction, with
/// sign(0) = +1 for the absolute-value pieces.
Eigen::Matrix<double, 2, 4> m_stat_jacobian(double G, double H, double nu_G,
                                            double nu_H);

/// Stacked M-stationarity system
///   F = [∇_z L; FB(g_i, νg_i); h_i; Φ(G_i, H_i, νG_i, νH_i)],
/// of length n + p + q + 2r. The pair block is interleaved, two rows per i.
Vector assemble_F(const MpccProblem& problem, const Vector& z,
                  const MultiplierSet& m);

/// Generalized Jacobian of F with respect to x = (z, νg, νh, νG, νH).
/// Uses the problem Hessian when supplied, central differences of ∇_z L
/// otherwise.
Matrix assemble_F_jacobian(const MpccProblem& problem, const Vector& z,
                           const MultiplierSet& m);

struct SsnParams {
  double tol = 1e-8;
  int max_iter = 200;
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
};

/// Semismooth Newton on F = 0 with Armijo backtracking on ½‖F‖². The input
/// x0 stacks (z, νg, νh, νG, νH). Singular Newton systems are retried with a
/// perturbed Jacobian before reporting SingularJacobian; stagnation at a
/// nonsmooth corner reports LineSearchFail.
SolveTrace solve_semismooth_newton(const MpccProblem& problem,
                                   const Vector& x0,
                                   const SsnParams& params = {});

}  // namespace mpcc
