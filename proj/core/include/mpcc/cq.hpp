#pragma once

#include <vector>

#include "mpcc/problem.hpp"
#include "mpcc/types.hpp"

namespace mpcc {

enum class CqKind { Licq, MfcqT, MfcqR };

/// Outcome of a constraint-qualification test.
///
/// When holds is false, (lambda, mu) is a positive-linear dependence
/// certificate for the tested (A, B) family: lambda >= 0 on the
/// sign-constrained part, ‖(lambda, mu)‖_∞ = 1 and
/// ‖Σ lambda_i a_i + Σ mu_j b_j‖_∞ = certificate_residual <= 1e-8.
/// When holds is true for the MFCQ forms, direction is a primal witness d
/// with bᵀd = 0 on the equality family and aᵀd >= certificate_residual > 0
/// on the strict family. Verdicts whose deciding quantity fell inside the
/// [1e-10, 1e-8] gray zone carry the marginal flag.
struct CqVerdict {
  bool holds = false;
  CqKind which_cq = CqKind::Licq;
  bool marginal = false;
  Vector direction;
  Vector lambda;
  Vector mu;
  double certificate_residual = 0.0;
};

/// Decide whether (A, B) is positive-linearly independent: no scalars
/// lambda >= 0, mu free, not all zero, give Σ lambda_i a_i + Σ mu_j b_j = 0.
/// Decided by a bounded linear feasibility program; a certificate is
/// returned either way (dependence multipliers or a strict direction).
CqVerdict positive_linear_independence(const std::vector<Vector>& A,
                                       const std::vector<Vector>& B);

/// Rank test on the family {∇h} ∪ {∇g: I_g} ∪ {∇G: I_G ∪ I_GH} ∪
/// {∇H: I_H ∪ I_GH}; holds iff the numerical rank (singular values above
/// 1e-10 times the largest) equals the family size.
CqVerdict check_mpcc_licq(const MpccProblem& problem, const Vector& z,
                          double tol);

/// MFCQ of the tightened program: strict family A = {∇g: I_g}, equality
/// family B = {∇h} ∪ {∇G: I_G ∪ I_GH} ∪ {∇H: I_H ∪ I_GH}.
CqVerdict check_mpcc_mfcq_t(const MpccProblem& problem, const Vector& z,
                            double tol);

/// MFCQ of the relaxed program: the biactive ∇G, ∇H move into the strict
/// family A = {∇g: I_g} ∪ {∇G, ∇H: I_GH}; B = {∇h} ∪ {∇G: I_G} ∪ {∇H: I_H}.
CqVerdict check_mpcc_mfcq_r(const MpccProblem& problem, const Vector& z,
                            double tol);

}  // namespace mpcc
