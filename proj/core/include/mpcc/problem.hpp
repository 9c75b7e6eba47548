#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mpcc/types.hpp"

namespace mpcc {

/// Mathematical program with complementarity constraints,
///
///   min f(z)  s.t.  g(z) >= 0,  h(z) = 0,  0 <= G(z) ⊥ H(z) >= 0,
///
/// supplied as a callback bundle with first derivatives. Callbacks must be
/// deterministic, re-entrant and total on the (optional) variable box, so
/// several solves may run concurrently on distinct iterate storage.
struct MpccProblem {
  int n_vars = 0;
  int n_ineq = 0;  // p
  int n_eq = 0;    // q
  int n_comp = 0;  // r, number of complementarity pairs

  std::function<double(const Vector&)> f;
  std::function<Vector(const Vector&)> grad_f;

  // Constraint evaluators; may be left empty when the matching count is 0.
  std::function<Vector(const Vector&)> g, h, G, H;
  // Jacobians, one row per constraint, n_vars columns.
  std::function<Matrix(const Vector&)> jac_g, jac_h, jac_G, jac_H;

  /// Optional weighted Hessian
  ///   sigma * ∇²f − Σ νg_i ∇²g_i − Σ νh_i ∇²h_i − Σ νG_i ∇²G_i − Σ νH_i ∇²H_i.
  /// Only problems that need second-order solves supply it.
  std::function<Matrix(const Vector&, double, const Vector&, const Vector&,
                       const Vector&, const Vector&)>
      lagrangian_hessian;

  // Optional per-variable domain box metadata.
  std::optional<Vector> lower_bounds, upper_bounds;

  std::string name;
};

/// Lagrange multipliers (νg, νh, νG, νH) for the MPCC Lagrangian
///   L = f − νgᵀg − νhᵀh − νGᵀG − νHᵀH,
/// which carries no G_i·H_i product terms. Sign conditions are checked by
/// classify_stationarity, not stored.
struct MultiplierSet {
  Vector nu_g, nu_h, nu_G, nu_H;

  static MultiplierSet zeros(const MpccProblem& p) {
    return {Vector::Zero(p.n_ineq), Vector::Zero(p.n_eq),
            Vector::Zero(p.n_comp), Vector::Zero(p.n_comp)};
  }
};

/// Active sets at a point under a tolerance. Indices are 0-based.
/// I_G, I_H, I_GH are pairwise disjoint and cover every pair with
/// min(|G_i|, |H_i|) <= tol; pairs with both values above tol (possible on
/// complementarity-infeasible iterates) belong to none of them.
struct IndexSets {
  std::vector<int> I_g;
  std::vector<int> I_G;
  std::vector<int> I_H;
  std::vector<int> I_GH;
  double tol = 0.0;
};

enum class StationarityLevel { None, W, A, C, M, S };

const char* to_string(StationarityLevel level);

struct StationarityVerdict {
  StationarityLevel level = StationarityLevel::None;
  double residual = 0.0;  // ‖∇_z L‖_∞
  std::vector<std::string> violated_conditions;
};

/// Partition the active constraints at z. Pairs with G_i <= tol < H_i land in
/// I_G, symmetrically for I_H, and doubly-active pairs in I_GH; inequality
/// indices with |g_i| <= tol land in I_g.
/// Throws FeasibilityError (naming the index) if G_i < -tol or H_i < -tol.
IndexSets compute_index_sets(const MpccProblem& problem, const Vector& z,
                             double tol);

/// max_i min(|G_i(z)|, |H_i(z)|); zero iff componentwise complementarity
/// holds exactly. Returns 0 for problems without complementarity pairs.
double complementarity_violation(const MpccProblem& problem, const Vector& z);

/// ∇f − Jgᵀνg − Jhᵀνh − JGᵀνG − JHᵀνH at z.
Vector lagrangian_grad(const MpccProblem& problem, const Vector& z,
                       const MultiplierSet& m);

/// Grade (z, m) against the W/A/C/M/S stationarity conditions, mapping every
/// exact-arithmetic ">= 0" to ">= -tol" and "= 0" to "|.| <= tol", and report
/// the strongest satisfied level. Residual above tol, or failure of the base
/// sign/complementarity conditions, yields level None with the offending
/// conditions listed.
StationarityVerdict classify_stationarity(const MpccProblem& problem,
                                          const Vector& z,
                                          const MultiplierSet& m, double tol);

}  // namespace mpcc
