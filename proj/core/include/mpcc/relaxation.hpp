#pragma once

#include "mpcc/nlp.hpp"
#include "mpcc/problem.hpp"
#include "mpcc/trace.hpp"

namespace mpcc {

struct RelaxationParams {
  double tau0 = 0.01;
  double tau_factor = 0.1;
  double tau_floor = 1e-6;
  double eps0 = 1e-2;
  double eps_factor = 0.1;
  double eps_floor = 1e-6;
  double eps_exit = 1e-6;
  int max_outer = 12;
  int inner_max_iter = 500;
};

/// Scholtes subproblem R_tau: objective f over g >= 0, h = 0, G >= 0, H >= 0
/// and one product constraint tau - G_i H_i >= 0 per pair. Inequality rows
/// are stacked [g; G; H; tau - G∘H]; the product rows have Jacobian
/// -(H_i ∇G_i + G_i ∇H_i).
Nlp build_relaxed(const MpccProblem& problem, double tau);

/// Sequential Scholtes relaxation: shrink tau by tau_factor down to
/// tau_floor, warm-starting each round, until the componentwise criterion
/// max_i min(|G_i|,|H_i|) <= eps_exit. The returned multipliers fold the
/// active product rows into the pair multipliers:
///   ν̂G_i = −νGH_i H_i and ν̂H_i = −νGH_i G_i on {i : G_i H_i = tau},
/// which carry the C-stationarity sign pattern ν̂G_i ν̂H_i >= 0.
SolveTrace solve_sequential_relaxation(const MpccProblem& problem,
                                       const Vector& z0,
                                       const RelaxationParams& params = {});

/// Single R_tau solve; complementarity and feasibility are recorded whatever
/// the inner outcome (tau = 0 reproduces the MPCC's own constraints, where
/// the inner solver is expected to struggle).
SolveTrace solve_exact_relaxation(const MpccProblem& problem, const Vector& z0,
                                  double tau, double eps,
                                  const RelaxationParams& params = {});

}  // namespace mpcc
