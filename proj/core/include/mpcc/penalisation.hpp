#pragma once

#include "mpcc/nlp.hpp"
#include "mpcc/problem.hpp"
#include "mpcc/trace.hpp"

namespace mpcc {

struct PenalisationParams {
  double pi0 = 100.0;
  double pi_factor = 10.0;
  double eps0 = 1e-2;
  double eps_factor = 0.1;
  double eps_floor = 1e-6;
  double eps_exit = 1e-6;
  int max_outer = 12;
  int inner_max_iter = 500;
};

/// Partial penalisation subproblem: objective f(z) + pi * G(z)ᵀH(z) over the
/// relaxed-feasible set g >= 0, h = 0, G >= 0, H >= 0. Inequality rows are
/// stacked [g; G; H].
Nlp build_penalised(const MpccProblem& problem, double pi);

/// Sequential partial penalisation: solve P_pi to tolerance eps^t, warm-start
/// the next round from the previous point and multipliers, and grow pi until
/// the componentwise complementarity criterion max_i min(|G_i|,|H_i|) meets
/// eps_exit (the product criterion G(z)ᵀH(z) is recorded alongside). The
/// returned multipliers are the augmented ones
///   ν̂G_i = νG_i − pi H_i(z),  ν̂H_i = νH_i − pi G_i(z).
SolveTrace solve_sequential_penalisation(const MpccProblem& problem,
                                         const Vector& z0,
                                         const PenalisationParams& params = {});

/// Single penalised solve with a fixed parameter; same exit reporting.
SolveTrace solve_exact_penalisation(const MpccProblem& problem,
                                    const Vector& z0, double pi, double eps,
                                    const PenalisationParams& params = {});

}  // namespace mpcc
