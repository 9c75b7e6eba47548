#pragma once

#include <vector>

#include "mpcc/nlp.hpp"
#include "mpcc/problem.hpp"
#include "mpcc/types.hpp"

namespace mpcc {

enum class SolveStatus {
  Converged,
  NotConverged,
  InnerFailure,
  LineSearchFail,
  SingularJacobian,
  IterLimit,
};

const char* to_string(SolveStatus status);

/// One outer round of a homotopy solve (or one Newton phase for the
/// semismooth method).
struct TraceRecord {
  int outer = 0;
  double param = 0.0;  // pi or tau driving this round
  double eps = 0.0;    // inner KKT tolerance requested
  Vector z;
  int inner_iterations = 0;
  NlpStatus inner_status = NlpStatus::Converged;
  KktResidual kkt;
  double comp_violation = 0.0;  // max_i min(|G_i|, |H_i|)
  double product = 0.0;         // G(z)ᵀH(z)
  double wall_time = 0.0;
};

struct SolveTrace {
  std::vector<TraceRecord> records;
  SolveStatus status = SolveStatus::NotConverged;
  Vector z;
  MultiplierSet multipliers;  // in MPCC form (augmented/composed)
  double objective = 0.0;
  double final_param = 0.0;
  double wall_time = 0.0;

  int inner_iterations_total() const {
    int total = 0;
    for (const auto& r : records) total += r.inner_iterations;
    return total;
  }
};

}  // namespace mpcc
