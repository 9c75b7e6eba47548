#pragma once

#include "mpcc/types.hpp"

namespace mpcc::detail {

/// Dense bounded-variable simplex for
///   min cᵀx  s.t.  A x = b,  lb <= x <= ub.
/// Internal kernel for the constraint-qualification certifiers; adequate for
/// a few thousand columns. Not a general-purpose LP interface.
struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded, IterLimit };
  Status status = Status::IterLimit;
  Vector x;
  double objective = 0.0;
};

LpResult solve_lp(const Matrix& A, const Vector& b, const Vector& c,
                  const Vector& lb, const Vector& ub, int max_pivots = 20000);

}  // namespace mpcc::detail
