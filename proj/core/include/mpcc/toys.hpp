#pragma once

#include "mpcc/problem.hpp"

namespace mpcc::toys {

/// min z1 + z2  s.t.  z1 + z2 >= 0,  0 <= z1 ⊥ z2 >= 0.
/// Feasible set: the two nonnegative axes. The origin is biactive.
MpccProblem linear_axes();

/// min (z1-3)² + (z2-3)²  s.t.  0 <= G(z1) ⊥ H(z2) >= 0 with the cubic
/// G(t) = t³/3 − 9t²/4 + 9t/2, which vanishes only at t = 0. Feasible set:
/// the two nonnegative axes; local minima at (3,0) and (0,3) with f = 9.
/// The penalised formulation is stationary at the infeasible point (3,3)
/// for every penalty parameter.
MpccProblem cubic_axes();

}  // namespace mpcc::toys
