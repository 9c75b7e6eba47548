#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include <mpcc/errors.hpp>
#include <mpcc/hypertune.hpp>
#include <mpcc/rng.hpp>
#include <mpcc/svm.hpp>

namespace mpcc::test {

/// Two Gaussian blobs with alternating labels, linearly separated-ish.
inline Dataset blob_dataset(int n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  data.name = "blobs";
  data.X.resize(n, 2);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    const double cx = pos ? 1.0 : -1.0;
    data.X(i, 0) = cx + 0.6 * rng.next_gaussian();
    data.X(i, 1) = -cx + 0.6 * rng.next_gaussian();
    data.y[i] = pos ? 1.0 : -1.0;
  }
  return data;
}

/// Hand-built plan over 12 alternating-label points: every training fold is
/// perfectly balanced, which pins the closed-form centre initialisation.
inline FoldPlan balanced_plan() {
  Dataset data;
  data.name = "balanced";
  data.X.resize(12, 2);
  data.y.resize(12);
  Rng rng(55);
  for (int i = 0; i < 12; ++i) {
    data.X(i, 0) = rng.next_gaussian();
    data.X(i, 1) = rng.next_gaussian();
    data.y[i] = i % 2 == 0 ? 1.0 : -1.0;
  }
  FoldPlan plan;
  plan.data = data;
  plan.K = 3;
  plan.validation = {{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}};
  plan.seed = 0;
  return plan;
}

/// Feasible model point whose first training fold carries three duplicated
/// margin points, so at least three complementarity pairs are biactive.
/// Twins are (3,6), (4,7), (5,8): they fall in different validation folds,
/// hence fold 0 trains on all six while folds 1 and 2 see no duplicates.
struct DegenerateModelPoint {
  FoldPlan plan;
  ModelM model;
  Vector z;
  double C = 0.0, gamma = 0.5;
};

inline DegenerateModelPoint duplicated_margin_point(std::uint64_t seed) {
  const double gamma = 0.5;
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(seed + attempt * 1013);
    Dataset data;
    data.name = "degenerate";
    data.X.resize(9, 2);
    data.y.resize(9);
    // Fillers 0..2 and margin points 3..5; 6..8 duplicate 3..5.
    const double labels[9] = {1, -1, 1, 1, 1, -1, 1, 1, -1};
    for (int i = 0; i < 6; ++i) {
      data.X(i, 0) = rng.next_gaussian();
      data.X(i, 1) = rng.next_gaussian();
      data.y[i] = labels[i];
    }
    for (int i = 6; i < 9; ++i) {
      data.X.row(i) = data.X.row(i - 3);
      data.y[i] = labels[i];
    }

    FoldPlan plan;
    plan.data = data;
    plan.K = 3;
    plan.validation = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}};
    plan.seed = seed;

    // Solve the margin system on {3,4,5}: Q alpha + u y = 1, yᵀalpha = 0.
    const Dataset tr0 = plan.training_set(0);  // indices {3,...,8}
    const Matrix q0 = kernel_matrix(tr0.X, tr0.y, gamma);
    Matrix sys = Matrix::Zero(4, 4);
    Vector rhs(4);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) sys(a, b) = q0(a, b);
      sys(a, 3) = tr0.y[a];
      sys(3, a) = tr0.y[a];
      rhs[a] = 1.0;
    }
    rhs[3] = 0.0;
    const Vector sol = sys.partialPivLu().solve(rhs);
    if (!sol.allFinite() || sol.head(3).minCoeff() <= 1e-3) continue;

    DegenerateModelPoint out{plan, ModelM(plan), Vector(), 0.0, gamma};
    out.C = 2.0 * sol.head(3).maxCoeff() + 1.0;

    // Feasible values for folds 1 and 2 via the projected dual solve, then
    // overwrite fold 0 with the hand construction.
    Vector z = init_point(out.model, InitStrategy::LLFeasible, out.C, gamma);
    for (int i = 0; i < 6; ++i) {
      const double alpha_i = i < 3 ? sol[i] : 0.0;
      z[out.model.idx_alpha(0, i)] = alpha_i;
      z[out.model.idx_v(0, i)] = 0.0;
      z[out.model.idx_w(0, i)] = 0.0;
    }
    z[out.model.idx_u(0)] = sol[3];
    // Hinge slacks for fold 0's validation examples.
    Vector alpha0(6);
    for (int i = 0; i < 6; ++i) alpha0[i] = z[out.model.idx_alpha(0, i)];
    const Dataset val0 = plan.validation_set(0);
    const double bias0 = svm_bias(alpha0, out.C, gamma, tr0);
    for (int i = 0; i < val0.n(); ++i) {
      double margin = 0.0;
      for (int j = 0; j < 6; ++j)
        margin += alpha0[j] * val0.y[i] * tr0.y[j] *
                  std::exp(-gamma *
                           (val0.X.row(i) - tr0.X.row(j)).squaredNorm());
      z[out.model.idx_zeta(0, i)] =
          std::max(0.0, 1.0 - margin - val0.y[i] * bias0);
    }
    out.z = z;
    if (out.model.mpcc_feasibility(z) > 1e-6) continue;
    return out;
  }
  throw ContractError("duplicated_margin_point: no usable seed found");
}

}  // namespace mpcc::test
