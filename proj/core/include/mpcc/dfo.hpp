#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "mpcc/hypertune.hpp"
#include "mpcc/svm.hpp"

namespace mpcc {

/// Cross-validated training loss as a black box over (C, gamma). Every call
/// trains, evaluates and discards K fresh SVMs — one per fold — and returns
/// the summed per-fold mean hinge loss (same functional the tuning MPCC
/// minimises) together with the mean validation accuracy. The counter
/// increments exactly once per call.
class BlackBoxObjective {
 public:
  explicit BlackBoxObjective(FoldPlan folds, double eps = 1e-8);

  struct Eval {
    double loss = 0.0;
    double accuracy = 0.0;
  };

  Eval operator()(double C, double gamma);
  int evaluations() const { return count_; }
  const FoldPlan& folds() const { return folds_; }

 private:
  FoldPlan folds_;
  double eps_;
  int count_ = 0;
};

struct DfoResult {
  double C = 0.0, gamma = 0.0;
  double loss = 0.0, accuracy = 0.0;
  int evaluations = 0;
};

/// Searches take any callable with the BlackBoxObjective signature and count
/// their own calls, so budget accounting is exact per method.
using DfoObjective = std::function<BlackBoxObjective::Eval(double, double)>;

/// Decade grid {10^i} x {10^j}; the default spans 7 x 7 = 49 points.
std::vector<std::pair<double, double>> default_dfo_grid(int exp_lo = -3,
                                                        int exp_hi = 3);

/// Evaluate every grid point once; ties break toward smaller C, then gamma.
DfoResult grid_search(const DfoObjective& obj,
                      const std::vector<std::pair<double, double>>& grid);

struct LogBounds {
  double log_c_lo = -3.0, log_c_hi = 3.0;
  double log_gamma_lo = -3.0, log_gamma_hi = 3.0;
};

/// n_evals log-uniform draws, deterministic under seed.
DfoResult random_search(const DfoObjective& obj, const LogBounds& bounds,
                        int n_evals, std::uint64_t seed);

struct PatternParams {
  double h_min = 0.05;  // decades
  int max_rounds = 60;
  LogBounds bounds;
};

struct PatternResult : DfoResult {
  int poll_rounds = 0;
};

/// Coordinate poll in log space: try (C 10^±h, gamma) and (C, gamma 10^±h),
/// move on improvement, halve the step otherwise, stop once h < h_min.
PatternResult pattern_search(const DfoObjective& obj,
                             std::pair<double, double> start, double h0,
                             const PatternParams& params = {});

/// Gaussian-process surrogate on log-space inputs (squared-exponential
/// covariance, observation noise 1e-6, length scale picked by marginal
/// likelihood on a small grid) with expected-improvement acquisition
/// optimised over 256 random candidates plus a local polish. Spends 5
/// space-filling evaluations first, the rest adaptively; if the surrogate
/// degenerates (constant observations) the round falls back to random
/// sampling.
DfoResult bayesian_search(const DfoObjective& obj, const LogBounds& bounds,
                          int n_evals, std::uint64_t seed);

}  // namespace mpcc
