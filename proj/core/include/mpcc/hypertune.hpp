#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mpcc/penalisation.hpp"
#include "mpcc/problem.hpp"
#include "mpcc/relaxation.hpp"
#include "mpcc/ssn.hpp"
#include "mpcc/svm.hpp"

namespace mpcc {

/// K-fold split with a dedicated held-out test partition. Every non-test
/// example sits in exactly one validation fold (and hence in K-1 training
/// folds); test examples appear nowhere else.
struct FoldPlan {
  Dataset data;  // all examples
  int K = 0;
  std::vector<std::vector<int>> validation;  // per-fold validation indices
  std::vector<int> test;
  std::uint64_t seed = 0;

  std::vector<int> training_indices(int k) const;
  Dataset training_set(int k) const;
  Dataset validation_set(int k) const;
  Dataset test_set() const;
  Dataset modeled_set() const;  // all non-test examples
  int modeled_count() const;
};

/// Deterministic seeded split into K validation folds (sizes within 1 of
/// each other) plus a test partition of round(n * test_fraction) examples.
/// If a plain round-robin assignment leaves a training fold without one of
/// the classes the split is retried stratified by class, then rejected.
FoldPlan make_folds(const Dataset& dataset, int K, double test_fraction,
                    std::uint64_t seed);

/// The hyperparameter-tuning MPCC over z = [C, gamma, zeta, alpha, v, w, u]
/// with the mean validation hinge loss as objective, the per-fold dual-SVM
/// KKT systems as equality/complementarity constraints, and explicit
/// first/second derivatives. Kernel matrices are cached per gamma (relative
/// change below 1e-12 reuses the cache), so a ModelM instance must not be
/// shared by concurrent solves; construction is cheap, use one per job.
class ModelM {
 public:
  explicit ModelM(FoldPlan folds, double tau_ind = 1e-6);

  const MpccProblem& problem() const;
  const FoldPlan& folds() const;

  int n_vars() const;
  int total_training() const;   // Σ_k n^k
  int total_validation() const; // Σ_k n̄^k

  // Flat variable layout: [C, gamma, zeta, alpha, v, w, u].
  int idx_C() const { return 0; }
  int idx_gamma() const { return 1; }
  int idx_zeta(int fold, int i) const;
  int idx_alpha(int fold, int i) const;
  int idx_v(int fold, int i) const;
  int idx_w(int fold, int i) const;
  int idx_u(int fold) const;

  /// Independent re-evaluation of Σ_k (1/n̄^k) Σ_i max(0, hinge) at z.
  double hinge_objective(const Vector& z) const;
  /// Mean accuracy of the per-fold classifiers on their validation folds.
  double validation_accuracy(const Vector& z) const;
  /// Max violation over all constraints of the model, complementarity
  /// included.
  double mpcc_feasibility(const Vector& z) const;

 private:
  std::shared_ptr<struct ModelMImpl> impl_;
};

/// Spec-shaped constructor alias.
ModelM assemble_model(const FoldPlan& folds, double tau_ind = 1e-6);

enum class InitStrategy { LLZero, LLCentre, LLFeasible };

InitStrategy parse_init_strategy(const std::string& name);

/// Starting point for the model. LL-Zero zeroes every lower-level variable;
/// LL-Centre uses the label-average closed forms (u = 1, alpha near C/2 on
/// balanced folds, v/w as positive parts) so the KKT stationarity rows
/// vanish; LL-Feasible trains each fold's dual SVM and harvests the
/// multipliers, which is feasible for the full MPCC. All strategies set
/// zeta to the positive part of the hinge residual.
Vector init_point(const ModelM& model, InitStrategy strategy, double C0,
                  double gamma0);

struct LogGrid {
  int c_exp_lo = -5, c_exp_hi = 4;
  int gamma_exp_lo = -3, gamma_exp_hi = 6;
};

/// Cartesian product of decade points {10^i} x {10^j}; 100 pairs by default.
std::vector<std::pair<double, double>> multistart_grid(
    const LogGrid& ranges = {});

enum class TuneMethod { PenSeq, PenExact, RelaxSeq, RelaxExact, Ssn };

TuneMethod parse_tune_method(const std::string& name);
const char* to_string(TuneMethod method);

/// Linear-interpolation quartiles (the numpy default): Q(p) interpolates at
/// position (m-1)p of the sorted sample.
struct Quartiles {
  double q1 = 0.0, q2 = 0.0, q3 = 0.0;
};
Quartiles quartiles(std::vector<double> values);

struct TuneParams {
  int folds = 3;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  InitStrategy init = InitStrategy::LLCentre;
  LogGrid grid;
  PenalisationParams pen;
  RelaxationParams relax;
  SsnParams ssn;
  double pi_exact = 1e6;    // fixed parameter for the exact variants
  double tau_exact = 1e-6;
  double exact_eps = 1e-6;
  double tau_ind = 1e-6;
  int workers = 1;
};

struct TuneRun {
  double C0 = 0.0, gamma0 = 0.0;  // grid start
  double C = 0.0, gamma = 0.0;    // tuned values
  double objective = 0.0;         // re-evaluated mean validation hinge loss
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
  double wall_time = 0.0;
  SolveStatus status = SolveStatus::NotConverged;
  double final_param = 0.0;  // last pi or tau
  double mpcc_feasibility = 0.0;
  int outer_rounds = 0;
  int inner_iterations = 0;
  std::string error;  // nonempty when the run threw
};

struct TuneResult {
  std::vector<TuneRun> runs;
  FoldPlan folds;
  Quartiles runtime_q, objective_q;
  double best_objective = 0.0;
  double best_validation_accuracy = 0.0;
  double best_test_accuracy = 0.0;
  double best_C = 0.0, best_gamma = 0.0;  // from the best-objective run
};

/// Multistart sweep: one solver run per grid start (default LL-Centre
/// initialisation), each on its own ModelM instance so the grid can run on a
/// worker pool. Test accuracy retrains a fresh SVM on all non-test data at
/// the tuned hyperparameters. Individual run failures are recorded and
/// never abort the sweep.
TuneResult tune(const Dataset& dataset, TuneMethod method,
                const TuneParams& params = {});

}  // namespace mpcc
