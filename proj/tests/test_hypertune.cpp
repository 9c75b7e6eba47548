#include <doctest.h>

#include <cmath>
#include <mpcc/cq.hpp>
#include <mpcc/errors.hpp>
#include <mpcc/hypertune.hpp>
#include <mpcc/rng.hpp>

#include "support/finite_diff.hpp"
#include "support/model_points.hpp"

using namespace mpcc;

namespace {

// Random interior point of the model: moderate hyperparameters, alpha well
// inside the box, positive multipliers.
Vector random_interior_point(const ModelM& model, Rng& rng) {
  Vector z = Vector::Zero(model.n_vars());
  const double C = rng.next_uniform(0.8, 2.5);
  z[model.idx_C()] = C;
  z[model.idx_gamma()] = rng.next_uniform(0.3, 1.2);
  const FoldPlan& folds = model.folds();
  for (int k = 0; k < folds.K; ++k) {
    const int nk = folds.training_set(k).n();
    for (int i = 0; i < nk; ++i) {
      z[model.idx_alpha(k, i)] = rng.next_uniform(0.2 * C, 0.8 * C);
      z[model.idx_v(k, i)] = rng.next_uniform(0.0, 0.5);
      z[model.idx_w(k, i)] = rng.next_uniform(0.0, 0.5);
    }
    for (int i = 0; i < folds.validation_set(k).n(); ++i)
      z[model.idx_zeta(k, i)] = rng.next_uniform(0.0, 1.5);
    z[model.idx_u(k)] = rng.next_gaussian();
  }
  return z;
}

double independent_hinge(const ModelM& model, const Vector& z) {
  const FoldPlan& folds = model.folds();
  const double C = z[model.idx_C()];
  const double gamma = z[model.idx_gamma()];
  double total = 0.0;
  for (int k = 0; k < folds.K; ++k) {
    const Dataset tr = folds.training_set(k);
    const Dataset val = folds.validation_set(k);
    Vector alpha(tr.n());
    for (int i = 0; i < tr.n(); ++i) alpha[i] = z[model.idx_alpha(k, i)];
    const double bias = svm_bias(alpha, C, gamma, tr);
    double loss = 0.0;
    for (int i = 0; i < val.n(); ++i) {
      double score = bias;
      for (int j = 0; j < tr.n(); ++j)
        score += alpha[j] * tr.y[j] *
                 std::exp(-gamma * (val.X.row(i) - tr.X.row(j)).squaredNorm());
      loss += std::max(0.0, 1.0 - val.y[i] * score);
    }
    total += loss / val.n();
  }
  return total;
}

}  // namespace

TEST_CASE("fold plans") {
  SUBCASE("ten usable examples split 4/3/3") {
    const Dataset data = test::blob_dataset(10, 1);
    const FoldPlan plan = make_folds(data, 3, 0.0, 5);
    REQUIRE(plan.validation.size() == 3);
    CHECK(plan.validation[0].size() == 4);
    CHECK(plan.validation[1].size() == 3);
    CHECK(plan.validation[2].size() == 3);
  }
  SUBCASE("a tenth of sixty examples is held out") {
    const Dataset data = test::blob_dataset(60, 2);
    const FoldPlan plan = make_folds(data, 3, 0.1, 5);
    CHECK(plan.test.size() == 6);
    CHECK(plan.modeled_count() == 54);
  }
  SUBCASE("the same seed reproduces the plan exactly") {
    const Dataset data = test::blob_dataset(30, 3);
    const FoldPlan a = make_folds(data, 3, 0.1, 42);
    const FoldPlan b = make_folds(data, 3, 0.1, 42);
    CHECK(a.test == b.test);
    CHECK(a.validation == b.validation);
  }
  SUBCASE("every non-test example validates exactly once") {
    const Dataset data = test::blob_dataset(23, 4);
    const FoldPlan plan = make_folds(data, 4, 0.1, 9);
    std::vector<int> seen(23, 0);
    for (int i : plan.test) seen[i] += 10;
    for (const auto& fold : plan.validation)
      for (int i : fold) seen[i] += 1;
    for (int i = 0; i < 23; ++i) CHECK((seen[i] == 1 || seen[i] == 10));
  }
}

TEST_CASE("model dimensions follow the stacking identities") {
  const Dataset data = test::blob_dataset(10, 6);
  const FoldPlan plan = make_folds(data, 3, 0.0, 1);
  const ModelM model(plan);
  CHECK(model.n_vars() == 75);  // 3*(K-1)*n + n + K + 2
  const MpccProblem& p = model.problem();
  CHECK(p.n_ineq == 22);       // |g| = 2 + 2n
  CHECK(p.n_eq == 23);         // |h| = (K-1)n + K
  CHECK(p.n_comp == 40);       // |G| = |H| = 2(K-1)n
  Vector z = Vector::Zero(75);
  z[0] = 1.0;
  z[1] = 1.0;
  CHECK(p.G(z).size() == 40);
  CHECK(p.H(z).size() == 40);
}

TEST_CASE("model derivatives match finite differences") {
  const Dataset data = test::blob_dataset(10, 8);
  const FoldPlan plan = make_folds(data, 3, 0.0, 2);
  const ModelM model(plan);
  const MpccProblem& p = model.problem();
  Rng rng(19);
  const Vector z = random_interior_point(model, rng);

  CHECK(test::rel_err(p.grad_f(z), test::fd_gradient(p.f, z)) <= 1e-5);
  CHECK(test::rel_err(p.jac_g(z), test::fd_jacobian(p.g, z)) <= 1e-5);
  CHECK(test::rel_err(p.jac_h(z), test::fd_jacobian(p.h, z)) <= 1e-5);
  CHECK(test::rel_err(p.jac_G(z), test::fd_jacobian(p.G, z)) <= 1e-5);
  CHECK(test::rel_err(p.jac_H(z), test::fd_jacobian(p.H, z)) <= 1e-5);
}

TEST_CASE("model Hessian matches finite differences of the Lagrangian "
          "gradient") {
  const Dataset data = test::blob_dataset(10, 12);
  const FoldPlan plan = make_folds(data, 3, 0.0, 3);
  const ModelM model(plan);
  const MpccProblem& p = model.problem();
  Rng rng(29);
  const Vector z = random_interior_point(model, rng);

  MultiplierSet m = MultiplierSet::zeros(p);
  for (auto* v : {&m.nu_g, &m.nu_h, &m.nu_G, &m.nu_H})
    for (int i = 0; i < v->size(); ++i) (*v)[i] = rng.next_gaussian();

  const auto grad_l = [&](const Vector& zz) {
    return lagrangian_grad(p, zz, m);
  };
  const Matrix analytic =
      p.lagrangian_hessian(z, 1.0, m.nu_g, m.nu_h, m.nu_G, m.nu_H);
  CHECK(test::rel_err(analytic, test::fd_jacobian(grad_l, z)) <= 1e-4);
}

TEST_CASE("zero initialisation violates stationarity by exactly one") {
  const FoldPlan plan = test::balanced_plan();
  const ModelM model(plan);
  const Vector z0 = init_point(model, InitStrategy::LLZero, 1.0, 1.0);
  const Vector h = model.problem().h(z0);
  CHECK(h.head(model.total_training()).lpNorm<Eigen::Infinity>() ==
        doctest::Approx(1.0));
}

TEST_CASE("centre initialisation lands midway on balanced folds") {
  const FoldPlan plan = test::balanced_plan();
  const ModelM model(plan);
  const double C0 = 3.0;
  const Vector z0 = init_point(model, InitStrategy::LLCentre, C0, 0.7);
  for (int k = 0; k < plan.K; ++k)
    for (int i = 0; i < plan.training_set(k).n(); ++i)
      CHECK(z0[model.idx_alpha(k, i)] == doctest::Approx(C0 / 2.0));
  // Stationarity and label-sum rows vanish by construction.
  const Vector h = model.problem().h(z0);
  CHECK(h.lpNorm<Eigen::Infinity>() <= 1e-12);
  // zeta and Z rows are feasible.
  const Vector g = model.problem().g(z0);
  CHECK(g.minCoeff() >= -1e-12);
}

TEST_CASE("feasible initialisation satisfies the whole training block") {
  const Dataset data = test::blob_dataset(12, 21);
  const FoldPlan plan = make_folds(data, 3, 0.0, 4);
  const ModelM model(plan);
  const Vector z0 = init_point(model, InitStrategy::LLFeasible, 1.5, 0.8);
  CHECK(model.mpcc_feasibility(z0) <= 1e-6);
}

TEST_CASE("multistart grid") {
  CHECK(multistart_grid().size() == 100);
  LogGrid single{0, 0, 0, 0};
  const auto grid = multistart_grid(single);
  REQUIRE(grid.size() == 1);
  CHECK(grid[0].first == 1.0);
  CHECK(grid[0].second == 1.0);
  for (const auto& [c, g] : multistart_grid()) {
    CHECK(c > 0.0);
    CHECK(g > 0.0);
  }
}

TEST_CASE("quartiles use linear interpolation") {
  const Quartiles q = quartiles({10.0, 1.0, 3.0, 2.0, 4.0});
  CHECK(q.q1 == doctest::Approx(2.0));
  CHECK(q.q2 == doctest::Approx(3.0));
  CHECK(q.q3 == doctest::Approx(4.0));
}

TEST_CASE("relaxed constraint qualification holds at interior feasible "
          "points") {
  // Feasible points with positive hyperparameters and one strictly interior
  // alpha per fold; the relaxed-program qualification must hold at each.
  int verified = 0;
  Rng rng(61);
  for (std::uint64_t trial = 0; verified < 20 && trial < 60; ++trial) {
    const Dataset data = test::blob_dataset(10, 300 + trial);
    const FoldPlan plan = make_folds(data, 3, 0.0, trial);
    const ModelM model(plan);
    const double C0 = rng.next_uniform(0.8, 3.0);
    const double gamma0 = rng.next_uniform(0.3, 1.5);
    Vector z0;
    try {
      z0 = init_point(model, InitStrategy::LLFeasible, C0, gamma0);
    } catch (const std::exception&) {
      continue;
    }
    if (model.mpcc_feasibility(z0) > 1e-6) continue;
    bool interior_per_fold = true;
    for (int k = 0; k < plan.K; ++k) {
      bool found = false;
      for (int i = 0; i < plan.training_set(k).n(); ++i) {
        const double a = z0[model.idx_alpha(k, i)];
        found |= a > 1e-4 * C0 && a < C0 * (1.0 - 1e-4);
      }
      interior_per_fold &= found;
    }
    if (!interior_per_fold) continue;

    const auto verdict = check_mpcc_mfcq_r(model.problem(), z0, 1e-6);
    CHECK(verdict.holds);
    ++verified;
  }
  CHECK(verified == 20);
}

TEST_CASE("three biactive pairs break the tightened qualifications") {
  const auto degenerate = test::duplicated_margin_point(17);
  const MpccProblem& p = degenerate.model.problem();
  const IndexSets sets = compute_index_sets(p, degenerate.z, 1e-7);
  CHECK(sets.I_GH.size() >= 3);
  CHECK_FALSE(check_mpcc_licq(p, degenerate.z, 1e-7).holds);
  CHECK_FALSE(check_mpcc_mfcq_t(p, degenerate.z, 1e-7).holds);
}

TEST_CASE("recorded objective equals an independent hinge re-evaluation") {
  const Dataset data = test::blob_dataset(12, 33);
  const FoldPlan plan = make_folds(data, 3, 0.0, 7);
  ModelM model(plan);
  const Vector z0 = init_point(model, InitStrategy::LLCentre, 1.0, 1.0);
  const SolveTrace trace =
      solve_sequential_penalisation(model.problem(), z0);
  const double recorded = model.hinge_objective(trace.z);
  CHECK(std::abs(recorded - independent_hinge(model, trace.z)) <= 1e-6);
}

TEST_CASE("tune sweeps a small grid without aborting") {
  const Dataset data = test::blob_dataset(16, 71);
  TuneParams params;
  params.folds = 3;
  params.test_fraction = 0.1;
  params.seed = 3;
  params.grid = {0, 1, -1, 0};  // 2 x 2 grid
  const TuneResult result = tune(data, TuneMethod::PenSeq, params);
  REQUIRE(result.runs.size() == 4);
  for (const auto& run : result.runs) {
    CHECK(run.error.empty());
    CHECK(run.objective >= 0.0);
    CHECK(run.wall_time > 0.0);
  }
  CHECK(result.best_objective <= result.objective_q.q2 + 1e-12);
  CHECK(result.best_C > 0.0);
  CHECK(result.best_gamma > 0.0);
}
