#include <doctest.h>

#include <mpcc/cq.hpp>
#include <mpcc/errors.hpp>
#include <mpcc/rng.hpp>
#include <mpcc/toys.hpp>

#include "support/test_problems.hpp"

using namespace mpcc;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

double combo_residual(const std::vector<Vector>& A, const std::vector<Vector>& B,
                      const Vector& lambda, const Vector& mu) {
  Vector sum = Vector::Zero(A.empty() ? B.front().size() : A.front().size());
  for (size_t i = 0; i < A.size(); ++i) sum += lambda[static_cast<int>(i)] * A[i];
  for (size_t j = 0; j < B.size(); ++j) sum += mu[static_cast<int>(j)] * B[j];
  return sum.lpNorm<Eigen::Infinity>();
}

// Exhaustive search over a coarse grid of bounded multipliers; returns true
// if some nontrivial nonnegative/free combination nearly cancels.
bool grid_dependent(const std::vector<Vector>& A, const std::vector<Vector>& B,
                    double tol = 1e-9) {
  const int steps_a = 5;  // lambda in {0, .25, .5, .75, 1}
  const int steps_b = 9;  // mu in {-1, -.75, ..., 1}
  const size_t na = A.size(), nb = B.size();
  size_t total = 1;
  for (size_t i = 0; i < na; ++i) total *= steps_a;
  for (size_t j = 0; j < nb; ++j) total *= steps_b;
  for (size_t code = 1; code < total; ++code) {
    size_t rem = code;
    Vector lambda(static_cast<int>(na)), mu(static_cast<int>(nb));
    for (size_t i = 0; i < na; ++i) {
      lambda[static_cast<int>(i)] = 0.25 * static_cast<double>(rem % steps_a);
      rem /= steps_a;
    }
    for (size_t j = 0; j < nb; ++j) {
      mu[static_cast<int>(j)] =
          -1.0 + 0.25 * static_cast<double>(rem % steps_b);
      rem /= steps_b;
    }
    double norm = lambda.size() ? lambda.lpNorm<Eigen::Infinity>() : 0.0;
    if (mu.size()) norm = std::max(norm, mu.lpNorm<Eigen::Infinity>());
    if (norm < 0.25) continue;
    if (combo_residual(A, B, lambda, mu) <= tol) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("positive linear independence of small families") {
  SUBCASE("no nonnegative combination of these three cancels") {
    const std::vector<Vector> a = {vec2(1, 1), vec2(1, 0), vec2(0, 1)};
    const auto verdict = positive_linear_independence(a, {});
    CHECK(verdict.holds);
  }
  SUBCASE("opposite vectors are dependent with lambda=(1,1)") {
    const std::vector<Vector> a = {vec2(1, 0), vec2(-1, 0)};
    const auto verdict = positive_linear_independence(a, {});
    REQUIRE_FALSE(verdict.holds);
    CHECK(verdict.lambda[0] == doctest::Approx(1.0));
    CHECK(verdict.lambda[1] == doctest::Approx(1.0));
    CHECK(verdict.certificate_residual <= 1e-8);
  }
  SUBCASE("the standard basis in the free family is independent") {
    const std::vector<Vector> b = {vec2(1, 0), vec2(0, 1)};
    CHECK(positive_linear_independence({}, b).holds);
  }
  SUBCASE("a linearly dependent free family is dependent") {
    const std::vector<Vector> b = {vec2(1, 2), vec2(2, 4)};
    const auto verdict = positive_linear_independence({}, b);
    REQUIRE_FALSE(verdict.holds);
    CHECK(verdict.mu.lpNorm<Eigen::Infinity>() == doctest::Approx(1.0));
    CHECK(combo_residual({}, b, Vector(0), verdict.mu) <= 1e-8);
  }
  SUBCASE("dimension mismatch is a contract error") {
    Vector odd(3);
    odd << 1, 2, 3;
    CHECK_THROWS_AS(positive_linear_independence({vec2(1, 0), odd}, {}),
                    ContractError);
  }
}

TEST_CASE("linear toy at the origin: the tightened form fails, the relaxed "
          "form holds") {
  const MpccProblem p = toys::linear_axes();
  const Vector z = Vector::Zero(2);

  const auto relaxed = check_mpcc_mfcq_r(p, z, 1e-8);
  REQUIRE(relaxed.holds);
  // The returned direction must satisfy the strict/equality system; the
  // known direction (3,4) scaled into the unit box is one witness.
  REQUIRE(relaxed.direction.size() == 2);
  CHECK(relaxed.direction[0] + relaxed.direction[1] >= 1e-8);  // toward g
  CHECK(relaxed.direction[0] >= 1e-8);                         // toward G
  CHECK(relaxed.direction[1] >= 1e-8);                         // toward H
  CHECK(relaxed.certificate_residual >= 1e-8);

  const auto tightened = check_mpcc_mfcq_t(p, z, 1e-8);
  REQUIRE_FALSE(tightened.holds);
  // Dependence certificate: lambda on the active g, mu on {G, H} gradients.
  REQUIRE(tightened.lambda.size() == 1);
  REQUIRE(tightened.mu.size() == 2);
  CHECK(tightened.lambda[0] >= 0.0);
  CHECK(tightened.certificate_residual <= 1e-8);
  double norm = std::max(tightened.lambda.lpNorm<Eigen::Infinity>(),
                         tightened.mu.lpNorm<Eigen::Infinity>());
  CHECK(norm == doctest::Approx(1.0));

  CHECK_FALSE(check_mpcc_licq(p, z, 1e-8).holds);  // 3 vectors in R^2
}

TEST_CASE("cubic toy satisfies the LICQ on all three activity patterns") {
  const MpccProblem p = toys::cubic_axes();
  Vector z(2);
  z << 3.0, 0.0;
  CHECK(check_mpcc_licq(p, z, 1e-8).holds);
  z << 0.0, 0.0;
  CHECK(check_mpcc_licq(p, z, 1e-8).holds);
  z << 0.0, 3.0;
  CHECK(check_mpcc_licq(p, z, 1e-8).holds);
}

TEST_CASE("with no plain inequalities the tightened form equals the LICQ") {
  const MpccProblem p = toys::cubic_axes();  // p = 0
  for (double a : {0.0, 3.0}) {
    for (double b : {0.0, 3.0}) {
      if (a == 3.0 && b == 3.0) continue;  // complementarity-infeasible
      Vector z(2);
      z << a, b;
      CHECK(check_mpcc_licq(p, z, 1e-8).holds ==
            check_mpcc_mfcq_t(p, z, 1e-8).holds);
    }
  }
}

TEST_CASE("decisions agree with a brute-force grid search on random "
          "families") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> a, b;
    const int na = 1 + static_cast<int>(rng.next_index(2));
    const int nb = 1 + static_cast<int>(rng.next_index(2));
    for (int i = 0; i < na; ++i) {
      Vector v(4);
      for (int c = 0; c < 4; ++c) v[c] = rng.next_gaussian();
      a.push_back(v);
    }
    for (int j = 0; j < nb; ++j) {
      Vector v(4);
      for (int c = 0; c < 4; ++c) v[c] = rng.next_gaussian();
      b.push_back(v);
    }
    // Make half the trials dependent by construction.
    if (trial % 2 == 0 && na >= 2) a[1] = -a[0];

    const auto verdict = positive_linear_independence(a, b);
    if (verdict.holds) {
      CHECK_FALSE(grid_dependent(a, b));
    } else {
      // The certificate itself confirms the dependence.
      CHECK(verdict.certificate_residual <= 1e-8);
      CHECK(verdict.lambda.minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("implication chain LICQ => MFCQ-T => MFCQ-R over the toy corpus") {
  struct Point {
    MpccProblem problem;
    Vector z;
  };
  std::vector<Point> corpus;
  corpus.push_back({toys::linear_axes(), Vector::Zero(2)});
  {
    Vector z(2);
    z << 2.0, 0.0;
    corpus.push_back({toys::linear_axes(), z});
  }
  for (double a : {0.0, 3.0}) {
    Vector z(2);
    z << a, 0.0;
    corpus.push_back({toys::cubic_axes(), z});
  }
  corpus.push_back({test::biactive_toy(), Vector::Zero(4)});

  for (const auto& pt : corpus) {
    const bool licq = check_mpcc_licq(pt.problem, pt.z, 1e-8).holds;
    const bool mfcq_t = check_mpcc_mfcq_t(pt.problem, pt.z, 1e-8).holds;
    const bool mfcq_r = check_mpcc_mfcq_r(pt.problem, pt.z, 1e-8).holds;
    if (licq) CHECK(mfcq_t);
    if (mfcq_t) CHECK(mfcq_r);
  }
}

TEST_CASE("infeasible points are rejected by the checkers") {
  Vector z(2);
  z << 3.0, 3.0;  // complementarity violated on the cubic toy
  CHECK_THROWS_AS(check_mpcc_mfcq_r(toys::cubic_axes(), z, 1e-8),
                  FeasibilityError);
}
