#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <mpcc/errors.hpp>
#include <mpcc/rng.hpp>
#include <mpcc/svm.hpp>

#include "support/finite_diff.hpp"

using namespace mpcc;

namespace {

Dataset two_point_set() {
  Dataset data;
  data.name = "two-point";
  data.X.resize(2, 1);
  data.X << 0.0, 1.0;
  data.y.resize(2);
  data.y << 1.0, -1.0;
  return data;
}

Dataset random_set(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  data.name = "random";
  data.X.resize(n, d);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) data.X(i, c) = rng.next_gaussian();
    data.y[i] = i % 2 == 0 ? 1.0 : -1.0;
  }
  return data;
}

Matrix sqdist_of(const Matrix& X) {
  Matrix d(X.rows(), X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.rows(); ++j)
      d(i, j) = (X.row(i) - X.row(j)).squaredNorm();
  return d;
}

}  // namespace

TEST_CASE("rbf kernel values") {
  Vector a(2), b(2);
  a << 1.0, 2.0;
  b << 1.0, 2.0;
  CHECK(rbf_kernel(a, b, 3.7) == 1.0);
  b << 4.0, -1.0;
  CHECK(rbf_kernel(a, b, 0.0) == 1.0);
  Vector x1(1), x2(1);
  x1 << 0.0;
  x2 << 1.0;
  CHECK(rbf_kernel(x1, x2, std::log(2.0)) == doctest::Approx(0.5));
  Vector odd(3);
  CHECK_THROWS_AS(rbf_kernel(a, odd, 1.0), ContractError);
}

TEST_CASE("kernel matrix") {
  SUBCASE("two-point set at gamma = ln 2") {
    const Dataset data = two_point_set();
    const Matrix q = kernel_matrix(data.X, data.y, std::log(2.0));
    CHECK(q(0, 0) == 1.0);
    CHECK(q(1, 1) == 1.0);
    CHECK(q(0, 1) == doctest::Approx(-0.5));
    CHECK(q(1, 0) == doctest::Approx(-0.5));
  }
  SUBCASE("unit diagonal always") {
    const Dataset data = random_set(9, 3, 2);
    const Matrix q = kernel_matrix(data.X, data.y, 0.8);
    for (int i = 0; i < 9; ++i) CHECK(q(i, i) == 1.0);
  }
  SUBCASE("positive definite on distinct points") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Dataset data = random_set(20, 2, 100 + seed);
      const Matrix q = kernel_matrix(data.X, data.y, 0.5);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
  }
  SUBCASE("duplicate rows raise the flag") {
    Dataset data = random_set(4, 2, 3);
    data.X.row(2) = data.X.row(0);
    bool dup = false;
    kernel_matrix(data.X, data.y, 1.0, &dup);
    CHECK(dup);
  }
}

TEST_CASE("dual training matches the clipped analytic solution") {
  const Dataset data = two_point_set();
  for (double C : {0.5, 1.0, 10.0}) {
    for (double gamma : {std::log(2.0), 1.0}) {
      const double kval = std::exp(-gamma);
      const double a_star = std::min(C, 1.0 / (1.0 - kval));
      const double obj_star = a_star * a_star * (1.0 - kval) - 2.0 * a_star;
      const TrainedSvm fit = train_dual_svm(data, C, gamma, 1e-8);
      REQUIRE(fit.inner.status == NlpStatus::Converged);
      const Matrix q = kernel_matrix(data.X, data.y, gamma);
      const double obj =
          0.5 * fit.model.alpha.dot(q * fit.model.alpha) -
          fit.model.alpha.sum();
      CHECK(obj == doctest::Approx(obj_star).epsilon(1e-7));
      CHECK(std::abs(data.y.dot(fit.model.alpha)) <= 1e-6);
      CHECK(fit.model.alpha.minCoeff() >= -1e-8);
      CHECK(fit.model.alpha.maxCoeff() <= C + 1e-8);
    }
  }
}

TEST_CASE("lower-level multipliers satisfy the KKT system") {
  const Dataset data = random_set(8, 2, 11);
  const TrainedSvm fit = train_dual_svm(data, 2.0, 0.7, 1e-9);
  REQUIRE(fit.inner.status == NlpStatus::Converged);
  const Matrix q = kernel_matrix(data.X, data.y, 0.7);
  const Vector stat = q * fit.model.alpha - Vector::Ones(8) - fit.v + fit.w +
                      fit.u * data.y;
  CHECK(stat.lpNorm<Eigen::Infinity>() <= 1e-7);
  CHECK(fit.v.minCoeff() >= 0.0);
  CHECK(fit.w.minCoeff() >= 0.0);
  for (int i = 0; i < 8; ++i) {
    CHECK(std::abs(fit.model.alpha[i] * fit.v[i]) <= 1e-7);
    CHECK(std::abs((2.0 - fit.model.alpha[i]) * fit.w[i]) <= 1e-7);
  }
}

TEST_CASE("smooth indicator") {
  SUBCASE("vertex of the parabola") {
    CHECK(smooth_indicator(5.0, 10.0).value == doctest::Approx(1.0 + 1e-6));
  }
  SUBCASE("formula value at the lower boundary") {
    CHECK(smooth_indicator(0.0, 10.0).value == doctest::Approx(1e-6));
  }
  SUBCASE("outside the box the branch value is zero") {
    CHECK(smooth_indicator(-0.5, 10.0).value == 0.0);
    CHECK(smooth_indicator(10.5, 10.0).value == 0.0);
  }
  SUBCASE("closed-form alpha derivative") {
    CHECK(smooth_indicator(0.5, 2.0).d_alpha == doctest::Approx(1.0));
  }
  SUBCASE("closed forms match finite differences inside the box") {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      const double C = rng.next_uniform(0.5, 4.0);
      const double a = rng.next_uniform(0.1 * C, 0.9 * C);
      const auto w = smooth_indicator(a, C);
      const double h = 1e-6;
      const double fd_a =
          (smooth_indicator(a + h, C).value - smooth_indicator(a - h, C).value) /
          (2.0 * h);
      const double fd_c =
          (smooth_indicator(a, C + h).value - smooth_indicator(a, C - h).value) /
          (2.0 * h);
      CHECK(test::rel_err(w.d_alpha, fd_a) <= 1e-5);
      CHECK(test::rel_err(w.d_C, fd_c) <= 1e-5);
    }
  }
}

TEST_CASE("bias reconstruction") {
  SUBCASE("two-point symmetric model has zero bias") {
    const Dataset data = two_point_set();
    Vector alpha(2);
    alpha << 2.0, 2.0;
    CHECK(svm_bias(alpha, 10.0, std::log(2.0), data) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("uniform weights average the residuals") {
    const Dataset data = random_set(6, 2, 9);
    const double C = 3.0, gamma = 0.4;
    const Vector alpha = Vector::Constant(6, C / 2.0);  // equal weights
    double mean_residual = 0.0;
    for (int i = 0; i < 6; ++i) {
      double margin = 0.0;
      for (int j = 0; j < 6; ++j)
        margin += alpha[j] * data.y[j] *
                  rbf_kernel(data.X.row(i).transpose(),
                             data.X.row(j).transpose(), gamma);
      mean_residual += (data.y[i] - margin) / 6.0;
    }
    CHECK(svm_bias(alpha, C, gamma, data) ==
          doctest::Approx(mean_residual).epsilon(1e-12));
  }
  SUBCASE("degenerate weights raise an error when tau_ind is zero") {
    const Dataset data = two_point_set();
    Vector alpha(2);
    alpha << -1.0, 11.0;
    CHECK_THROWS_AS(svm_bias(alpha, 10.0, 1.0, data, 0.0), FeasibilityError);
  }
}

TEST_CASE("bias derivative bundle matches finite differences") {
  const Dataset data = random_set(7, 2, 23);
  const Matrix sqdist = sqdist_of(data.X);
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const double C = rng.next_uniform(0.8, 4.0);
    const double gamma = rng.next_uniform(0.2, 1.5);
    Vector alpha(7);
    for (int i = 0; i < 7; ++i) alpha[i] = rng.next_uniform(0.1 * C, 0.9 * C);
    const Matrix kernel = (-gamma * sqdist.array()).exp().matrix();
    const auto bundle =
        bias_with_derivatives(alpha, C, gamma, kernel, sqdist, data.y);

    const auto value_at = [&](const Vector& a, double c, double g) {
      const Matrix k = (-g * sqdist.array()).exp().matrix();
      return bias_with_derivatives(a, c, g, k, sqdist, data.y).value;
    };

    // First order.
    Vector fd_alpha(7);
    for (int i = 0; i < 7; ++i) {
      const double h = test::fd_step(alpha[i]);
      Vector ap = alpha, am = alpha;
      ap[i] += h;
      am[i] -= h;
      fd_alpha[i] =
          (value_at(ap, C, gamma) - value_at(am, C, gamma)) / (2.0 * h);
    }
    CHECK(test::rel_err(bundle.d_alpha, fd_alpha) <= 1e-5);
    {
      const double h = test::fd_step(C);
      CHECK(test::rel_err(bundle.d_C, (value_at(alpha, C + h, gamma) -
                                       value_at(alpha, C - h, gamma)) /
                                          (2.0 * h)) <= 1e-5);
    }
    {
      const double h = test::fd_step(gamma);
      CHECK(test::rel_err(bundle.d_gamma, (value_at(alpha, C, gamma + h) -
                                           value_at(alpha, C, gamma - h)) /
                                              (2.0 * h)) <= 1e-5);
    }

    // Second order, as differences of the first derivatives.
    const auto d1_at = [&](const Vector& a, double c, double g) {
      const Matrix k = (-g * sqdist.array()).exp().matrix();
      return bias_with_derivatives(a, c, g, k, sqdist, data.y);
    };
    {
      const double h = test::fd_step(gamma);
      const auto hi = d1_at(alpha, C, gamma + h);
      const auto lo = d1_at(alpha, C, gamma - h);
      CHECK(test::rel_err(bundle.d2_gamma,
                          (hi.d_gamma - lo.d_gamma) / (2.0 * h)) <= 1e-4);
      CHECK(test::rel_err(bundle.d2_C_gamma, (hi.d_C - lo.d_C) / (2.0 * h)) <=
            1e-4);
      CHECK(test::rel_err(bundle.d2_alpha_gamma,
                          Vector((hi.d_alpha - lo.d_alpha) / (2.0 * h))) <=
            1e-4);
    }
    {
      const double h = test::fd_step(C);
      const auto hi = d1_at(alpha, C + h, gamma);
      const auto lo = d1_at(alpha, C - h, gamma);
      CHECK(test::rel_err(bundle.d2_C, (hi.d_C - lo.d_C) / (2.0 * h)) <= 1e-4);
      CHECK(test::rel_err(bundle.d2_alpha_C,
                          Vector((hi.d_alpha - lo.d_alpha) / (2.0 * h))) <=
            1e-4);
    }
    for (int i = 0; i < 7; ++i) {
      const double h = test::fd_step(alpha[i]);
      Vector ap = alpha, am = alpha;
      ap[i] += h;
      am[i] -= h;
      const auto hi = d1_at(ap, C, gamma);
      const auto lo = d1_at(am, C, gamma);
      CHECK(test::rel_err(Vector(bundle.d2_alpha.col(i)),
                          Vector((hi.d_alpha - lo.d_alpha) / (2.0 * h))) <=
            1e-4);
    }
  }
}

TEST_CASE("prediction and accuracy") {
  SUBCASE("the two-point model classifies its own points") {
    const Dataset data = two_point_set();
    const TrainedSvm fit = train_dual_svm(data, 10.0, std::log(2.0), 1e-8);
    CHECK(accuracy(fit.model, data) == 1.0);
  }
  SUBCASE("a zero model with positive bias says +1 everywhere") {
    SvmModel model;
    model.data = two_point_set();
    model.alpha = Vector::Zero(2);
    model.C = 1.0;
    model.gamma = 1.0;
    model.bias = 0.5;
    Vector x(1);
    x << -3.0;
    CHECK(predict(model, x) == 1);
    x << 3.0;
    CHECK(predict(model, x) == 1);
  }
  SUBCASE("mirrored labels flip the trained predictions") {
    const Dataset data = random_set(10, 2, 77);
    Dataset mirrored = data;
    mirrored.y = -mirrored.y;
    const TrainedSvm a = train_dual_svm(data, 5.0, 0.6, 1e-8);
    const TrainedSvm b = train_dual_svm(mirrored, 5.0, 0.6, 1e-8);
    Rng rng(78);
    for (int t = 0; t < 10; ++t) {
      Vector x(2);
      x << rng.next_gaussian(), rng.next_gaussian();
      // Skip near-ties, where the sign(0) = +1 convention breaks symmetry.
      double score = b.model.bias;
      for (int j = 0; j < 10; ++j)
        score += b.model.alpha[j] * mirrored.y[j] *
                 rbf_kernel(mirrored.X.row(j).transpose(), x, 0.6);
      if (std::abs(score) < 1e-7) continue;
      CHECK(predict(a.model, x) == -predict(b.model, x));
    }
  }
}
