#include <doctest.h>

#include <cmath>
#include <mpcc/rng.hpp>
#include <mpcc/ssn.hpp>
#include <mpcc/toys.hpp>

#include "support/finite_diff.hpp"
#include "support/test_problems.hpp"

using namespace mpcc;

namespace {

bool m_stat_conditions(double G, double H, double nu_G, double nu_H,
                       double tol) {
  const bool comp = G >= -tol && H >= -tol && std::abs(G * H) <= tol;
  const bool g_slack = std::abs(G * nu_G) <= tol;
  const bool h_slack = std::abs(H * nu_H) <= tol;
  const bool signs =
      (nu_G >= -tol && nu_H >= -tol) || std::abs(nu_G * nu_H) <= tol;
  return comp && g_slack && h_slack && signs;
}

double pool_draw(Rng& rng) {
  // Mixed pool with exact zeros and values clear of the tolerance band.
  switch (rng.next_index(4)) {
    case 0: return 0.0;
    case 1: return rng.next_uniform(0.5, 2.0);
    case 2: return -rng.next_uniform(0.5, 2.0);
    default: return rng.next_uniform(-3.0, 3.0);
  }
}

// min (z-1)^2 s.t. z >= 0, as an MPCC with a single plain inequality so the
// system couples the 0 <= z ⊥ nu >= 0 structure through the FB row.
MpccProblem scalar_toy() {
  MpccProblem p;
  p.name = "scalar-toy";
  p.n_vars = 1;
  p.n_ineq = 1;
  p.f = [](const Vector& z) { return (z[0] - 1.0) * (z[0] - 1.0); };
  p.grad_f = [](const Vector& z) {
    return Vector::Constant(1, 2.0 * (z[0] - 1.0)).eval();
  };
  p.g = [](const Vector& z) { return z; };
  p.jac_g = [](const Vector&) { return Matrix::Identity(1, 1).eval(); };
  p.lagrangian_hessian = [](const Vector&, double sigma, const Vector&,
                            const Vector&, const Vector&, const Vector&) {
    return Matrix::Constant(1, 1, 2.0 * sigma).eval();
  };
  return p;
}

}  // namespace

TEST_CASE("ncp function values") {
  const NcpFunction fb{NcpKind::FischerBurmeister};
  const NcpFunction mn{NcpKind::Min};
  CHECK(ncp_eval(fb, 0.0, 0.0) == 0.0);
  CHECK(ncp_eval(fb, 3.0, 4.0) == doctest::Approx(-2.0));
  CHECK(ncp_eval(mn, 2.0, 0.0) == 0.0);
  CHECK(ncp_eval(fb, 2.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("ncp zero sets characterise complementarity") {
  const NcpFunction fb{NcpKind::FischerBurmeister};
  const NcpFunction mn{NcpKind::Min};
  Rng rng(5);
  for (int t = 0; t < 1000000; ++t) {
    const double a = pool_draw(rng);
    const double b = pool_draw(rng);
    const bool complementary = a >= 0.0 && b >= 0.0 && a * b == 0.0;
    CHECK((std::abs(ncp_eval(fb, a, b)) <= 1e-12) == complementary);
    CHECK((std::abs(ncp_eval(mn, a, b)) <= 1e-12) == complementary);
  }
}

TEST_CASE("generalized derivatives match classical ones away from kinks") {
  Rng rng(6);
  for (NcpKind kind : {NcpKind::Min, NcpKind::FischerBurmeister}) {
    const NcpFunction f{kind};
    for (int t = 0; t < 50; ++t) {
      const double a = rng.next_uniform(-2.0, 2.0);
      const double b = rng.next_uniform(-2.0, 2.0);
      if (std::abs(a - b) < 0.1 || std::hypot(a, b) < 0.1) continue;
      const auto [da, db] = f.derivative(a, b);
      const double h = 1e-6;
      const double fda = (f.eval(a + h, b) - f.eval(a - h, b)) / (2.0 * h);
      const double fdb = (f.eval(a, b + h) - f.eval(a, b - h)) / (2.0 * h);
      CHECK(test::rel_err(da, fda) <= 1e-6);
      CHECK(test::rel_err(db, fdb) <= 1e-6);
    }
  }
}

TEST_CASE("m-stationarity residual on the condition table") {
  SUBCASE("slack violation is not in the zero set") {
    const Eigen::Vector2d r = m_stat_residual(0.0, 2.0, 0.0, 5.0);
    CHECK(r.lpNorm<Eigen::Infinity>() > 1e-10);  // H nu_H = 10
  }
  SUBCASE("a free multiplier on the vanishing side is in the zero set") {
    const Eigen::Vector2d r = m_stat_residual(0.0, 2.0, 3.0, 0.0);
    CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("truth table over random tuples") {
    Rng rng(8);
    for (int t = 0; t < 10000; ++t) {
      const double G = pool_draw(rng);
      const double H = pool_draw(rng);
      const double nu_G = pool_draw(rng);
      const double nu_H = pool_draw(rng);
      const bool zero =
          m_stat_residual(G, H, nu_G, nu_H).lpNorm<Eigen::Infinity>() <= 1e-10;
      CHECK(zero == m_stat_conditions(G, H, nu_G, nu_H, 1e-10));
    }
  }
}

TEST_CASE("assembled system") {
  SUBCASE("vanishes at a strongly stationary tuple of the linear toy") {
    const MpccProblem p = toys::linear_axes();
    MultiplierSet m = MultiplierSet::zeros(p);
    m.nu_g[0] = 1.0;  // makes ∇L = 0 with nu_G = nu_H = 0
    const Vector f = assemble_F(p, Vector::Zero(2), m);
    CHECK(f.lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  SUBCASE("reduces to grad f with zero multipliers") {
    const MpccProblem p = test::biactive_toy();
    Vector z(4);
    z << 0.5, -0.3, 0.2, 0.9;
    const Vector f = assemble_F(p, z, MultiplierSet::zeros(p));
    CHECK(test::rel_err(Vector(f.head(4)), p.grad_f(z)) == 0.0);
  }
  SUBCASE("matches an independently assembled stack") {
    const MpccProblem p = toys::linear_axes();
    Vector z(2);
    z << 0.3, 0.8;
    MultiplierSet m = MultiplierSet::zeros(p);
    m.nu_g[0] = 0.4;
    m.nu_G[0] = -0.2;
    m.nu_H[0] = 0.7;
    const Vector f = assemble_F(p, z, m);
    REQUIRE(f.size() == 2 + 1 + 0 + 2);

    // By-hand stack for this two-variable instance.
    Vector expect(5);
    expect[0] = 1.0 - m.nu_g[0] - m.nu_G[0];
    expect[1] = 1.0 - m.nu_g[0] - m.nu_H[0];
    const double g = z[0] + z[1];
    expect[2] = std::sqrt(g * g + 0.16) - g - 0.4;
    const Eigen::Vector2d pair = m_stat_residual(z[0], z[1], -0.2, 0.7);
    expect[3] = pair[0];
    expect[4] = pair[1];
    CHECK(test::rel_err(f, expect) <= 1e-14);
  }
}

TEST_CASE("semismooth newton on the scalar toy") {
  const MpccProblem p = scalar_toy();
  Vector x0(2);
  x0 << 0.5, 0.2;  // (z, nu_g)
  const SolveTrace trace = solve_semismooth_newton(p, x0);
  REQUIRE(trace.status == SolveStatus::Converged);
  CHECK(trace.z[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(trace.multipliers.nu_g[0]) <= 1e-6);
}

TEST_CASE("semismooth newton reaches an m-stationary tuple of the linear "
          "toy") {
  const MpccProblem p = toys::linear_axes();
  Vector x0(5);  // (z1, z2, nu_g, nu_G, nu_H)
  x0 << 0.05, 0.08, 0.3, 0.1, 0.1;
  const SolveTrace trace = solve_semismooth_newton(p, x0);
  REQUIRE(trace.status == SolveStatus::Converged);
  CHECK(trace.z.lpNorm<Eigen::Infinity>() <= 1e-6);
  const Vector f = assemble_F(p, trace.z, trace.multipliers);
  CHECK(f.lpNorm<Eigen::Infinity>() <= 1e-8);
  const auto verdict =
      classify_stationarity(p, trace.z, trace.multipliers, 1e-6);
  const bool m_or_s = verdict.level == StationarityLevel::M ||
                      verdict.level == StationarityLevel::S;
  CHECK(m_or_s);
}
