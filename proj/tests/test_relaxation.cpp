#include <doctest.h>

#include <mpcc/relaxation.hpp>
#include <mpcc/rng.hpp>
#include <mpcc/toys.hpp>

#include "support/finite_diff.hpp"

using namespace mpcc;

namespace {

// min (z1-1)^2 + (z2-1)^2 with the single pair 0 <= z1 ⊥ z2 >= 0; the tau-
// relaxed optimum sits on the hyperbola at (sqrt(tau), sqrt(tau)).
MpccProblem bilinear_well() {
  MpccProblem p;
  p.name = "bilinear-well";
  p.n_vars = 2;
  p.n_comp = 1;
  p.f = [](const Vector& z) {
    return (z[0] - 1.0) * (z[0] - 1.0) + (z[1] - 1.0) * (z[1] - 1.0);
  };
  p.grad_f = [](const Vector& z) {
    Vector g(2);
    g << 2.0 * (z[0] - 1.0), 2.0 * (z[1] - 1.0);
    return g;
  };
  p.G = [](const Vector& z) { return Vector::Constant(1, z[0]).eval(); };
  p.jac_G = [](const Vector&) {
    Matrix j(1, 2);
    j << 1.0, 0.0;
    return j;
  };
  p.H = [](const Vector& z) { return Vector::Constant(1, z[1]).eval(); };
  p.jac_H = [](const Vector&) {
    Matrix j(1, 2);
    j << 0.0, 1.0;
    return j;
  };
  p.lagrangian_hessian = [](const Vector&, double sigma, const Vector&,
                            const Vector&, const Vector&, const Vector&) {
    return (2.0 * sigma * Matrix::Identity(2, 2)).eval();
  };
  return p;
}

}  // namespace

TEST_CASE("relaxed subproblem assembly") {
  SUBCASE("a very large tau reproduces the plain nonnegativity set") {
    const Nlp nlp = build_relaxed(bilinear_well(), 1e12);
    Vector z(2);
    z << 5.0, 7.0;
    const Vector c = nlp.c_ineq(z);
    REQUIRE(c.size() == 3);
    CHECK(c[0] == 5.0);
    CHECK(c[1] == 7.0);
    CHECK(c[2] > 0.0);  // product row inactive everywhere reasonable
  }
  SUBCASE("the hyperbola boundary is active at (0.5, 0.5) for tau = 0.25") {
    const Nlp nlp = build_relaxed(bilinear_well(), 0.25);
    Vector z(2);
    z << 0.5, 0.5;
    CHECK(nlp.c_ineq(z)[2] == doctest::Approx(0.0));
  }
  SUBCASE("product-row Jacobian matches finite differences") {
    Rng rng(3);
    const Nlp nlp = build_relaxed(toys::cubic_axes(), 0.1);
    for (int t = 0; t < 10; ++t) {
      Vector z(2);
      z << rng.next_uniform(0.1, 4.0), rng.next_uniform(0.1, 4.0);
      CHECK(test::rel_err(nlp.jac_ineq(z), test::fd_jacobian(nlp.c_ineq, z)) <=
            1e-6);
    }
  }
}

TEST_CASE("sequential relaxation on the linear toy settles on the axes") {
  Vector z0(2);
  z0 << 1.0, 1.0;
  const MpccProblem p = toys::linear_axes();
  const SolveTrace trace = solve_sequential_relaxation(p, z0);
  REQUIRE(trace.status == SolveStatus::Converged);
  CHECK(complementarity_violation(p, trace.z) <= 1e-6);
  CHECK(trace.objective >= -1e-7);

  SUBCASE("composed multipliers satisfy the C-stationarity sign pattern") {
    for (int i = 0; i < p.n_comp; ++i)
      CHECK(trace.multipliers.nu_G[i] * trace.multipliers.nu_H[i] >= -1e-12);
  }
  SUBCASE("the classifier grades the composed multipliers at C or better") {
    const auto verdict =
        classify_stationarity(p, trace.z, trace.multipliers, 1e-4);
    const bool at_least_c = verdict.level == StationarityLevel::C ||
                            verdict.level == StationarityLevel::M ||
                            verdict.level == StationarityLevel::S;
    CHECK(at_least_c);
  }
}

TEST_CASE("per-pair violation at a converged exit stays within the floor") {
  Vector z0(2);
  z0 << 1.0, 1.0;
  const MpccProblem p = toys::linear_axes();
  const RelaxationParams params;
  const SolveTrace trace = solve_sequential_relaxation(p, z0, params);
  REQUIRE(trace.status == SolveStatus::Converged);
  const Vector Gv = p.G(trace.z), Hv = p.H(trace.z);
  for (int i = 0; i < p.n_comp; ++i)
    CHECK(Gv[i] * Hv[i] <= trace.final_param + params.eps_exit);
}

TEST_CASE("exact relaxation lands on the hyperbola for moderate tau") {
  Vector z0(2);
  z0 << 1.0, 1.0;
  const SolveTrace trace =
      solve_exact_relaxation(bilinear_well(), z0, 0.25, 1e-8);
  CHECK(trace.status == SolveStatus::NotConverged);  // violation 0.5 > 1e-6
  CHECK(trace.z[0] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(trace.z[1] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(trace.records.back().comp_violation ==
        doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("tau = 0 is handled without crashing") {
  Vector z0(2);
  z0 << 0.4, 0.4;
  const SolveTrace trace =
      solve_exact_relaxation(bilinear_well(), z0, 0.0, 1e-8);
  REQUIRE(trace.records.size() == 1);
  // Any status is acceptable here; the MPCC's own constraints lack MFCQ.
}

TEST_CASE("feasible sets are nested as tau shrinks") {
  const MpccProblem p = bilinear_well();
  const Nlp tight = build_relaxed(p, 1e-4);
  const Nlp loose = build_relaxed(p, 1e-2);
  Rng rng(17);
  int sampled = 0;
  while (sampled < 50) {
    Vector z(2);
    z << rng.next_uniform(0.0, 1.0), rng.next_uniform(0.0, 1.0);
    if (tight.c_ineq(z).minCoeff() < 0.0) continue;  // not feasible for tight
    ++sampled;
    CHECK(loose.c_ineq(z).minCoeff() >= 0.0);
  }
}
