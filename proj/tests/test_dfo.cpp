#include <doctest.h>

#include <cmath>
#include <mpcc/dfo.hpp>
#include <mpcc/rng.hpp>

#include "support/model_points.hpp"

using namespace mpcc;

namespace {

// Smooth two-basin toy surface over log space, cheap enough for paired-seed
// comparisons.
BlackBoxObjective::Eval toy_surface(double C, double gamma) {
  const double x = std::log10(C);
  const double y = std::log10(gamma);
  BlackBoxObjective::Eval e;
  e.loss = (x - 1.0) * (x - 1.0) + (y + 0.5) * (y + 0.5) +
           0.3 * std::sin(3.0 * x) * std::sin(3.0 * y) + 1.0;
  e.accuracy = 1.0 / (1.0 + e.loss);
  return e;
}

struct CountingSurface {
  int count = 0;
  BlackBoxObjective::Eval operator()(double C, double gamma) {
    ++count;
    return toy_surface(C, gamma);
  }
};

}  // namespace

TEST_CASE("the black box trains K fresh models per call and counts calls") {
  const Dataset data = test::blob_dataset(12, 5);
  BlackBoxObjective obj(make_folds(data, 3, 0.0, 1));
  CHECK(obj.evaluations() == 0);
  const auto a = obj(1.0, 1.0);
  CHECK(obj.evaluations() == 1);
  const auto b = obj(1.0, 1.0);
  CHECK(obj.evaluations() == 2);
  CHECK(a.loss == b.loss);  // deterministic
  CHECK(a.accuracy >= 0.0);
  CHECK(a.accuracy <= 1.0);
}

TEST_CASE("grid search") {
  SUBCASE("the default grid spends exactly 49 evaluations") {
    CountingSurface surface;
    const DfoResult best =
        grid_search([&](double c, double g) { return surface(c, g); },
                    default_dfo_grid());
    CHECK(surface.count == 49);
    CHECK(best.evaluations == 49);
  }
  SUBCASE("a single-point grid returns that point") {
    const DfoResult best = grid_search(toy_surface, {{2.0, 3.0}});
    CHECK(best.C == 2.0);
    CHECK(best.gamma == 3.0);
    CHECK(best.evaluations == 1);
  }
  SUBCASE("the winner is no worse than any grid point") {
    const auto grid = default_dfo_grid();
    const DfoResult best = grid_search(toy_surface, grid);
    for (const auto& [c, g] : grid)
      CHECK(best.loss <= toy_surface(c, g).loss);
  }
}

TEST_CASE("random search") {
  SUBCASE("budget accounting") {
    CountingSurface surface;
    random_search([&](double c, double g) { return surface(c, g); },
                  LogBounds{}, 50, 4);
    CHECK(surface.count == 50);
  }
  SUBCASE("deterministic under the seed") {
    const DfoResult a = random_search(toy_surface, LogBounds{}, 25, 9);
    const DfoResult b = random_search(toy_surface, LogBounds{}, 25, 9);
    CHECK(a.C == b.C);
    CHECK(a.gamma == b.gamma);
    CHECK(a.loss == b.loss);
  }
  SUBCASE("stays within the declared bounds") {
    LogBounds bounds{-1.0, 2.0, 0.0, 1.0};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const DfoResult best = random_search(toy_surface, bounds, 20, seed);
      CHECK(best.C >= std::pow(10.0, -1.0));
      CHECK(best.C <= std::pow(10.0, 2.0));
      CHECK(best.gamma >= 1.0);
      CHECK(best.gamma <= 10.0);
    }
  }
}

TEST_CASE("pattern search") {
  SUBCASE("halving down from h0=1 at a local minimum takes about five "
          "rounds") {
    // Start at the basin centre of the toy surface: every poll fails, so the
    // rounds are exactly the halvings until h < 0.05.
    const PatternResult res = pattern_search(
        [](double c, double g) {
          const double x = std::log10(c), y = std::log10(g);
          BlackBoxObjective::Eval e;
          e.loss = x * x + y * y;
          return e;
        },
        {1.0, 1.0}, 1.0);
    CHECK(res.poll_rounds == 5);  // h = 1, .5, .25, .125, .0625
    CHECK(res.loss == 0.0);
  }
  SUBCASE("walks downhill on a monotone objective until the bound clamp") {
    const PatternResult res = pattern_search(
        [](double c, double /*g*/) {
          BlackBoxObjective::Eval e;
          e.loss = std::log10(c);  // decreasing toward small C
          return e;
        },
        {1.0, 1.0}, 1.0);
    CHECK(res.C == doctest::Approx(1e-3));  // default lower bound
  }
  SUBCASE("never ends worse than it started") {
    const double start_loss = toy_surface(100.0, 0.01).loss;
    const PatternResult res = pattern_search(toy_surface, {100.0, 0.01}, 1.0);
    CHECK(res.loss <= start_loss);
  }
}

TEST_CASE("bayesian search") {
  SUBCASE("budget accounting") {
    CountingSurface surface;
    bayesian_search([&](double c, double g) { return surface(c, g); },
                    LogBounds{}, 50, 3);
    CHECK(surface.count == 50);
  }
  SUBCASE("deterministic under the seed") {
    const DfoResult a = bayesian_search(toy_surface, LogBounds{}, 20, 11);
    const DfoResult b = bayesian_search(toy_surface, LogBounds{}, 20, 11);
    CHECK(a.C == b.C);
    CHECK(a.gamma == b.gamma);
  }
  SUBCASE("constant observations fall back to random sampling") {
    const DfoResult res = bayesian_search(
        [](double, double) {
          return BlackBoxObjective::Eval{1.0, 0.5};
        },
        LogBounds{}, 12, 2);
    CHECK(res.evaluations == 12);
    CHECK(res.loss == 1.0);
  }
  SUBCASE("beats random search on the smooth toy in most paired seeds") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const DfoResult bayes = bayesian_search(toy_surface, LogBounds{}, 30,
                                              seed);
      const DfoResult rand = random_search(toy_surface, LogBounds{}, 30,
                                           seed);
      if (bayes.loss <= rand.loss) ++wins;
    }
    CHECK(wins >= 12);  // >= 60% of 20
  }
}
