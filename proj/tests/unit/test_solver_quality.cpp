#include <doctest.h>

#include <cmath>
#include <random>

#include "famsec/error.hpp"
#include "famsec/harness.hpp"
#include "famsec/solver_quality.hpp"
#include "oracles.hpp"

using namespace famsec;

TEST_SUITE("solver_quality") {
  TEST_CASE("closed-form Hellinger matches quadrature") {
    for (double sp : {0.5, 1.0, 3.0})
      for (double sq : {0.7, 2.0})
        for (double d : {-4.0, 0.0, 0.3, 6.0}) {
          CAPTURE(sp);
          CAPTURE(sq);
          CAPTURE(d);
          CHECK(std::abs(hellinger2_gaussian({d, sp}, {0.0, sq}) - oracle::hellinger2_quadrature(d, sp, 0.0, sq)) < 1e-6);
        }
  }

  TEST_CASE("Hellinger is symmetric, bounded and zero on identity") {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int i = 0; i < 200; ++i) {
      const GaussianSummary p{u(g) - 5.0, u(g)};
      const GaussianSummary q{u(g) - 5.0, u(g)};
      const double a = hellinger2_gaussian(p, q);
      CHECK(a == hellinger2_gaussian(q, p));
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
      CHECK(hellinger2_gaussian(p, p) == doctest::Approx(0.0).epsilon(1e-15));
    }
  }

  TEST_CASE("histogram Hellinger") {
    CHECK(hellinger2_hist({0.5, 0.5}, {0.5, 0.5}) == doctest::Approx(0.0));
    CHECK(hellinger2_hist({1.0, 0.0}, {0.0, 1.0}) == 1.0);
    CHECK_THROWS_AS(hellinger2_hist({1.0}, {0.5, 0.5}), Error);
    CHECK_THROWS_AS(hellinger2_hist({0.0, 1.0, 2.0}, {0.5, 0.5}, {0.0, 1.5, 2.0}, {0.5, 0.5}), Error);
  }

  TEST_CASE("identical summaries give exactly one") {
    const SolverQualityConfig cfg{0.5, 5.0, -10.0, 10.0};
    const auto r = solver_quality({1.0, 2.0}, {1.0, 2.0}, cfg);
    CHECK(r.x_s == 1.0);
    CHECK(r.m_s == 0.0);
  }

  TEST_CASE("swapping candidate and trusted reflects about one") {
    std::mt19937_64 g(8);
    std::uniform_real_distribution<double> u(0.01, 5.0);
    const SolverQualityConfig cfg{0.5, 5.0, -20.0, 20.0};
    for (int i = 0; i < 500; ++i) {
      const GaussianSummary a{u(g) * 4.0 - 10.0, u(g)};
      const GaussianSummary b{u(g) * 4.0 - 10.0, u(g)};
      CHECK(solver_quality(a, b, cfg).x_s + solver_quality(b, a, cfg).x_s == 2.0);
    }
  }

  TEST_CASE("squash saturation points") {
    CHECK(std::abs(squash_solver_quality(1.0, 5.0) - 1.987) < 1e-3);
    CHECK(std::abs(squash_solver_quality(-1.0, 5.0) - 0.013) < 1e-3);
    CHECK(squash_solver_quality(1e6, 5.0) < 2.0);
    CHECK(squash_solver_quality(-1e6, 5.0) > 0.0);
    CHECK(squash_solver_quality(0.0, 5.0) == 1.0);
  }

  TEST_CASE("better candidates score above one") {
    const SolverQualityConfig cfg{0.5, 5.0, -10.0, 10.0};
    CHECK(solver_quality({3.0, 1.0}, {0.0, 1.0}, cfg).x_s > 1.0);
    CHECK(solver_quality({-3.0, 1.0}, {0.0, 1.0}, cfg).x_s < 1.0);
    // Equal means: the indicator ignores a spread difference.
    const auto r = solver_quality({0.0, 1.0}, {0.0, 4.0}, cfg);
    CHECK(r.x_s == 1.0);
    CHECK(std::find(r.flags.begin(), r.flags.end(), "variance-blind-fixed-point") != r.flags.end());
  }

  TEST_CASE("meta-utility from its parts") {
    const SolverQualityConfig cfg{0.5, 5.0, 0.0, 10.0};
    const GaussianSummary c{2.0, 1.0};
    const GaussianSummary t{0.0, 1.5};
    const auto r = solver_quality(c, t, cfg);
    const double h2 = oracle::hellinger2_quadrature(2.0, 1.0, 0.0, 1.5);
    CHECK(r.m_s == doctest::Approx(std::sqrt(0.2) * std::sqrt(h2)).epsilon(1e-6));
    CHECK(r.x_s == doctest::Approx(2.0 / (1.0 + std::exp(-5.0 * r.m_s))));
  }

  TEST_CASE("degenerate sigmas are floored") {
    const SolverQualityConfig cfg{0.5, 5.0, 0.0, 100.0};
    const auto r = solver_quality({5.0, 0.0}, {5.0, 0.0}, cfg);
    CHECK(r.x_s == 1.0);
    CHECK(r.candidate.sigma == cfg.sigma_min());
  }

  TEST_CASE("synthetic reference points") {
    for (const auto& p : synthetic_xs()) {
      CAPTURE(p.label);
      CAPTURE(p.delta_r);
      CHECK(std::abs(p.x_s - p.expected) < 5e-4);
    }
  }

  TEST_CASE("config validation") {
    CHECK_THROWS_AS(solver_quality({0, 1}, {0, 1}, SolverQualityConfig{0.5, 5.0, 1.0, 1.0}), Error);
    CHECK_THROWS_AS(solver_quality({0, 1}, {0, 1}, SolverQualityConfig{1.5, 5.0, 0.0, 1.0}), Error);
    CHECK_THROWS_AS(solver_quality({0, 1}, {0, 1}, SolverQualityConfig{0.5, 0.0, 0.0, 1.0}), Error);
    CHECK_THROWS_AS(x_s_from_samples({1.0}, GaussianSummary{0, 1}, SolverQualityConfig{}), Error);
  }
}
