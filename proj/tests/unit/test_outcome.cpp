#include <doctest.h>

#include <cmath>
#include <random>

#include "famsec/error.hpp"
#include "famsec/harness.hpp"
#include "famsec/outcome.hpp"
#include "oracles.hpp"

using namespace famsec;

TEST_SUITE("outcome") {
  TEST_CASE("x_o agrees with the definition on random samples") {
    std::mt19937_64 g(1);
    std::normal_distribution<double> n(0.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> z(1 + trial % 37);
      for (auto& v : z) v = std::round(n(g));
      const double zs = std::round(n(g) / 2.0);
      const int alpha = trial % 3;
      const double k = 0.5 + (trial % 4) * 0.5;
      const auto r = assess_outcome(z, OutcomeStandard{zs, alpha, k});
      CHECK(r.x_o == doctest::Approx(oracle::x_o(z, zs, alpha, k)).epsilon(1e-12));
      CHECK(r.x_o >= -1.0);
      CHECK(r.x_o <= 1.0);
    }
  }

  TEST_CASE("synthetic panels reproduce their expected values") {
    for (const auto& p : synthetic_xo()) {
      CAPTURE(p.label);
      CHECK(std::abs(p.x_o - p.expected) <= 1e-9);
      CHECK(p.x_o == doctest::Approx(oracle::x_o(p.samples, 0.0, 1, 1.0)));
    }
  }

  TEST_CASE("one-sided samples saturate") {
    CHECK(assess_outcome({1.0, 5.0}, {}).x_o == 1.0);
    CHECK(assess_outcome({-1.0, -5.0}, {}).x_o == -1.0);
    const auto met = assess_outcome({0.0, 0.0}, {});
    CHECK(met.x_o == 0.0);
    CHECK(met.flags == std::vector<std::string>{"standard-exactly-met"});
  }

  TEST_CASE("alpha zero counts a tie as a gain") {
    const auto m = upm_lpm({0.0, -1.0}, OutcomeStandard{0.0, 0, 1.0});
    CHECK(m.upm == 0.5);
    CHECK(m.lpm == 0.5);
    CHECK(omega_ratio({0.0, 1.0, -1.0}, 0.0) == 2.0);
    CHECK(std::isinf(omega_ratio({1.0}, 0.0)));
  }

  TEST_CASE("raising z* never raises x_o") {
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::vector<double> z(50);
    for (auto& v : z) v = u(g);
    std::vector<double> grid;
    for (int i = -12; i <= 12; ++i) grid.push_back(i);
    const auto prof = confidence_profile(z, grid, 1, 1.0);
    for (std::size_t i = 1; i < prof.size(); ++i) CHECK(prof[i].x_o <= prof[i - 1].x_o);
    CHECK(prof.front().x_o == 1.0);
    CHECK(prof.back().x_o == -1.0);
  }

  TEST_CASE("k sharpens without changing sign") {
    const std::vector<double> z{3.0, -1.0};
    const double a = assess_outcome(z, {0.0, 1, 1.0}).x_o;
    const double b = assess_outcome(z, {0.0, 1, 3.0}).x_o;
    CHECK(a == doctest::Approx(0.5));
    CHECK(b == doctest::Approx(26.0 / 28.0));
  }

  TEST_CASE("invalid standards and samples") {
    CHECK_THROWS_AS(assess_outcome({}, {}), Error);
    CHECK_THROWS_AS(assess_outcome({1.0}, {0.0, -1, 1.0}), Error);
    CHECK_THROWS_AS(assess_outcome({1.0}, {0.0, 1, 0.0}), Error);
    CHECK_THROWS_AS(assess_outcome({1.0}, {INFINITY, 1, 1.0}), Error);
  }

  TEST_CASE("discrete GOA") {
    // Classes 1..3 with z* = 2: up = (1)(.5) + (2)(.2) = .9, down = (1)(.3).
    const DiscreteOutcomeDist d{{1, 2, 3}, {0.3, 0.5, 0.2}};
    const auto r = goa(d, 2, 1.0);
    CHECK(r.upm == doctest::Approx(0.9));
    CHECK(r.lpm == doctest::Approx(0.3));
    CHECK(r.x_o == doctest::Approx(0.5));
    CHECK_THROWS_AS(goa(DiscreteOutcomeDist{{2, 1}, {0.5, 0.5}}, 1, 1.0), Error);
    CHECK_THROWS_AS(goa(DiscreteOutcomeDist{{1, 2}, {0.5, 0.6}}, 1, 1.0), Error);
    CHECK_THROWS_AS(goa(d, 9, 1.0), Error);
  }

  TEST_CASE("CPT with identity value and weighting is the trimmed mean sum") {
    const std::vector<double> z{-2.0, -1.0, 0.5, 3.0};
    CptSpec spec;
    // Losses at or below 0 and gains above 0 each weigh 1/4.
    CHECK(cpt_value(z, spec) == doctest::Approx((-2.0 - 1.0 + 0.5 + 3.0) / 4.0));
    spec.value = loss_averse_linear_value(2.0);
    CHECK(cpt_value(z, spec) == doctest::Approx((-4.0 - 2.0 + 0.5 + 3.0) / 4.0));
    spec.loss_bound = -1.5;
    spec.gain_bound = 1.0;
    CHECK(cpt_value(z, spec) == doctest::Approx((-4.0 + 3.0) / 4.0));
    spec.loss_bound = 2.0;
    CHECK_THROWS_AS(cpt_value(z, spec), Error);
  }

  TEST_CASE("probability weighting fixes the endpoints") {
    const auto w = probability_weighting(0.61);
    CHECK(w(0.0) == 0.0);
    CHECK(w(1.0) == 1.0);
    CHECK(w(0.01) > 0.01);  // small probabilities are overweighted
    CHECK(w(0.9) < 0.9);
    const auto v = power_value(0.88, 0.88, 2.25);
    CHECK(v(1.0) == doctest::Approx(1.0));
    CHECK(v(-1.0) == doctest::Approx(-2.25));
  }
}
