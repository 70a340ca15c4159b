#include <doctest.h>

#include <cmath>
#include <vector>

#include "famsec/error.hpp"
#include "famsec/mdp.hpp"
#include "famsec/parallel.hpp"
#include "oracles.hpp"

using namespace famsec;

namespace {

// Two states: state 0 chooses between a safe +1 exit and a 50/50 gamble.
MdpSpec two_choice(double gamma) {
  std::vector<std::vector<ActionEntry>> a(2);
  a[0].push_back({0, {{1, 1.0, 1.0}}});
  a[0].push_back({1, {{1, 0.5, 3.0}, {0, 0.5, -1.0}}});
  return MdpSpec(std::move(a), {false, true}, gamma);
}

}  // namespace

TEST_SUITE("mdp") {
  TEST_CASE("spec validation rejects malformed rows") {
    using Rows = std::vector<std::vector<ActionEntry>>;
    CHECK_THROWS_AS(MdpSpec(Rows{{{0, {{0, 0.6, 0.0}}}}}, {false}, 0.9), Error);
    CHECK_THROWS_AS(MdpSpec(Rows{{{0, {{3, 1.0, 0.0}}}}}, {false}, 0.9), Error);
    CHECK_THROWS_AS(MdpSpec(Rows{{}}, {false}, 0.9), Error);
    CHECK_THROWS_AS(MdpSpec(Rows{{{0, {{0, 1.0, 0.0}}}}}, {true}, 0.9), Error);
    CHECK_THROWS_AS(MdpSpec(Rows{{{0, {{0, 1.0, 0.0}}}}}, {false}, 1.0), Error);
    CHECK_THROWS_AS(MdpSpec(Rows{{{0, {{0, 1.0, NAN}}}}}, {false}, 0.5), Error);
    try {
      MdpSpec(Rows{{{0, {{0, 0.6, 0.0}}}}}, {false}, 0.9);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidSpec);
    }
  }

  TEST_CASE("value iteration solves a two-state choice in closed form") {
    // V = max(1, 0.5*3 + 0.5*(-1 + g V)); with g = 0.9 the gamble gives
    // V = (1.5 - 0.5) / (1 - 0.45) = 1.8181...
    const auto spec = two_choice(0.9);
    const auto t = value_iteration(spec);
    CHECK(t.converged);
    CHECK(t.values[0] == doctest::Approx(1.0 / 0.55).epsilon(1e-9));
    CHECK(t.greedy_policy[0] == 1);
    CHECK(t.greedy_policy[1] == kNoAction);
    CHECK(t.values[1] == 0.0);
  }

  TEST_CASE("ties go to the lowest action index") {
    std::vector<std::vector<ActionEntry>> a(2);
    a[0].push_back({7, {{1, 1.0, 2.0}}});
    a[0].push_back({3, {{1, 1.0, 2.0}}});
    const MdpSpec spec(std::move(a), {false, true}, 0.5);
    CHECK(value_iteration(spec).greedy_policy[0] == 7);
  }

  TEST_CASE("value iteration matches an in-place oracle on random processes") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const auto spec = oracle::random_mdp(seed, 40, 0.9);
      const auto t = value_iteration(spec, {1e-12, 100000});
      const auto o = oracle::solve_q(spec);
      REQUIRE(t.converged);
      for (std::size_t s = 0; s < spec.state_count(); ++s) {
        CHECK(t.values[s] == doctest::Approx(o.v[s]).epsilon(1e-9));
        if (!spec.is_terminal(static_cast<StateId>(s)) && oracle::q_gap(o, s) > 1e-6)
          CHECK(t.greedy_policy[s] == spec.actions(static_cast<StateId>(s))[oracle::argmax_first(o.q[s])].id);
      }
    }
  }

  TEST_CASE("residual history is non-increasing for a contraction") {
    const auto spec = oracle::random_mdp(11, 50, 0.95);
    const auto t = value_iteration(spec);
    for (std::size_t i = 1; i < t.residual_history.size(); ++i)
      CHECK(t.residual_history[i] <= t.residual_history[i - 1] * (1.0 + 1e-12));
    CHECK(bellman_residual(spec, t.values) <= 1e-8);
  }

  TEST_CASE("sweep budget exhaustion is reported, not thrown") {
    const auto t = value_iteration(two_choice(0.99), {1e-12, 3});
    CHECK_FALSE(t.converged);
    CHECK(t.sweeps == 3);
    CHECK_THROWS_AS(value_iteration(two_choice(0.9), {0.0, 10}), Error);
  }

  TEST_CASE("parallel and serial Bellman sweeps agree bit for bit") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
      const auto spec = oracle::random_mdp(seed, 50, 0.9);
      std::vector<double> in(spec.state_count());
      for (std::size_t i = 0; i < in.size(); ++i) in[i] = std::sin(static_cast<double>(i));
      std::vector<double> a(in.size()), b(in.size());
      const double ra = kernels::bellman_sweep(spec, in, a);
      const double rb = reference::bellman_sweep(spec, in, b);
      CHECK(ra == rb);
      CHECK(a == b);
    }
  }

  TEST_CASE("tabular policies reject gaps and illegal actions") {
    const auto spec = two_choice(0.9);
    CHECK_THROWS_AS(make_tabular_policy(spec, {0}), Error);
    CHECK_THROWS_AS(make_tabular_policy(spec, {5, kNoAction}), Error);
    const auto p = make_tabular_policy(spec, {1, kNoAction});
    CHECK(policy_action(p, 0, 0) == 1);
    try {
      policy_action(p, 1, 0);
      FAIL("expected MissingState");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MissingState);
    }
  }
}
