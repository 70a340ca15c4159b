#include <doctest.h>

#include <memory>
#include <numeric>
#include <sstream>

#include "famsec/error.hpp"
#include "famsec/harness.hpp"
#include "famsec/parallel.hpp"
#include "famsec/rollout.hpp"

using namespace famsec;

namespace {

Policy vi_policy(const RolloutTarget& t) { return make_tabular_policy(*t.spec, value_iteration(*t.spec).greedy_policy); }

}  // namespace

TEST_SUITE("rollout") {
  TEST_CASE("episodes are reproducible from their seed") {
    const auto target = make_rollout_target(builtin_task_13());
    const auto policy = vi_policy(target);
    const auto a = simulate_episode(target, policy, 99);
    const auto b = simulate_episode(target, policy, 99);
    CHECK(a.cumulative_reward == b.cumulative_reward);
    CHECK(a.trace.steps.size() == b.trace.steps.size());
    CHECK(a.trace.terminal == b.trace.terminal);
  }

  TEST_CASE("rewards along a trace add up and respect the horizon") {
    auto task = builtin_task_13();
    task.t_max = 4;
    const auto target = make_rollout_target(task);
    const auto policy = vi_policy(target);
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto ep = simulate_episode(target, policy, s);
      CHECK(ep.trace.steps.size() <= 4u);
      double sum = 0.0;
      for (const auto& st : ep.trace.steps) sum += st.reward;
      CHECK(sum == ep.cumulative_reward);
      if (ep.trace.terminal == TerminalKind::Timeout) CHECK(ep.trace.steps.size() == 4u);
    }
  }

  TEST_CASE("starting on the goal delivers immediately") {
    auto task = builtin_task_13();
    task.adt_start = task.goal;
    const auto target = make_rollout_target(task);
    const auto ep = simulate_episode(target, vi_policy(target), 1);
    CHECK(ep.trace.terminal == TerminalKind::Delivered);
    CHECK(ep.trace.steps.empty());
    CHECK(ep.cumulative_reward == task.rewards.goal);
  }

  TEST_CASE("parallel Monte-Carlo equals the serial reference for any worker count") {
    const auto target = make_rollout_target(builtin_task_13());
    const auto policy = vi_policy(target);
    const auto ref = reference::monte_carlo(target, policy, 300, 5);
    for (int w : {1, 2, 4}) {
      set_worker_count(w);
      const auto par = monte_carlo(target, policy, 300, 5);
      CHECK(par.values == ref.values);
      CHECK(par.discounted == ref.discounted);
      CHECK(par.seeds == ref.seeds);
    }
    set_worker_count(1);
    CHECK_THROWS_AS(monte_carlo(target, policy, 0, 5), Error);
  }

  TEST_CASE("online MCTS rollouts are deterministic across worker counts") {
    const auto target = make_rollout_target(builtin_task_13());
    MctsConfig c{50, 2, 1000.0};
    c.seed = 3;
    const auto policy = make_online_policy(target.spec, c);
    set_worker_count(1);
    const auto a = monte_carlo(target, policy, 40, 8);
    set_worker_count(3);
    const auto b = monte_carlo(target, policy, 40, 8);
    set_worker_count(1);
    CHECK(a.values == b.values);
  }

  TEST_CASE("summary statistics") {
    const auto s = summarize({1.0, 2.0, 3.0, 4.0}, 3);
    CHECK(s.mean == 2.5);
    CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(s.min == 1.0);
    CHECK(s.max == 4.0);
    CHECK(s.histogram.edges.size() == 4u);
    CHECK(std::accumulate(s.histogram.counts.begin(), s.histogram.counts.end(), std::size_t{0}) == 4u);
    CHECK(s.histogram.counts.back() == 2u);  // 3 and the top edge
    const auto one = summarize({7.0});
    CHECK(one.degenerate);
    CHECK(one.stddev == 0.0);
    CHECK_THROWS_AS(summarize(std::vector<double>{}), Error);
  }

  TEST_CASE("normalised histograms sum to one") {
    const auto p = normalized_histogram({0.0, 0.5, 1.0, 1.0, 9.0}, {0.0, 1.0, 2.0});
    CHECK(p[0] == doctest::Approx(0.4));
    CHECK(p[1] == doctest::Approx(0.6));
  }

  TEST_CASE("samples CSV layout") {
    const auto target = make_rollout_target(builtin_task_13());
    const auto s = monte_carlo(target, vi_policy(target), 3, 1);
    std::ostringstream out;
    write_samples_csv(out, s);
    const auto text = out.str();
    CHECK(text.rfind("episode,seed,cum_reward,terminal\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  }

  TEST_CASE("explicit rollout targets validate their inputs") {
    auto spec = std::make_shared<const MdpSpec>(build_mdp(builtin_task_13()));
    CHECK_THROWS_AS(make_rollout_target(spec, -1, 10), Error);
    CHECK_THROWS_AS(make_rollout_target(spec, 0, 0), Error);
  }
}
