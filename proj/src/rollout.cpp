#include "famsec/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "famsec/error.hpp"
#include "famsec/parallel.hpp"
#include "famsec/rng.hpp"

namespace famsec {

std::string_view to_string(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::Delivered: return "delivered";
    case TerminalKind::Caught: return "caught";
    case TerminalKind::Timeout: return "timeout";
    case TerminalKind::Absorbed: return "absorbed";
  }
  return "timeout";
}

RolloutTarget make_rollout_target(const DeliveryTask& task) {
  RolloutTarget target;
  target.spec = std::make_shared<const MdpSpec>(build_mdp(task));
  const int n = task.network.node_count();
  target.start = start_state(task);
  target.horizon = task.t_max;
  target.caught = caught_state(n);
  target.delivered = delivered_state(n);
  if (task.adt_start == task.goal) target.immediate_reward = task.rewards.goal;
  return target;
}

RolloutTarget make_rollout_target(std::shared_ptr<const MdpSpec> spec, StateId start, int horizon) {
  if (!spec || !spec->contains(start)) throw Error(ErrorKind::InvalidState, "rollout start state is not in the spec");
  if (horizon < 1) throw Error(ErrorKind::InvalidArgument, "rollout horizon must be positive");
  RolloutTarget target;
  target.spec = std::move(spec);
  target.start = start;
  target.horizon = horizon;
  return target;
}

std::uint64_t episode_seed(std::uint64_t base_seed, std::uint64_t index) { return mix_seed(base_seed, index); }

Episode simulate_episode(const RolloutTarget& target, const Policy& policy, std::uint64_t seed) {
  Episode ep;
  if (target.immediate_reward) {
    ep.trace.terminal = TerminalKind::Delivered;
    ep.trace.final_state = target.delivered;
    ep.cumulative_reward = *target.immediate_reward;
    ep.discounted_return = *target.immediate_reward;
    return ep;
  }
  const MdpSpec& spec = *target.spec;
  Rng rng(seed);
  StateId s = target.start;
  double discount = 1.0;
  ep.trace.steps.reserve(static_cast<std::size_t>(std::min(target.horizon, 256)));
  for (int t = 0; t < target.horizon && !spec.is_terminal(s); ++t) {
    const ActionId a = policy_action(policy, s, mix_seed(seed, static_cast<std::uint64_t>(t)));
    const auto index = spec.action_index(s, a);
    if (!index) throw Error(ErrorKind::InvalidState, "policy returned an illegal action");
    const auto& outcomes = spec.actions(s)[*index].outcomes;
    const double u = rng.uniform();
    const Outcome* chosen = &outcomes.back();
    double acc = 0.0;
    for (const auto& o : outcomes) {
      acc += o.prob;
      if (u < acc) {
        chosen = &o;
        break;
      }
    }
    ep.trace.steps.push_back({s, a, chosen->reward});
    ep.cumulative_reward += chosen->reward;
    ep.discounted_return += discount * chosen->reward;
    discount *= spec.gamma();
    s = chosen->next;
  }
  ep.trace.final_state = s;
  if (s == target.caught) ep.trace.terminal = TerminalKind::Caught;
  else if (s == target.delivered) ep.trace.terminal = TerminalKind::Delivered;
  else if (spec.is_terminal(s)) ep.trace.terminal = TerminalKind::Absorbed;
  else ep.trace.terminal = TerminalKind::Timeout;
  return ep;
}

namespace {

RewardSamples allocate(int m, std::uint64_t base_seed) {
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "run count must be >= 1");
  RewardSamples out;
  out.base_seed = base_seed;
  const auto n = static_cast<std::size_t>(m);
  out.values.resize(n);
  out.discounted.resize(n);
  out.seeds.resize(n);
  out.terminals.resize(n);
  return out;
}

void record(RewardSamples& out, std::size_t i, std::uint64_t seed, const Episode& ep) {
  out.values[i] = ep.cumulative_reward;
  out.discounted[i] = ep.discounted_return;
  out.seeds[i] = seed;
  out.terminals[i] = ep.trace.terminal;
}

}  // namespace

RewardSamples monte_carlo(const RolloutTarget& target, const Policy& policy, int m, std::uint64_t base_seed) {
  RewardSamples out = allocate(m, base_seed);
  ExceptionSlot errors;
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < m; ++i) {
    errors.run([&] {
      const auto seed = episode_seed(base_seed, static_cast<std::uint64_t>(i));
      record(out, static_cast<std::size_t>(i), seed, simulate_episode(target, policy, seed));
    });
  }
  errors.rethrow();
  return out;
}

namespace reference {

RewardSamples monte_carlo(const RolloutTarget& target, const Policy& policy, int m, std::uint64_t base_seed) {
  RewardSamples out = allocate(m, base_seed);
  for (int i = 0; i < m; ++i) {
    const auto seed = episode_seed(base_seed, static_cast<std::uint64_t>(i));
    record(out, static_cast<std::size_t>(i), seed, simulate_episode(target, policy, seed));
  }
  return out;
}

}  // namespace reference

DistSummary summarize(const std::vector<double>& values, int bin_count) {
  if (values.empty()) throw Error(ErrorKind::EmptySamples, "cannot summarize an empty sample");
  if (bin_count < 1) throw Error(ErrorKind::InvalidArgument, "bin_count must be >= 1");
  DistSummary s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  if (s.n < 2) {
    s.degenerate = true;
  } else {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.stderr_ = s.stddev / std::sqrt(static_cast<double>(s.n));
    s.degenerate = (s.stddev == 0.0);
  }
  // The mean can drift a rounding step outside [min, max] for constant samples.
  s.mean = std::clamp(s.mean, s.min, s.max);

  double lo_edge = s.min;
  double hi_edge = s.max;
  if (hi_edge == lo_edge) {
    lo_edge -= 0.5;
    hi_edge += 0.5;
  }
  const auto bins = static_cast<std::size_t>(bin_count);
  s.histogram.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    s.histogram.edges[i] = lo_edge + (hi_edge - lo_edge) * static_cast<double>(i) / static_cast<double>(bins);
  s.histogram.edges.back() = hi_edge;
  s.histogram.counts.assign(bins, 0);
  const double width = (hi_edge - lo_edge) / static_cast<double>(bins);
  for (double v : values) {
    auto b = static_cast<std::size_t>(std::floor((v - lo_edge) / width));
    s.histogram.counts[std::min(b, bins - 1)] += 1;
  }
  return s;
}

std::vector<double> normalized_histogram(const std::vector<double>& values, const std::vector<double>& edges) {
  if (values.empty()) throw Error(ErrorKind::EmptySamples, "cannot bin an empty sample");
  if (edges.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two bin edges");
  const std::size_t bins = edges.size() - 1;
  std::vector<double> p(bins, 0.0);
  for (double v : values) {
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t b = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
    p[std::min(b, bins - 1)] += 1.0;
  }
  for (double& x : p) x /= static_cast<double>(values.size());
  return p;
}

DiscountedReturnCheck discounted_return_check(const RolloutTarget& target, const ValueTable& table, int m,
                                              std::uint64_t base_seed) {
  const Policy policy = make_tabular_policy(*target.spec, table.greedy_policy);
  const auto samples = monte_carlo(target, policy, m, base_seed);
  const auto summary = summarize(samples.discounted, 1);
  DiscountedReturnCheck check;
  check.empirical_mean = summary.mean;
  check.stderr_ = summary.stderr_;
  check.value = target.immediate_reward ? *target.immediate_reward : table.values[static_cast<std::size_t>(target.start)];
  const double diff = check.empirical_mean - check.value;
  check.z_score = check.stderr_ > 0.0 ? diff / check.stderr_ : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
  return check;
}

void write_samples_csv(std::ostream& out, const RewardSamples& samples) {
  out << "episode,seed,cum_reward,terminal\n";
  char buf[64];
  for (std::size_t i = 0; i < samples.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", samples.values[i]);
    out << i << ',' << samples.seeds[i] << ',' << buf << ',' << to_string(samples.terminals[i]) << '\n';
  }
}

nlohmann::ordered_json summary_to_json(const DistSummary& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["mean"] = s.mean;
  j["std"] = s.stddev;
  j["stderr"] = s.stderr_;
  j["min"] = s.min;
  j["max"] = s.max;
  j["degenerate"] = s.degenerate;
  j["histogram"] = {{"edges", s.histogram.edges}, {"counts", s.histogram.counts}};
  return j;
}

}  // namespace famsec
