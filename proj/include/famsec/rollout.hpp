#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "famsec/delivery.hpp"
#include "famsec/mdp.hpp"

namespace famsec {

enum class TerminalKind { Delivered, Caught, Timeout, Absorbed };

std::string_view to_string(TerminalKind kind);

struct TraceStep {
  StateId state;
  ActionId action;
  double reward;
};

struct TraceLog {
  std::vector<TraceStep> steps;
  TerminalKind terminal = TerminalKind::Timeout;
  StateId final_state = 0;
};

/// Everything a rollout needs: the compiled process, where to start, the
/// horizon, and which absorbing ids mean what.
struct RolloutTarget {
  std::shared_ptr<const MdpSpec> spec;
  StateId start = 0;
  int horizon = 50;
  StateId caught = -1;
  StateId delivered = -1;
  /// Set when the episode is over before the first step (ADT starts on the goal).
  std::optional<double> immediate_reward;
};

RolloutTarget make_rollout_target(const DeliveryTask& task);
RolloutTarget make_rollout_target(std::shared_ptr<const MdpSpec> spec, StateId start, int horizon);

struct Episode {
  TraceLog trace;
  double cumulative_reward = 0.0;  // undiscounted
  double discounted_return = 0.0;
};

/// Bit-reproducible given episode_seed. Online policies are queried with a
/// call counter mixed from (episode_seed, step).
Episode simulate_episode(const RolloutTarget& target, const Policy& policy, std::uint64_t episode_seed);

std::uint64_t episode_seed(std::uint64_t base_seed, std::uint64_t index);

struct RewardSamples {
  std::vector<double> values;
  std::vector<double> discounted;
  std::vector<std::uint64_t> seeds;
  std::vector<TerminalKind> terminals;
  std::uint64_t base_seed = 0;
  std::size_t run_count() const { return values.size(); }
};

/// m independent episodes, OpenMP-parallel; slot i always holds episode i.
RewardSamples monte_carlo(const RolloutTarget& target, const Policy& policy, int m, std::uint64_t base_seed);

namespace reference {
RewardSamples monte_carlo(const RolloutTarget& target, const Policy& policy, int m, std::uint64_t base_seed);
}  // namespace reference

struct Histogram {
  std::vector<double> edges;  // bin_count + 1 ascending edges
  std::vector<std::size_t> counts;
};

struct DistSummary {
  double mean = 0.0;
  double stddev = 0.0;
  double stderr_ = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
  Histogram histogram;
  bool degenerate = false;  // n < 2: stddev reported as 0
};

/// Equal-width bins over [min, max]; the last bin is closed.
DistSummary summarize(const std::vector<double>& values, int bin_count = 20);
inline DistSummary summarize(const RewardSamples& samples, int bin_count = 20) {
  return summarize(samples.values, bin_count);
}

/// Counts over caller-supplied edges, normalised to sum to one. Values outside
/// the edges are clamped into the end bins.
std::vector<double> normalized_histogram(const std::vector<double>& values, const std::vector<double>& edges);

struct DiscountedReturnCheck {
  double empirical_mean = 0.0;
  double stderr_ = 0.0;
  double value = 0.0;
  double z_score = 0.0;
};

/// Mean discounted return of the greedy policy from `table` versus V(start).
DiscountedReturnCheck discounted_return_check(const RolloutTarget& target, const ValueTable& table, int m,
                                              std::uint64_t base_seed);

/// "episode,seed,cum_reward,terminal"
void write_samples_csv(std::ostream& out, const RewardSamples& samples);

nlohmann::ordered_json summary_to_json(const DistSummary& summary);

}  // namespace famsec
