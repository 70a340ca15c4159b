#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "famsec/rng.hpp"

namespace famsec {

using StateId = std::int32_t;
using ActionId = std::int32_t;

inline constexpr ActionId kNoAction = -1;

struct Outcome {
  StateId next;
  double prob;
  double reward;
};

struct ActionEntry {
  ActionId id;
  std::vector<Outcome> outcomes;
};

/// Finite stochastic decision process. States are 0..state_count()-1; each
/// state owns an ordered list of legal actions, and the list order is the
/// tie-break order used by every solver. Terminal states own no actions.
class MdpSpec {
 public:
  /// Throws InvalidSpec when a row does not sum to one, a successor is out of
  /// range, or a non-terminal state has no actions.
  MdpSpec(std::vector<std::vector<ActionEntry>> actions, std::vector<bool> terminal, double gamma);

  std::size_t state_count() const { return actions_.size(); }
  double gamma() const { return gamma_; }
  bool contains(StateId s) const { return s >= 0 && static_cast<std::size_t>(s) < actions_.size(); }
  bool is_terminal(StateId s) const { return terminal_[static_cast<std::size_t>(s)]; }
  std::span<const ActionEntry> actions(StateId s) const { return actions_[static_cast<std::size_t>(s)]; }
  std::optional<std::size_t> action_index(StateId s, ActionId a) const;

 private:
  std::vector<std::vector<ActionEntry>> actions_;
  std::vector<bool> terminal_;
  double gamma_;
};

inline constexpr double kRowSumTolerance = 1e-9;

struct ValueIterationOptions {
  double tolerance = 1e-9;
  int max_sweeps = 100000;
};

struct ValueTable {
  std::vector<double> values;
  std::vector<ActionId> greedy_policy;  // kNoAction for terminal states
  double residual = 0.0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

/// Synchronous (Jacobi) value iteration. Never throws on non-convergence;
/// check ValueTable::converged.
ValueTable value_iteration(const MdpSpec& spec, const ValueIterationOptions& options = {});

/// Q(s,a) under the supplied value estimate.
double action_value(const MdpSpec& spec, const ActionEntry& action, std::span<const double> values);

/// Largest |(T V)(s) - V(s)| over states.
double bellman_residual(const MdpSpec& spec, std::span<const double> values);

namespace kernels {
/// One Bellman backup over all states, OpenMP-parallel over states.
/// Returns max |out - in|.
double bellman_sweep(const MdpSpec& spec, std::span<const double> in, std::span<double> out);
}  // namespace kernels

namespace reference {
double bellman_sweep(const MdpSpec& spec, std::span<const double> in, std::span<double> out);
}  // namespace reference

// ---------------------------------------------------------------------------
// Monte-Carlo tree search

struct MctsConfig {
  int iterations = 1000;    // its_m
  int depth = 3;            // d_m
  double exploration = 1000.0;  // e_m
  int rollout_horizon = 0;  // total steps from the root; 0 means depth + 20
  std::uint64_t seed = 0;

  int effective_horizon() const { return rollout_horizon > 0 ? rollout_horizon : depth + 20; }
  void validate() const;
};

/// Per-action statistics of one search node.
struct NodeStats {
  int visits = 0;
  std::vector<int> action_visits;
  std::vector<double> q;
};

/// UCT choice: the first unvisited action in list order, otherwise
/// argmax q + c * sqrt(ln N / n_a) with lowest-index tie-break.
std::size_t uct_select(const NodeStats& node, double exploration);

class MctsSearch {
 public:
  MctsSearch(const MdpSpec& spec, StateId root, const MctsConfig& config);

  void run();
  /// Executes a single simulation from the root.
  void simulate_once();

  ActionId best_action() const;
  const NodeStats& root_stats() const { return nodes_.front().stats; }
  std::size_t node_count() const { return nodes_.size(); }
  /// Index of the action chosen by the most recent root selection.
  std::size_t last_root_choice() const { return last_root_choice_; }

 private:
  struct Child {
    StateId state;
    int node;
  };
  struct Node {
    StateId state;
    NodeStats stats;
    std::vector<std::vector<Child>> children;
  };

  int make_node(StateId s);
  double simulate(int node, int depth);
  double rollout(StateId s, int depth);
  const Outcome& sample(const ActionEntry& action);

  const MdpSpec& spec_;
  MctsConfig config_;
  std::vector<Node> nodes_;
  Rng rng_;
  std::size_t last_root_choice_ = 0;
};

/// Throws InvalidState for unknown or terminal states.
ActionId mcts_plan(const MdpSpec& spec, StateId state, const MctsConfig& config);

// ---------------------------------------------------------------------------
// Policies

struct TabularPolicy {
  std::vector<ActionId> table;  // kNoAction where undefined
};

struct OnlineMctsPolicy {
  std::shared_ptr<const MdpSpec> spec;
  MctsConfig config;
};

using Policy = std::variant<TabularPolicy, OnlineMctsPolicy>;

Policy make_tabular_policy(const MdpSpec& spec, std::vector<ActionId> table);
Policy make_online_policy(std::shared_ptr<const MdpSpec> spec, MctsConfig config);

/// Tabular: lookup (MissingState on gaps). Online: plans with a seed derived
/// from (config seed, state, call_counter).
ActionId policy_action(const Policy& policy, StateId state, std::uint64_t call_counter);

}  // namespace famsec
