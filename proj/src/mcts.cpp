#include <cmath>
#include <limits>
#include <string>

#include "famsec/error.hpp"
#include "famsec/mdp.hpp"

namespace famsec {

void MctsConfig::validate() const {
  if (iterations < 1) throw Error(ErrorKind::InvalidConfig, "MCTS iterations must be >= 1");
  if (depth < 1) throw Error(ErrorKind::InvalidConfig, "MCTS depth must be >= 1");
  if (!(exploration >= 0.0)) throw Error(ErrorKind::InvalidConfig, "MCTS exploration must be >= 0");
  if (rollout_horizon < 0) throw Error(ErrorKind::InvalidConfig, "rollout horizon must be >= 0");
}

std::size_t uct_select(const NodeStats& node, double exploration) {
  for (std::size_t i = 0; i < node.action_visits.size(); ++i)
    if (node.action_visits[i] == 0) return i;
  const double log_n = std::log(static_cast<double>(node.visits));
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < node.action_visits.size(); ++i) {
    const double score = node.q[i] + exploration * std::sqrt(log_n / node.action_visits[i]);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

MctsSearch::MctsSearch(const MdpSpec& spec, StateId root, const MctsConfig& config)
    : spec_(spec), config_(config), rng_(config.seed) {
  config_.validate();
  if (!spec_.contains(root)) throw Error(ErrorKind::InvalidState, "unknown state " + std::to_string(root));
  if (spec_.is_terminal(root)) throw Error(ErrorKind::InvalidState, "state " + std::to_string(root) + " is terminal");
  nodes_.reserve(static_cast<std::size_t>(config_.iterations) + 1);
  make_node(root);
}

int MctsSearch::make_node(StateId s) {
  const auto n_actions = spec_.actions(s).size();
  Node node;
  node.state = s;
  node.stats.action_visits.assign(n_actions, 0);
  node.stats.q.assign(n_actions, 0.0);
  node.children.resize(n_actions);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size() - 1);
}

const Outcome& MctsSearch::sample(const ActionEntry& action) {
  const double u = rng_.uniform();
  double acc = 0.0;
  for (const auto& o : action.outcomes) {
    acc += o.prob;
    if (u < acc) return o;
  }
  return action.outcomes.back();
}

double MctsSearch::rollout(StateId s, int depth) {
  const int horizon = config_.effective_horizon();
  double total = 0.0;
  double discount = 1.0;
  for (int t = depth; t < horizon && !spec_.is_terminal(s); ++t) {
    const auto row = spec_.actions(s);
    const auto& a = row[rng_.index(row.size())];
    const auto& o = sample(a);
    total += discount * o.reward;
    discount *= spec_.gamma();
    s = o.next;
  }
  return total;
}

double MctsSearch::simulate(int node_index, int depth) {
  if (depth >= config_.depth) return rollout(nodes_[static_cast<std::size_t>(node_index)].state, depth);

  const std::size_t a = uct_select(nodes_[static_cast<std::size_t>(node_index)].stats, config_.exploration);
  if (depth == 0) last_root_choice_ = a;
  const StateId s = nodes_[static_cast<std::size_t>(node_index)].state;
  const auto& o = sample(spec_.actions(s)[a]);

  double ret = o.reward;
  if (!spec_.is_terminal(o.next)) {
    int child = -1;
    for (const auto& c : nodes_[static_cast<std::size_t>(node_index)].children[a])
      if (c.state == o.next) child = c.node;
    if (child < 0) {
      child = make_node(o.next);  // may reallocate nodes_
      nodes_[static_cast<std::size_t>(node_index)].children[a].push_back({o.next, child});
    }
    ret += spec_.gamma() * simulate(child, depth + 1);
  }

  auto& stats = nodes_[static_cast<std::size_t>(node_index)].stats;
  stats.visits += 1;
  stats.action_visits[a] += 1;
  stats.q[a] += (ret - stats.q[a]) / stats.action_visits[a];
  return ret;
}

void MctsSearch::simulate_once() { simulate(0, 0); }

void MctsSearch::run() {
  for (int i = 0; i < config_.iterations; ++i) simulate_once();
}

ActionId MctsSearch::best_action() const {
  const auto& stats = nodes_.front().stats;
  std::size_t best = 0;
  double best_q = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < stats.q.size(); ++i) {
    if (stats.action_visits[i] == 0) continue;
    if (stats.q[i] > best_q) {
      best_q = stats.q[i];
      best = i;
    }
  }
  return spec_.actions(nodes_.front().state)[best].id;
}

ActionId mcts_plan(const MdpSpec& spec, StateId state, const MctsConfig& config) {
  MctsSearch search(spec, state, config);
  search.run();
  return search.best_action();
}

}  // namespace famsec
