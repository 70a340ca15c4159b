#include "famsec/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "famsec/error.hpp"

namespace famsec {

MdpSpec::MdpSpec(std::vector<std::vector<ActionEntry>> actions, std::vector<bool> terminal, double gamma)
    : actions_(std::move(actions)), terminal_(std::move(terminal)), gamma_(gamma) {
  if (actions_.size() != terminal_.size())
    throw Error(ErrorKind::InvalidSpec, "terminal flags do not cover every state");
  if (!(gamma_ >= 0.0 && gamma_ < 1.0)) throw Error(ErrorKind::InvalidSpec, "discount must lie in [0,1)");
  const auto n = static_cast<StateId>(actions_.size());
  for (StateId s = 0; s < n; ++s) {
    const auto& row = actions_[static_cast<std::size_t>(s)];
    if (terminal_[static_cast<std::size_t>(s)]) {
      if (!row.empty())
        throw Error(ErrorKind::InvalidSpec, "terminal state " + std::to_string(s) + " has actions");
      continue;
    }
    if (row.empty())
      throw Error(ErrorKind::InvalidSpec, "non-terminal state " + std::to_string(s) + " has no actions");
    for (const auto& a : row) {
      double sum = 0.0;
      if (a.outcomes.empty())
        throw Error(ErrorKind::InvalidSpec, "action without outcomes at state " + std::to_string(s));
      for (const auto& o : a.outcomes) {
        if (o.next < 0 || o.next >= n)
          throw Error(ErrorKind::InvalidSpec, "successor out of range at state " + std::to_string(s));
        if (!(o.prob >= 0.0 && o.prob <= 1.0))
          throw Error(ErrorKind::InvalidSpec, "probability outside [0,1] at state " + std::to_string(s));
        if (!std::isfinite(o.reward))
          throw Error(ErrorKind::InvalidSpec, "non-finite reward at state " + std::to_string(s));
        sum += o.prob;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance)
        throw Error(ErrorKind::InvalidSpec, "transition row does not sum to 1 at state " + std::to_string(s));
    }
  }
}

std::optional<std::size_t> MdpSpec::action_index(StateId s, ActionId a) const {
  const auto row = actions(s);
  for (std::size_t i = 0; i < row.size(); ++i)
    if (row[i].id == a) return i;
  return std::nullopt;
}

double action_value(const MdpSpec& spec, const ActionEntry& action, std::span<const double> values) {
  double q = 0.0;
  for (const auto& o : action.outcomes) q += o.prob * (o.reward + spec.gamma() * values[static_cast<std::size_t>(o.next)]);
  return q;
}

namespace {

struct Backup {
  double value;
  std::size_t index;
};

Backup best_backup(const MdpSpec& spec, StateId s, std::span<const double> values) {
  const auto row = spec.actions(s);
  Backup best{-std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double q = action_value(spec, row[i], values);
    if (q > best.value) best = {q, i};
  }
  return best;
}

}  // namespace

namespace kernels {

double bellman_sweep(const MdpSpec& spec, std::span<const double> in, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(spec.state_count());
  double residual = 0.0;
#pragma omp parallel for schedule(static) reduction(max : residual)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto s = static_cast<StateId>(i);
    const double v = spec.is_terminal(s) ? 0.0 : best_backup(spec, s, in).value;
    out[static_cast<std::size_t>(i)] = v;
    residual = std::max(residual, std::abs(v - in[static_cast<std::size_t>(i)]));
  }
  return residual;
}

}  // namespace kernels

namespace reference {

double bellman_sweep(const MdpSpec& spec, std::span<const double> in, std::span<double> out) {
  double residual = 0.0;
  for (std::size_t i = 0; i < spec.state_count(); ++i) {
    const auto s = static_cast<StateId>(i);
    double v = 0.0;
    if (!spec.is_terminal(s)) {
      v = -std::numeric_limits<double>::infinity();
      for (const auto& a : spec.actions(s)) {
        double q = 0.0;
        for (const auto& o : a.outcomes) q += o.prob * (o.reward + spec.gamma() * in[static_cast<std::size_t>(o.next)]);
        v = std::max(v, q);
      }
    }
    out[i] = v;
    residual = std::max(residual, std::abs(v - in[i]));
  }
  return residual;
}

}  // namespace reference

double bellman_residual(const MdpSpec& spec, std::span<const double> values) {
  std::vector<double> next(values.size());
  return kernels::bellman_sweep(spec, values, next);
}

ValueTable value_iteration(const MdpSpec& spec, const ValueIterationOptions& options) {
  if (!(options.tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  if (options.max_sweeps < 1) throw Error(ErrorKind::InvalidArgument, "max_sweeps must be positive");

  ValueTable table;
  std::vector<double> current(spec.state_count(), 0.0);
  std::vector<double> next(spec.state_count(), 0.0);
  table.residual = std::numeric_limits<double>::infinity();
  while (table.sweeps < options.max_sweeps) {
    table.residual = kernels::bellman_sweep(spec, current, next);
    table.residual_history.push_back(table.residual);
    ++table.sweeps;
    std::swap(current, next);
    if (table.residual <= options.tolerance) {
      table.converged = true;
      break;
    }
  }
  table.values = std::move(current);

  table.greedy_policy.assign(spec.state_count(), kNoAction);
  for (std::size_t i = 0; i < spec.state_count(); ++i) {
    const auto s = static_cast<StateId>(i);
    if (spec.is_terminal(s)) continue;
    table.greedy_policy[i] = spec.actions(s)[best_backup(spec, s, table.values).index].id;
  }
  return table;
}

// ---------------------------------------------------------------------------

Policy make_tabular_policy(const MdpSpec& spec, std::vector<ActionId> table) {
  if (table.size() != spec.state_count())
    throw Error(ErrorKind::InvalidArgument, "policy table size does not match state count");
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto s = static_cast<StateId>(i);
    if (spec.is_terminal(s)) continue;
    if (table[i] == kNoAction)
      throw Error(ErrorKind::MissingState, "tabular policy has no action for state " + std::to_string(s));
    if (!spec.action_index(s, table[i]))
      throw Error(ErrorKind::InvalidArgument, "tabular policy action is illegal at state " + std::to_string(s));
  }
  return TabularPolicy{std::move(table)};
}

Policy make_online_policy(std::shared_ptr<const MdpSpec> spec, MctsConfig config) {
  if (!spec) throw Error(ErrorKind::InvalidArgument, "online policy needs a spec");
  config.validate();
  return OnlineMctsPolicy{std::move(spec), config};
}

ActionId policy_action(const Policy& policy, StateId state, std::uint64_t call_counter) {
  if (const auto* tab = std::get_if<TabularPolicy>(&policy)) {
    if (state < 0 || static_cast<std::size_t>(state) >= tab->table.size() ||
        tab->table[static_cast<std::size_t>(state)] == kNoAction)
      throw Error(ErrorKind::MissingState, "no tabular action for state " + std::to_string(state));
    return tab->table[static_cast<std::size_t>(state)];
  }
  const auto& online = std::get<OnlineMctsPolicy>(policy);
  MctsConfig call = online.config;
  call.seed = mix_seed(online.config.seed, static_cast<std::uint64_t>(state), call_counter);
  return mcts_plan(*online.spec, state, call);
}

}  // namespace famsec
