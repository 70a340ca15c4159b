#include "famsec/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "famsec/error.hpp"

namespace famsec {

double brier_score(const std::vector<double>& predicted, const std::vector<int>& outcomes) {
  if (predicted.size() != outcomes.size())
    throw Error(ErrorKind::LengthMismatch, "predictions and outcomes differ in length");
  if (predicted.empty()) throw Error(ErrorKind::InvalidArgument, "Brier score needs at least one prediction");
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!(predicted[i] >= 0.0 && predicted[i] <= 1.0))
      throw Error(ErrorKind::InvalidArgument, "predicted probability outside [0,1]");
    if (outcomes[i] != 0 && outcomes[i] != 1) throw Error(ErrorKind::InvalidArgument, "outcomes must be 0 or 1");
    const double d = predicted[i] - outcomes[i];
    total += d * d;
  }
  return total / static_cast<double>(predicted.size());
}

double success_probability(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorKind::EmptySamples, "success probability needs at least one sample");
  const auto wins = std::count_if(values.begin(), values.end(), [](double v) { return v >= 0.0; });
  return static_cast<double>(wins) / static_cast<double>(values.size());
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::LengthMismatch, "correlation inputs differ in length");
  if (a.size() < 2) throw Error(ErrorKind::EmptySamples, "correlation needs at least two points");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------
// Built-in tasks

namespace {

// A 4x3 street grid with a spur to the depot at node 12:
//   0 - 1 - 2 - 3
//   |   |   |   |
//   4 - 5 - 6 - 7
//   |   |   |   |
//   8 - 9 -10 -11
//        \     /
//          12
RoadNetwork grid_13() {
  return RoadNetwork(13,
                     {{0, 1}, {1, 2}, {2, 3}, {0, 4}, {1, 5}, {2, 6}, {3, 7}, {4, 5}, {5, 6}, {6, 7},
                      {4, 8}, {5, 9}, {6, 10}, {7, 11}, {8, 9}, {9, 10}, {10, 11}, {9, 12}, {11, 12}},
                     GeneratorKind::Manual, circle_layout(13));
}

RoadNetwork line(int n) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return RoadNetwork(n, std::move(edges), GeneratorKind::Manual, circle_layout(n));
}

}  // namespace

DeliveryTask builtin_task_13(double p_trans, double gamma, double loiter) {
  DeliveryTask task{grid_13(), 0, 7, 12, p_trans, Rewards{2000.0, -2000.0, loiter}, gamma, 50};
  task.validate();
  return task;
}

DeliveryTask builtin_task_45(double p_trans, double gamma) {
  constexpr std::uint64_t kNetworkSeed = 45;
  RoadNetwork net = generate_network(GeneratorKind::WattsStrogatz, 45, GeneratorParams{}, kNetworkSeed);
  const auto from_adt = net.bfs_distances(0);
  const auto far = std::max_element(from_adt.begin(), from_adt.end());
  const auto goal = static_cast<NodeId>(far - from_adt.begin());
  const int midway = (*far + 1) / 2;
  NodeId mg = 1;
  for (NodeId v = 1; v < net.node_count(); ++v) {
    if (v != goal && from_adt[static_cast<std::size_t>(v)] == std::max(midway, kMinStartDistance)) {
      mg = v;
      break;
    }
  }
  DeliveryTask task{std::move(net), 0, mg, goal, p_trans, Rewards{}, gamma, 50};
  task.validate();
  return task;
}

DeliveryTask builtin_env_task(std::string_view name) {
  if (name == "impossible") {
    // Thirteen hops at -200 each outweigh the goal reward.
    DeliveryTask task{line(14), 0, 7, 13, 0.7, Rewards{}, 0.95, 50};
    task.validate();
    return task;
  }
  if (name == "hard") {
    // Unreliable moves and the pursuer two hops away on the route to the depot.
    DeliveryTask task{grid_13(), 0, 9, 12, 0.4, Rewards{}, 0.95, 50};
    task.validate();
    return task;
  }
  if (name == "easy") {
    DeliveryTask task{grid_13(), 8, 3, 12, 0.95, Rewards{}, 0.95, 50};
    task.validate();
    return task;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown environment '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Synthetic suites

std::vector<XoPanel> synthetic_xo() {
  std::vector<XoPanel> panels{
      {"a", {10.0}, 1.0},          {"b", {-5.0, 25.0}, 2.0 / 3.0},   {"c", {5.0, 25.0}, 1.0},
      {"d", {-10.0}, -1.0},        {"e", {5.0, -25.0}, -2.0 / 3.0},  {"f", {-5.0, -25.0}, -1.0},
      {"g", {-10.0, 10.0}, 0.0},   {"h", {-25.0, 25.0}, 0.0},        {"i", {-5.0, 15.0}, 0.5},
      {"j", {-10.0, 30.0}, 0.5},   {"k", {5.0, -15.0}, -0.5},        {"l", {10.0, -30.0}, -0.5},
  };
  for (auto& p : panels) p.x_o = assess_outcome(p.samples, OutcomeStandard{}).x_o;
  return panels;
}

namespace {

// Candidate mean offset whose x_S at `config` equals `target`. x_S is
// monotone in the offset magnitude, so bisection suffices.
double fit_offset(double sign, const GaussianSummary& trusted, double sigma_c, const SolverQualityConfig& config,
                  double target) {
  double lo = 0.0;
  double hi = config.range();
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double x = solver_quality({trusted.mu + sign * mid, sigma_c}, trusted, config).x_s;
    const bool too_far = sign > 0 ? x > target : x < target;
    (too_far ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<XsPoint> synthetic_xs() {
  const GaussianSummary trusted{0.0, 1.0};
  constexpr double kCandidateSigma = 1.5;
  SolverQualityConfig wide{0.5, 5.0, 0.0, 5.0};
  std::vector<XsPoint> out;
  const auto add = [&](const std::string& label, double sign, double fitted_at, double narrow_range,
                       double narrow_expected) {
    const double offset = fit_offset(sign, trusted, kCandidateSigma, wide, fitted_at);
    const GaussianSummary candidate{trusted.mu + sign * offset, kCandidateSigma};
    for (const auto& [range, expected] : {std::pair{5.0, fitted_at}, std::pair{narrow_range, narrow_expected}}) {
      SolverQualityConfig config{0.5, 5.0, 0.0, range};
      out.push_back({label, range, candidate, trusted, expected, solver_quality(candidate, trusted, config).x_s});
    }
  };
  add("B", -1.0, 0.667, 0.05, 0.002);
  add("C", +1.0, 1.095, 0.005, 1.995);
  return out;
}

// ---------------------------------------------------------------------------
// Environment difficulty

std::vector<EnvDifficultyRow> env_difficulty(int runs, std::uint64_t seed) {
  std::vector<EnvDifficultyRow> rows;
  std::uint64_t index = 0;
  for (const char* name : {"impossible", "hard", "easy"}) {
    const DeliveryTask task = builtin_env_task(name);
    const auto target = make_rollout_target(task);
    const auto policy = solve_policy(target.spec, ValueIterationSolver{});
    const auto samples = monte_carlo(target, policy, runs, mix_seed(seed, index++));
    rows.push_back({name, assess_outcome(samples.values, OutcomeStandard{}), summarize(samples.values)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Calibration

CalibrationReport calibration_experiment(const CalibrationSpec& spec) {
  if (spec.tasks < 1) throw Error(ErrorKind::InvalidArgument, "calibration needs at least one task");
  if (spec.assess_runs < 1) throw Error(ErrorKind::InvalidArgument, "assessment runs must be >= 1");
  CalibrationReport report;
  const int max_attempts = spec.tasks * 50;
  for (int attempt = 0; static_cast<int>(report.predicted.size()) < spec.tasks; ++attempt) {
    if (attempt >= max_attempts) throw Error(ErrorKind::GenerationFailed, "too few admissible calibration tasks");
    const std::uint64_t task_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(attempt));
    const DeliveryTask task = spec.sampler(task_seed);
    if (!admissible_task(task).admissible) {
      ++report.rejected;
      continue;
    }
    const auto target = make_rollout_target(task);
    const auto policy = solve_policy(target.spec, ValueIterationSolver{});
    const auto assessment = monte_carlo(target, policy, spec.assess_runs, mix_seed(task_seed, 1));
    const auto truth = simulate_episode(target, policy, mix_seed(task_seed, 2));
    report.predicted.push_back(success_probability(assessment));
    report.outcomes.push_back(truth.cumulative_reward >= 0.0 ? 1 : 0);
  }
  const auto n = report.predicted.size();
  const auto wins = std::accumulate(report.outcomes.begin(), report.outcomes.end(), 0);
  const double majority = 2 * static_cast<std::size_t>(wins) >= n ? 1.0 : 0.0;
  report.shuffled = report.predicted;
  Rng shuffle_rng(mix_seed(spec.seed, 0x5A));
  std::shuffle(report.shuffled.begin(), report.shuffled.end(), shuffle_rng.engine());
  report.brier_model = brier_score(report.predicted, report.outcomes);
  report.brier_constant = brier_score(std::vector<double>(n, 0.5), report.outcomes);
  report.brier_majority = brier_score(std::vector<double>(n, majority), report.outcomes);
  report.brier_shuffled = brier_score(report.shuffled, report.outcomes);
  return report;
}

// ---------------------------------------------------------------------------
// Surrogate pipeline

SurrogatePipeline surrogate_pipeline(const SurrogatePipelineSpec& spec) {
  if (!(spec.holdout_fraction > 0.0 && spec.holdout_fraction < 1.0))
    throw Error(ErrorKind::InvalidArgument, "holdout fraction must lie in (0,1)");
  SurrogatePipeline out;
  out.data = generate_training_data(spec.sampler, spec.trusted, spec.tasks, spec.runs, spec.seed);

  std::vector<std::size_t> order(out.data.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split(mix_seed(spec.seed, 0xB0));
  std::shuffle(order.begin(), order.end(), split.engine());
  const auto holdout =
      static_cast<std::size_t>(std::floor(spec.holdout_fraction * static_cast<double>(order.size())));
  TrainingSet train = out.data;
  train.rows.clear();
  std::vector<const TrainingRow*> held;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& row = out.data.rows[order[k]];
    if (k < holdout) held.push_back(&row);
    else train.rows.push_back(row);
  }
  SurrogateConfig config = spec.config;
  config.mlp.seed = mix_seed(spec.seed, 0xC0);
  out.model = train_surrogate(train, config);
  for (const auto* row : held) {
    out.holdout_predicted.push_back(predict(out.model, TaskFeatures{out.data.schema, row->features}).mu);
    out.holdout_actual.push_back(row->mean);
  }
  if (out.holdout_predicted.size() >= 2)
    out.holdout_correlation = pearson_correlation(out.holdout_predicted, out.holdout_actual);
  return out;
}

}  // namespace famsec
