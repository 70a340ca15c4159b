#include <algorithm>
#include <cstdio>
#include <sstream>

#include "famsec/error.hpp"
#include "famsec/harness.hpp"

namespace famsec {

namespace {

using ojson = nlohmann::ordered_json;

RewardSamples measure_mcts(const RolloutTarget& target, MctsConfig config, int runs, std::uint64_t seed) {
  config.seed = mix_seed(seed, 1);
  return monte_carlo(target, make_online_policy(target.spec, config), runs, mix_seed(seed, 2));
}

void widen(double& lo, double& hi, const std::vector<double>& v) {
  const auto [a, b] = std::minmax_element(v.begin(), v.end());
  lo = std::min(lo, *a);
  hi = std::max(hi, *b);
}

}  // namespace

DepthSweep depth_sweep(const DepthSweepSpec& spec) {
  if (spec.depths.empty()) throw Error(ErrorKind::InvalidArgument, "depth sweep needs at least one depth");
  if (spec.runs < 2) throw Error(ErrorKind::InvalidArgument, "depth sweep needs at least two runs");
  const auto target = make_rollout_target(spec.task);
  const MctsConfig base{spec.iterations, spec.trusted_depth, spec.exploration};

  // Trusted and candidate streams are disjoint, so a candidate configured
  // like the trusted solver is an independent replicate.
  const auto trusted = measure_mcts(target, base, spec.runs, mix_seed(spec.seed, 0x7, spec.trusted_depth));
  std::vector<RewardSamples> candidates;
  for (int d : spec.depths) {
    MctsConfig c = base;
    c.depth = d;
    candidates.push_back(measure_mcts(target, c, spec.runs, mix_seed(spec.seed, 0xC, d)));
  }

  DepthSweep out;
  out.trusted_summary = summarize(trusted.values);
  double lo = out.trusted_summary.min;
  double hi = out.trusted_summary.max;
  for (const auto& c : candidates) widen(lo, hi, c.values);
  out.quality.r_low = lo;
  out.quality.r_high = hi > lo ? hi : lo + 1.0;
  for (std::size_t i = 0; i < spec.depths.size(); ++i) {
    const auto q = x_s_from_samples(candidates[i].values, trusted.values, out.quality);
    SweepRow row;
    row.x = spec.depths[i];
    row.x_s = q.x_s;
    row.x_o = assess_outcome(candidates[i].values, OutcomeStandard{}).x_o;
    row.candidate = q.candidate;
    row.trusted = q.trusted;
    row.flags = q.flags;
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<SurrogateSweepRow> surrogate_sweep(const SurrogateModel& model, const SurrogateSweepSpec& spec) {
  if (spec.p_values.empty()) throw Error(ErrorKind::InvalidArgument, "p_trans sweep needs at least one value");
  SolverQualityConfig quality;
  quality.r_low = model.r_low;
  quality.r_high = model.r_high;
  std::vector<SurrogateSweepRow> rows;
  std::uint64_t point = 0;
  for (int depth : spec.candidate_depths) {
    for (double e : spec.explorations) {
      for (double p : spec.p_values) {
        const DeliveryTask task = builtin_task_13(p, 0.95, -100.0);
        const auto target = make_rollout_target(task);
        const MctsConfig candidate{spec.iterations, depth, e};
        const auto samples = measure_mcts(target, candidate, spec.runs, mix_seed(spec.seed, point++));
        const MctsConfig trusted_solver{spec.iterations, spec.trusted_depth, 1000.0};
        const auto features = make_features(model.schema, task_feature_values(task, trusted_solver));
        const auto q = x_s_from_samples(samples.values, predict(model, features), quality);
        SurrogateSweepRow r;
        r.depth = depth;
        r.exploration = e;
        r.row.x = p;
        r.row.x_s = q.x_s;
        r.row.x_o = assess_outcome(samples.values, OutcomeStandard{}).x_o;
        r.row.candidate = q.candidate;
        r.row.trusted = q.trusted;
        r.row.flags = q.flags;
        rows.push_back(std::move(r));
      }
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "x,x_s,mu_c,sigma_c,mu_t,sigma_t\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.x, r.x_s, r.candidate.mu,
                  r.candidate.sigma, r.trusted.mu, r.trusted.sigma);
    out << buf;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Reports

namespace {

ojson row_json(const SweepRow& r) {
  return ojson{{"x", r.x},
               {"x_s", r.x_s},
               {"x_o", r.x_o},
               {"mu_c", r.candidate.mu},
               {"sigma_c", r.candidate.sigma},
               {"mu_t", r.trusted.mu},
               {"sigma_t", r.trusted.sigma},
               {"flags", r.flags}};
}

ojson header(std::string_view id, const ExperimentOptions& options, int runs) {
  ojson j;
  j["tool"] = "famsec";
  j["version"] = kToolVersion;
  j["experiment"] = id;
  j["seed"] = options.seed;
  j["runs"] = runs;
  return j;
}

ojson task_descriptor(const DeliveryTask& task) { return task_to_json(task); }

ExperimentResult run_depth_experiment(std::string_view id, const ExperimentOptions& options, DepthSweepSpec spec) {
  spec.seed = options.seed;
  if (options.runs > 0) spec.runs = options.runs;
  if (options.trusted_depth > 0) spec.trusted_depth = options.trusted_depth;
  const auto sweep = depth_sweep(spec);
  ExperimentResult res;
  auto& j = res.report;
  j = header(id, options, spec.runs);
  j["config"] = ojson{{"exploration", spec.exploration},
                      {"depths", spec.depths},
                      {"iterations", spec.iterations},
                      {"trusted_depth", spec.trusted_depth},
                      {"r_low", sweep.quality.r_low},
                      {"r_high", sweep.quality.r_high},
                      {"kappa", sweep.quality.kappa},
                      {"squash_gain", sweep.quality.squash_gain}};
  j["task"] = task_descriptor(spec.task);
  j["trusted_summary"] = summary_to_json(sweep.trusted_summary);
  ojson rows = ojson::array();
  for (const auto& r : sweep.rows) rows.push_back(row_json(r));
  j["rows"] = rows;
  res.csv.push_back({std::string(id) + "_sweep.csv", sweep_csv(sweep.rows)});
  return res;
}

ExperimentResult run_surrogate_experiment(std::string_view id, const ExperimentOptions& options,
                                          SurrogateSweepSpec spec) {
  if (!options.model_path) throw Error(ErrorKind::MissingSurrogate, std::string(id) + " needs --model");
  const auto model = load_model(*options.model_path);
  spec.seed = options.seed;
  if (options.runs > 0) spec.runs = options.runs;
  if (options.trusted_depth > 0) spec.trusted_depth = options.trusted_depth;
  const auto rows = surrogate_sweep(model, spec);
  ExperimentResult res;
  auto& j = res.report;
  j = header(id, options, spec.runs);
  j["config"] = ojson{{"p_values", spec.p_values},
                      {"explorations", spec.explorations},
                      {"candidate_depths", spec.candidate_depths},
                      {"trusted_depth", spec.trusted_depth},
                      {"iterations", spec.iterations},
                      {"model_features", model.schema},
                      {"r_low", model.r_low},
                      {"r_high", model.r_high}};
  ojson out = ojson::array();
  for (const auto& r : rows) {
    auto row = row_json(r.row);
    row["depth"] = r.depth;
    row["exploration"] = r.exploration;
    out.push_back(row);
  }
  j["rows"] = out;
  std::ostringstream csv;
  csv << "depth,exploration,x,x_s,mu_c,sigma_c,mu_t,sigma_t\n";
  for (const auto& r : rows) {
    char buf[320];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.depth, r.exploration, r.row.x,
                  r.row.x_s, r.row.candidate.mu, r.row.candidate.sigma, r.row.trusted.mu, r.row.trusted.sigma);
    csv << buf;
  }
  res.csv.push_back({std::string(id) + "_sweep.csv", csv.str()});
  return res;
}

ExperimentResult run_synthetic_xo(const ExperimentOptions& options) {
  ExperimentResult res;
  res.report = header("synthetic_xo", options, 0);
  ojson panels = ojson::array();
  std::ostringstream csv;
  csv << "panel,expected,x_o\n";
  for (const auto& p : synthetic_xo()) {
    panels.push_back(ojson{{"panel", p.label}, {"samples", p.samples}, {"expected", p.expected}, {"x_o", p.x_o}});
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g\n", p.label.c_str(), p.expected, p.x_o);
    csv << buf;
  }
  res.report["config"] = ojson{{"z_star", 0.0}, {"alpha", 1}, {"k", 1.0}};
  res.report["panels"] = panels;
  res.csv.push_back({"synthetic_xo.csv", csv.str()});
  return res;
}

ExperimentResult run_synthetic_xs(const ExperimentOptions& options) {
  ExperimentResult res;
  res.report = header("synthetic_xs", options, 0);
  ojson points = ojson::array();
  std::ostringstream csv;
  csv << "point,delta_r,mu_c,sigma_c,mu_t,sigma_t,expected,x_s\n";
  for (const auto& p : synthetic_xs()) {
    points.push_back(ojson{{"point", p.label},
                           {"delta_r", p.delta_r},
                           {"mu_c", p.candidate.mu},
                           {"sigma_c", p.candidate.sigma},
                           {"mu_t", p.trusted.mu},
                           {"sigma_t", p.trusted.sigma},
                           {"expected", p.expected},
                           {"x_s", p.x_s}});
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.label.c_str(), p.delta_r,
                  p.candidate.mu, p.candidate.sigma, p.trusted.mu, p.trusted.sigma, p.expected, p.x_s);
    csv << buf;
  }
  res.report["config"] = ojson{{"kappa", 0.5}, {"squash_gain", 5.0}};
  res.report["points"] = points;
  res.csv.push_back({"synthetic_xs.csv", csv.str()});
  return res;
}

ExperimentResult run_env_difficulty(const ExperimentOptions& options) {
  const int runs = options.runs > 0 ? options.runs : 1000;
  ExperimentResult res;
  res.report = header("env_difficulty", options, runs);
  ojson rows = ojson::array();
  std::ostringstream csv;
  csv << "environment,x_o,upm,lpm,mean,stddev\n";
  for (const auto& r : env_difficulty(runs, options.seed)) {
    rows.push_back(ojson{{"environment", r.name},
                         {"task", task_descriptor(builtin_env_task(r.name))},
                         {"outcome", outcome_to_json(r.outcome)},
                         {"summary", summary_to_json(r.summary)}});
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.name.c_str(), r.outcome.x_o,
                  r.outcome.upm, r.outcome.lpm, r.summary.mean, r.summary.stddev);
    csv << buf;
  }
  res.report["config"] = ojson{{"solver", "value_iteration"}, {"z_star", 0.0}, {"alpha", 1}, {"k", 1.0}};
  res.report["rows"] = rows;
  res.csv.push_back({"env_difficulty.csv", csv.str()});
  return res;
}

ExperimentResult run_calibration(const ExperimentOptions& options) {
  CalibrationSpec spec;
  spec.seed = options.seed;
  if (options.runs > 0) spec.assess_runs = options.runs;
  spec.sampler.n_max = 20;
  const auto rep = calibration_experiment(spec);
  ExperimentResult res;
  res.report = header("calibration", options, spec.assess_runs);
  res.report["config"] = ojson{{"tasks", spec.tasks},
                               {"assess_runs", spec.assess_runs},
                               {"solver", "value_iteration"},
                               {"n_range", {spec.sampler.n_min, spec.sampler.n_max}},
                               {"p_trans_range", {spec.sampler.p_min, spec.sampler.p_max}}};
  res.report["rejected"] = rep.rejected;
  res.report["brier"] = ojson{{"model", rep.brier_model},
                              {"constant_half", rep.brier_constant},
                              {"constant_majority", rep.brier_majority},
                              {"shuffled", rep.brier_shuffled}};
  std::ostringstream csv;
  csv << "task,predicted,outcome,shuffled\n";
  for (std::size_t i = 0; i < rep.predicted.size(); ++i) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d,%.17g\n", i, rep.predicted[i], rep.outcomes[i], rep.shuffled[i]);
    csv << buf;
  }
  res.csv.push_back({"calibration.csv", csv.str()});
  return res;
}

}  // namespace

ExperimentResult run_experiment(std::string_view id, const ExperimentOptions& options) {
  if (options.runs < 0) throw Error(ErrorKind::InvalidArgument, "runs must be non-negative");
  if (id == "exp1") {
    DepthSweepSpec spec{builtin_task_13(0.7, 0.9, -200.0), 1000.0, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 100, 9, 2000};
    return run_depth_experiment(id, options, std::move(spec));
  }
  if (id == "exp2") {
    DepthSweepSpec spec{builtin_task_45(0.7, 0.95), 2000.0, {1, 4, 7, 10, 13, 16, 19, 22, 25, 28}, 1000, 25, 20};
    return run_depth_experiment(id, options, std::move(spec));
  }
  if (id == "exp3") {
    SurrogateSweepSpec spec;
    spec.p_values = {0.0, 0.25, 0.5, 0.75, 1.0};
    spec.runs = 50;
    return run_surrogate_experiment(id, options, std::move(spec));
  }
  if (id == "exp4") {
    SurrogateSweepSpec spec;
    spec.p_values = {0.0, 0.25, 0.5, 0.75, 1.0};
    spec.explorations = {10.0, 100.0, 1000.0};
    spec.runs = 50;
    return run_surrogate_experiment(id, options, std::move(spec));
  }
  if (id == "synthetic_xo") return run_synthetic_xo(options);
  if (id == "synthetic_xs") return run_synthetic_xs(options);
  if (id == "env_difficulty") return run_env_difficulty(options);
  if (id == "calibration") return run_calibration(options);
  throw Error(ErrorKind::InvalidArgument, "unknown experiment '" + std::string(id) + "'");
}

}  // namespace famsec
