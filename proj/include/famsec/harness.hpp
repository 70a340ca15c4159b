#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "famsec/delivery.hpp"
#include "famsec/outcome.hpp"
#include "famsec/rollout.hpp"
#include "famsec/solver_quality.hpp"
#include "famsec/surrogate.hpp"

namespace famsec {

inline constexpr std::string_view kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Scoring helpers

/// Mean of (p_i - o_i)^2. Throws LengthMismatch or InvalidArgument.
double brier_score(const std::vector<double>& predicted, const std::vector<int>& outcomes);

/// Fraction of cumulative rewards >= 0.
double success_probability(const std::vector<double>& values);
inline double success_probability(const RewardSamples& samples) { return success_probability(samples.values); }

// ---------------------------------------------------------------------------
// Built-in tasks

/// Hand-made 13-intersection road network used by experiments 1, 3 and 4.
DeliveryTask builtin_task_13(double p_trans = 0.7, double gamma = 0.9, double loiter = -200.0);
/// Generated 45-intersection network (fixed seed) used by experiment 2.
DeliveryTask builtin_task_45(double p_trans = 0.7, double gamma = 0.95);

/// "impossible", "hard", "easy".
DeliveryTask builtin_env_task(std::string_view name);

// ---------------------------------------------------------------------------
// Synthetic indicator suites

struct XoPanel {
  std::string label;
  std::vector<double> samples;  // equally weighted atoms
  double expected = 0.0;
  double x_o = 0.0;
};

/// The twelve x_O panels at z* = 0.
std::vector<XoPanel> synthetic_xo();

struct XsPoint {
  std::string label;
  double delta_r = 0.0;
  GaussianSummary candidate;
  GaussianSummary trusted;
  double expected = 0.0;
  double x_s = 0.0;
};

/// Points B and C: candidate means are fitted at delta_r = 5, then the same
/// pair is re-scored over narrower reward ranges.
std::vector<XsPoint> synthetic_xs();

// ---------------------------------------------------------------------------
// Solver sweeps

struct SweepRow {
  double x = 0.0;  // swept variable
  double x_s = 1.0;
  double x_o = 0.0;
  GaussianSummary candidate;
  GaussianSummary trusted;
  std::vector<std::string> flags;
};

struct DepthSweepSpec {
  DeliveryTask task;
  double exploration = 1000.0;
  std::vector<int> depths;
  int iterations = 100;
  int trusted_depth = 9;
  int runs = 2000;
  std::uint64_t seed = 0;
};

struct DepthSweep {
  std::vector<SweepRow> rows;  // one per candidate depth
  DistSummary trusted_summary;
  SolverQualityConfig quality;
};

/// Measures the trusted MCTS and every candidate depth by Monte-Carlo and
/// scores each candidate against the trusted sample.
DepthSweep depth_sweep(const DepthSweepSpec& spec);

struct SurrogateSweepSpec {
  std::vector<double> p_values;
  std::vector<double> explorations{1000.0};
  std::vector<int> candidate_depths{3, 1};
  int trusted_depth = 8;
  int iterations = 1000;
  int runs = 100;
  std::uint64_t seed = 0;
};

struct SurrogateSweepRow {
  int depth = 0;
  double exploration = 0.0;
  SweepRow row;  // row.x is p_trans
};

/// Candidates measured on the 13-node task; the trusted side is the
/// surrogate's prediction.
std::vector<SurrogateSweepRow> surrogate_sweep(const SurrogateModel& model, const SurrogateSweepSpec& spec);

// ---------------------------------------------------------------------------
// Environment difficulty and calibration

struct EnvDifficultyRow {
  std::string name;
  OutcomeAssessmentResult outcome;
  DistSummary summary;
};

std::vector<EnvDifficultyRow> env_difficulty(int runs, std::uint64_t seed);

struct CalibrationSpec {
  int tasks = 50;
  int assess_runs = 200;
  RandomTaskSampler sampler{};
  std::uint64_t seed = 0;
};

struct CalibrationReport {
  std::vector<double> predicted;
  std::vector<int> outcomes;
  std::vector<double> shuffled;
  double brier_model = 0.0;
  double brier_constant = 0.0;
  double brier_majority = 0.0;
  double brier_shuffled = 0.0;
  int rejected = 0;
};

/// Per admissible task: p from assessment samples under the VI policy, truth
/// from one fresh episode on a disjoint seed.
CalibrationReport calibration_experiment(const CalibrationSpec& spec);

struct SurrogatePipelineSpec {
  int tasks = 200;
  int runs = 100;
  double holdout_fraction = 0.2;
  RandomTaskSampler sampler{};
  TrustedSolver trusted = ValueIterationSolver{};
  SurrogateConfig config{};
  std::uint64_t seed = 0;
};

struct SurrogatePipeline {
  TrainingSet data;
  SurrogateModel model;
  std::vector<double> holdout_predicted;
  std::vector<double> holdout_actual;
  double holdout_correlation = 0.0;
};

/// Generates training data, holds out a seeded fraction of the admitted
/// tasks, trains on the rest and scores the held-out means.
SurrogatePipeline surrogate_pipeline(const SurrogatePipelineSpec& spec);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Report assembly

struct CsvArtifact {
  std::string name;
  std::string content;
};

struct ExperimentOptions {
  std::uint64_t seed = 0;
  int runs = 0;            // 0 keeps the experiment default
  int trusted_depth = 0;   // 0 keeps the experiment default
  std::optional<std::string> model_path;
};

struct ExperimentResult {
  nlohmann::ordered_json report;
  std::vector<CsvArtifact> csv;
};

/// exp1, exp2, exp3, exp4, synthetic_xo, synthetic_xs, env_difficulty,
/// calibration. Throws InvalidArgument for unknown ids and MissingSurrogate
/// when exp3/exp4 lack a model.
ExperimentResult run_experiment(std::string_view id, const ExperimentOptions& options);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace famsec
