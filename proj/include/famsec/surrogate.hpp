#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "famsec/delivery.hpp"
#include "famsec/mdp.hpp"
#include "famsec/mlp.hpp"
#include "famsec/solver_quality.hpp"

namespace famsec {

using FeatureSchema = std::vector<std::string>;

FeatureSchema baseline_schema();  // N, p_trans
FeatureSchema extended_schema();  // N, p_trans, e_m, d_m, its_m

struct TaskFeatures {
  FeatureSchema schema;
  std::vector<double> values;
};

/// Picks `schema` out of a named value table. Throws SchemaMismatch when a
/// name is missing and InvalidArgument on non-finite values.
TaskFeatures make_features(const FeatureSchema& schema, const std::map<std::string, double>& available);

struct ValueIterationSolver {
  ValueIterationOptions options{};
};

using TrustedSolver = std::variant<ValueIterationSolver, MctsConfig>;

/// Policy for `spec` under the given solver. MCTS solvers are online.
Policy solve_policy(const std::shared_ptr<const MdpSpec>& spec, const TrustedSolver& solver);

/// Every feature the sampler can supply for a task/solver pair. Solver
/// settings are zero for value iteration.
std::map<std::string, double> task_feature_values(const DeliveryTask& task, const TrustedSolver& solver);

enum class SpreadKind { StdDev, StdErr };

using TaskSampler = std::function<DeliveryTask(std::uint64_t seed)>;

/// Random networks and task placements: N in [n_min, n_max], p_trans in [p_min, p_max].
struct RandomTaskSampler {
  int n_min = 8;
  int n_max = 35;
  double p_min = 0.0;
  double p_max = 1.0;
  Rewards rewards{};
  double gamma = 0.95;
  int t_max = 50;
  GeneratorParams generator{};
  std::optional<GeneratorKind> kind;  // unset draws one of the four generators

  DeliveryTask operator()(std::uint64_t seed) const;
};

struct TrainingRow {
  std::vector<double> features;
  double mean = 0.0;
  double spread = 0.0;
  int n_runs = 0;
  std::uint64_t task_seed = 0;
};

struct TrainingSet {
  FeatureSchema schema;
  std::vector<TrainingRow> rows;
  double r_low = 0.0;
  double r_high = 0.0;
  SpreadKind spread_kind = SpreadKind::StdDev;
  int generated = 0;
  std::map<std::string, int> rejections;  // admissibility reason -> count
  std::vector<std::string> flags;
};

/// Samples `task_count` tasks, drops inadmissible ones (counted by reason),
/// solves each survivor with `trusted` and records the Monte-Carlo summary.
/// Parallel across tasks; deterministic given base_seed.
TrainingSet generate_training_data(const TaskSampler& sampler, const TrustedSolver& trusted, int task_count,
                                   int m_runs, std::uint64_t base_seed,
                                   const FeatureSchema& schema = baseline_schema(),
                                   SpreadKind spread = SpreadKind::StdDev);

struct SurrogateConfig {
  MlpTrainConfig mlp{};
  double validation_fraction = 0.2;

  void validate() const;
};

struct Standardizer {
  double shift = 0.0;
  double scale = 1.0;
};

struct SurrogateModel {
  FeatureSchema schema;
  std::vector<Standardizer> features;
  Standardizer mean_target;
  Standardizer spread_target;
  Mlp mean_net;
  Mlp spread_net;
  double r_low = 0.0;
  double r_high = 1.0;
  SpreadKind spread_kind = SpreadKind::StdDev;
  // Training metadata.
  SurrogateConfig config;
  TrainingCurve mean_curve;
  TrainingCurve spread_curve;
  int train_rows = 0;
  int validation_rows = 0;
  std::vector<std::string> flags;
};

inline constexpr int kModelSchemaVersion = 1;

/// Standardises features and targets, holds out a seeded validation split,
/// and trains one network for the mean and one for the spread.
SurrogateModel train_surrogate(const TrainingSet& data, const SurrogateConfig& config);

/// Mean from mean_net; sigma is the spread output floored at the model's
/// sigma_min. Throws SchemaMismatch.
GaussianSummary predict(const SurrogateModel& model, const TaskFeatures& features);

nlohmann::ordered_json model_to_json(const SurrogateModel& model);
/// Throws SchemaVersionMismatch or CorruptFile.
SurrogateModel model_from_json(const nlohmann::json& j);
void save_model(const SurrogateModel& model, const std::string& path);
SurrogateModel load_model(const std::string& path);

/// "epoch,train_mse,val_mse"
void write_training_curve_csv(std::ostream& out, const TrainingCurve& curve);

}  // namespace famsec
