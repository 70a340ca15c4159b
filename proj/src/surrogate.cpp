#include "famsec/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "famsec/error.hpp"
#include "famsec/parallel.hpp"
#include "famsec/rollout.hpp"

namespace famsec {

FeatureSchema baseline_schema() { return {"N", "p_trans"}; }
FeatureSchema extended_schema() { return {"N", "p_trans", "e_m", "d_m", "its_m"}; }

TaskFeatures make_features(const FeatureSchema& schema, const std::map<std::string, double>& available) {
  TaskFeatures f;
  f.schema = schema;
  for (const auto& name : schema) {
    const auto it = available.find(name);
    if (it == available.end()) throw Error(ErrorKind::SchemaMismatch, "feature '" + name + "' is not available");
    if (!std::isfinite(it->second)) throw Error(ErrorKind::InvalidArgument, "feature '" + name + "' is not finite");
    f.values.push_back(it->second);
  }
  return f;
}

Policy solve_policy(const std::shared_ptr<const MdpSpec>& spec, const TrustedSolver& solver) {
  if (const auto* vi = std::get_if<ValueIterationSolver>(&solver))
    return make_tabular_policy(*spec, value_iteration(*spec, vi->options).greedy_policy);
  return make_online_policy(spec, std::get<MctsConfig>(solver));
}

std::map<std::string, double> task_feature_values(const DeliveryTask& task, const TrustedSolver& solver) {
  std::map<std::string, double> v{{"N", task.network.node_count()}, {"p_trans", task.p_trans},
                                  {"e_m", 0.0}, {"d_m", 0.0}, {"its_m", 0.0}};
  if (const auto* m = std::get_if<MctsConfig>(&solver)) {
    v["e_m"] = m->exploration;
    v["d_m"] = m->depth;
    v["its_m"] = m->iterations;
  }
  return v;
}

DeliveryTask RandomTaskSampler::operator()(std::uint64_t seed) const {
  if (n_min < 8 || n_max < n_min) throw Error(ErrorKind::InvalidArgument, "node range must satisfy 8 <= n_min <= n_max");
  if (!(p_min >= 0.0 && p_max <= 1.0 && p_min <= p_max))
    throw Error(ErrorKind::InvalidArgument, "p_trans range must lie within [0,1]");
  Rng rng(seed);
  const int n = n_min + static_cast<int>(rng.index(static_cast<std::uint64_t>(n_max - n_min + 1)));
  const auto drawn = static_cast<GeneratorKind>(rng.index(4));
  const GeneratorKind chosen = kind.value_or(drawn);
  if (chosen == GeneratorKind::Manual) throw Error(ErrorKind::InvalidArgument, "sampler cannot generate manual networks");
  const double p = p_min + (p_max - p_min) * rng.uniform();
  const auto pick = [&] { return static_cast<NodeId>(rng.index(static_cast<std::uint64_t>(n))); };
  const NodeId adt = pick();
  const NodeId mg = pick();
  const NodeId goal = pick();
  DeliveryTask task{generate_network(chosen, n, generator, rng.next()), adt, mg, goal, p, rewards, gamma, t_max};
  task.seed = seed;
  return task;
}

namespace {

struct TaskOutcome {
  bool admitted = false;
  std::string reason;
  TrainingRow row;
  double lo = 0.0;
  double hi = 0.0;
};

}  // namespace

TrainingSet generate_training_data(const TaskSampler& sampler, const TrustedSolver& trusted, int task_count,
                                   int m_runs, std::uint64_t base_seed, const FeatureSchema& schema,
                                   SpreadKind spread) {
  if (task_count < 1) throw Error(ErrorKind::InvalidArgument, "task count must be >= 1");
  if (m_runs < 2) throw Error(ErrorKind::InvalidArgument, "each task needs at least two runs");
  std::vector<TaskOutcome> outcomes(static_cast<std::size_t>(task_count));
  ExceptionSlot errors;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < task_count; ++i) {
    errors.run([&] {
      auto& out = outcomes[static_cast<std::size_t>(i)];
      const std::uint64_t task_seed = mix_seed(base_seed, static_cast<std::uint64_t>(i));
      const DeliveryTask task = sampler(task_seed);
      const auto adm = admissible_task(task);
      if (!adm.admissible) {
        out.reason = adm.reason;
        return;
      }
      TrustedSolver solver = trusted;
      if (auto* m = std::get_if<MctsConfig>(&solver)) m->seed = mix_seed(task_seed, 1);
      const auto target = make_rollout_target(task);
      const auto samples = monte_carlo(target, solve_policy(target.spec, solver), m_runs, mix_seed(task_seed, 2));
      const auto s = summarize(samples.values, 1);
      out.admitted = true;
      out.row.features = make_features(schema, task_feature_values(task, solver)).values;
      out.row.mean = s.mean;
      out.row.spread = spread == SpreadKind::StdDev ? s.stddev : s.stderr_;
      out.row.n_runs = m_runs;
      out.row.task_seed = task_seed;
      out.lo = s.min;
      out.hi = s.max;
    });
  }
  errors.rethrow();

  TrainingSet set;
  set.schema = schema;
  set.spread_kind = spread;
  set.generated = task_count;
  bool first = true;
  for (auto& o : outcomes) {
    if (!o.admitted) {
      ++set.rejections[o.reason];
      continue;
    }
    set.r_low = first ? o.lo : std::min(set.r_low, o.lo);
    set.r_high = first ? o.hi : std::max(set.r_high, o.hi);
    first = false;
    set.rows.push_back(std::move(o.row));
  }
  if (set.rows.empty()) throw Error(ErrorKind::GenerationFailed, "every sampled task was rejected");
  if (!(set.r_high > set.r_low)) {
    set.r_high = set.r_low + 1.0;
    set.flags.emplace_back("degenerate-reward-range");
  }
  return set;
}

void SurrogateConfig::validate() const {
  mlp.validate();
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw Error(ErrorKind::InvalidConfig, "validation fraction must lie in [0,1)");
}

namespace {

Standardizer fit(const std::vector<double>& v, bool& degenerate) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  degenerate = !(sd > 0.0);
  return {mean, degenerate ? 1.0 : sd};
}

double apply(const Standardizer& s, double x) { return (x - s.shift) / s.scale; }
double invert(const Standardizer& s, double z) { return z * s.scale + s.shift; }

}  // namespace

SurrogateModel train_surrogate(const TrainingSet& data, const SurrogateConfig& config) {
  config.validate();
  const std::size_t n = data.rows.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "training needs at least two rows");
  const std::size_t width = data.schema.size();
  for (const auto& r : data.rows)
    if (r.features.size() != width) throw Error(ErrorKind::SchemaMismatch, "row width does not match schema");

  SurrogateModel model;
  model.schema = data.schema;
  model.r_low = data.r_low;
  model.r_high = data.r_high;
  model.spread_kind = data.spread_kind;
  model.config = config;
  if (n < 10) model.flags.emplace_back("few-rows");

  bool degenerate = false;
  bool any_degenerate_feature = false;
  for (std::size_t c = 0; c < width; ++c) {
    std::vector<double> col;
    for (const auto& r : data.rows) col.push_back(r.features[c]);
    model.features.push_back(fit(col, degenerate));
    any_degenerate_feature |= degenerate;
  }
  if (any_degenerate_feature) model.flags.emplace_back("degenerate-features");
  std::vector<double> means;
  std::vector<double> spreads;
  for (const auto& r : data.rows) {
    means.push_back(r.mean);
    spreads.push_back(r.spread);
  }
  model.mean_target = fit(means, degenerate);
  if (degenerate) model.flags.emplace_back("constant-mean-target");
  model.spread_target = fit(spreads, degenerate);
  if (degenerate) model.flags.emplace_back("constant-spread-target");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(mix_seed(config.mlp.seed, 10));
  std::shuffle(order.begin(), order.end(), split_rng.engine());
  const auto val_count =
      std::min(n - 1, static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(n))));

  std::vector<std::vector<double>> x_train, x_val;
  std::vector<double> mean_train, mean_val, spread_train, spread_val;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = data.rows[order[k]];
    std::vector<double> x(width);
    for (std::size_t c = 0; c < width; ++c) x[c] = apply(model.features[c], r.features[c]);
    const bool val = k < val_count;
    (val ? x_val : x_train).push_back(std::move(x));
    (val ? mean_val : mean_train).push_back(apply(model.mean_target, r.mean));
    (val ? spread_val : spread_train).push_back(apply(model.spread_target, r.spread));
  }
  model.train_rows = static_cast<int>(x_train.size());
  model.validation_rows = static_cast<int>(x_val.size());

  MlpTrainConfig mean_cfg = config.mlp;
  mean_cfg.seed = mix_seed(config.mlp.seed, 20);
  MlpTrainConfig spread_cfg = config.mlp;
  spread_cfg.seed = mix_seed(config.mlp.seed, 21);
  model.mean_net = train_regressor(x_train, mean_train, x_val, mean_val, mean_cfg, model.mean_curve);
  model.spread_net = train_regressor(x_train, spread_train, x_val, spread_val, spread_cfg, model.spread_curve);
  if (!model.mean_curve.val_mse.empty() && model.mean_curve.val_mse.back() > 2.0 * model.mean_curve.train_mse.back())
    model.flags.emplace_back("possible-overfit");
  return model;
}

GaussianSummary predict(const SurrogateModel& model, const TaskFeatures& features) {
  if (features.schema != model.schema) throw Error(ErrorKind::SchemaMismatch, "feature schema does not match model");
  if (features.values.size() != model.schema.size())
    throw Error(ErrorKind::SchemaMismatch, "feature vector length does not match schema");
  std::vector<double> x(features.values.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (!std::isfinite(features.values[c])) throw Error(ErrorKind::InvalidArgument, "feature value is not finite");
    x[c] = apply(model.features[c], features.values[c]);
  }
  const double mu = invert(model.mean_target, model.mean_net.predict(x));
  const double spread = invert(model.spread_target, model.spread_net.predict(x));
  const double floor = 1e-6 * (model.r_high - model.r_low);
  return {mu, std::max(spread, floor)};
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using ojson = nlohmann::ordered_json;

ojson net_to_json(const Mlp& net) {
  ojson layers = ojson::array();
  for (const auto& L : net.layers()) {
    ojson w = ojson::array();
    for (int o = 0; o < L.out; ++o) {
      const auto begin = L.w.begin() + static_cast<std::ptrdiff_t>(o) * L.in;
      w.push_back(std::vector<double>(begin, begin + L.in));
    }
    layers.push_back(ojson{{"w", w}, {"b", L.b}});
  }
  return layers;
}

Mlp net_from_json(const nlohmann::json& j) {
  std::vector<DenseLayer> layers;
  for (const auto& lj : j) {
    DenseLayer L;
    const auto& w = lj.at("w");
    L.out = static_cast<int>(w.size());
    L.in = L.out > 0 ? static_cast<int>(w.at(0).size()) : 0;
    for (const auto& row : w) {
      if (static_cast<int>(row.size()) != L.in) throw Error(ErrorKind::CorruptFile, "ragged weight matrix");
      for (const auto& x : row) L.w.push_back(x.get<double>());
    }
    L.b = lj.at("b").get<std::vector<double>>();
    layers.push_back(std::move(L));
  }
  return Mlp(std::move(layers));
}

ojson curve_to_json(const TrainingCurve& c) { return ojson{{"train_mse", c.train_mse}, {"val_mse", c.val_mse}}; }

TrainingCurve curve_from_json(const nlohmann::json& j) {
  return {j.at("train_mse").get<std::vector<double>>(), j.at("val_mse").get<std::vector<double>>()};
}

ojson standardizer_to_json(const Standardizer& s) { return ojson{{"shift", s.shift}, {"scale", s.scale}}; }

Standardizer standardizer_from_json(const nlohmann::json& j) {
  return {j.at("shift").get<double>(), j.at("scale").get<double>()};
}

}  // namespace

nlohmann::ordered_json model_to_json(const SurrogateModel& model) {
  ojson j;
  j["schema_version"] = kModelSchemaVersion;
  j["feature_schema"] = model.schema;
  ojson features = ojson::array();
  for (const auto& s : model.features) features.push_back(standardizer_to_json(s));
  j["normalization"] = ojson{{"features", features},
                             {"mean_target", standardizer_to_json(model.mean_target)},
                             {"spread_target", standardizer_to_json(model.spread_target)}};
  j["mean_net"] = net_to_json(model.mean_net);
  j["spread_net"] = net_to_json(model.spread_net);
  j["r_low"] = model.r_low;
  j["r_high"] = model.r_high;
  j["spread_kind"] = model.spread_kind == SpreadKind::StdDev ? "stddev" : "stderr";
  const auto& c = model.config;
  j["metadata"] = ojson{{"seed", c.mlp.seed},
                        {"hidden", c.mlp.hidden},
                        {"dropout_rate", c.mlp.dropout_rate},
                        {"epochs", c.mlp.epochs},
                        {"learning_rate", c.mlp.learning_rate},
                        {"batch_size", c.mlp.batch_size},
                        {"validation_fraction", c.validation_fraction},
                        {"train_rows", model.train_rows},
                        {"validation_rows", model.validation_rows},
                        {"mean_curve", curve_to_json(model.mean_curve)},
                        {"spread_curve", curve_to_json(model.spread_curve)},
                        {"flags", model.flags}};
  return j;
}

SurrogateModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("schema_version")) throw Error(ErrorKind::CorruptFile, "missing schema_version");
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion)
      throw Error(ErrorKind::SchemaVersionMismatch, "model schema_version " + std::to_string(version) +
                                                         " is not supported (expected " +
                                                         std::to_string(kModelSchemaVersion) + ")");
    SurrogateModel m;
    m.schema = j.at("feature_schema").get<FeatureSchema>();
    const auto& norm = j.at("normalization");
    for (const auto& s : norm.at("features")) m.features.push_back(standardizer_from_json(s));
    if (m.features.size() != m.schema.size()) throw Error(ErrorKind::CorruptFile, "normalization width mismatch");
    m.mean_target = standardizer_from_json(norm.at("mean_target"));
    m.spread_target = standardizer_from_json(norm.at("spread_target"));
    m.mean_net = net_from_json(j.at("mean_net"));
    m.spread_net = net_from_json(j.at("spread_net"));
    if (m.mean_net.input_count() != m.schema.size() || m.spread_net.input_count() != m.schema.size())
      throw Error(ErrorKind::CorruptFile, "network input width does not match schema");
    m.r_low = j.at("r_low").get<double>();
    m.r_high = j.at("r_high").get<double>();
    const auto kind = j.at("spread_kind").get<std::string>();
    if (kind != "stddev" && kind != "stderr") throw Error(ErrorKind::CorruptFile, "unknown spread_kind");
    m.spread_kind = kind == "stddev" ? SpreadKind::StdDev : SpreadKind::StdErr;
    const auto& meta = j.at("metadata");
    m.config.mlp.seed = meta.at("seed").get<std::uint64_t>();
    m.config.mlp.hidden = meta.at("hidden").get<std::vector<int>>();
    m.config.mlp.dropout_rate = meta.at("dropout_rate").get<double>();
    m.config.mlp.epochs = meta.at("epochs").get<int>();
    m.config.mlp.learning_rate = meta.at("learning_rate").get<double>();
    m.config.mlp.batch_size = meta.at("batch_size").get<int>();
    m.config.validation_fraction = meta.at("validation_fraction").get<double>();
    m.train_rows = meta.at("train_rows").get<int>();
    m.validation_rows = meta.at("validation_rows").get<int>();
    m.mean_curve = curve_from_json(meta.at("mean_curve"));
    m.spread_curve = curve_from_json(meta.at("spread_curve"));
    m.flags = meta.at("flags").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::CorruptFile, std::string("malformed model: ") + e.what());
  }
}

void save_model(const SurrogateModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write model to " + path);
  out << model_to_json(model).dump(2) << '\n';
}

SurrogateModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open model file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::CorruptFile, std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

void write_training_curve_csv(std::ostream& out, const TrainingCurve& curve) {
  out << "epoch,train_mse,val_mse\n";
  char buf[96];
  for (std::size_t e = 0; e < curve.train_mse.size(); ++e) {
    if (e < curve.val_mse.size())
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e + 1, curve.train_mse[e], curve.val_mse[e]);
    else
      std::snprintf(buf, sizeof buf, "%zu,%.17g,\n", e + 1, curve.train_mse[e]);
    out << buf;
  }
}

}  // namespace famsec
