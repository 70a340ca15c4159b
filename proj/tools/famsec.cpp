// famsec: command-line front end for the self-assessment toolkit.
//
// Exit codes: 0 success, 2 validation error, 3 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "famsec/delivery.hpp"
#include "famsec/error.hpp"
#include "famsec/harness.hpp"
#include "famsec/outcome.hpp"
#include "famsec/parallel.hpp"
#include "famsec/rollout.hpp"
#include "famsec/service.hpp"
#include "famsec/solver_quality.hpp"
#include "famsec/surrogate.hpp"

namespace fs = std::filesystem;
using famsec::Error;
using famsec::ErrorKind;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::uint64_t seed = 0;
  int runs = 0;
  std::string out_dir;
  std::string format = "json";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Base seed for every random stream");
  app->add_option("--runs", c.runs, "Monte-Carlo episodes (0 keeps the command default)")->check(CLI::NonNegativeNumber);
  app->add_option("--out", c.out_dir, "Directory for the report and CSV side files");
  app->add_option("--format", c.format, "Stdout format when --out is absent")
      ->check(CLI::IsMember({"json", "csv"}));
}

/// Writes `<out>/<name>.json` plus CSV artifacts, or prints one of them.
void emit(const Common& c, const std::string& name, const ojson& report, const std::vector<famsec::CsvArtifact>& csv) {
  if (!c.out_dir.empty()) {
    fs::create_directories(c.out_dir);
    std::ofstream(fs::path(c.out_dir) / (name + ".json")) << report.dump(2) << '\n';
    for (const auto& a : csv) std::ofstream(fs::path(c.out_dir) / a.name) << a.content;
    return;
  }
  if (c.format == "csv" && !csv.empty()) std::cout << csv.front().content;
  else std::cout << report.dump(2) << '\n';
}

// "vi" or "mcts[:depth=3,iterations=100,exploration=1000]".
famsec::TrustedSolver parse_solver(const std::string& text) {
  if (text == "vi") return famsec::ValueIterationSolver{};
  if (text.rfind("mcts", 0) != 0) throw Error(ErrorKind::InvalidArgument, "solver must be 'vi' or 'mcts:...'");
  famsec::MctsConfig m;
  if (text.size() > 4) {
    if (text[4] != ':') throw Error(ErrorKind::InvalidArgument, "expected 'mcts:key=value,...'");
    std::istringstream items(text.substr(5));
    std::string item;
    while (std::getline(items, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "bad solver setting '" + item + "'");
      const auto key = item.substr(0, eq);
      const auto value = item.substr(eq + 1);
      try {
        if (key == "depth") m.depth = std::stoi(value);
        else if (key == "iterations") m.iterations = std::stoi(value);
        else if (key == "exploration") m.exploration = std::stod(value);
        else if (key == "horizon") m.rollout_horizon = std::stoi(value);
        else throw Error(ErrorKind::InvalidArgument, "unknown solver setting '" + key + "'");
      } catch (const std::logic_error&) {
        throw Error(ErrorKind::InvalidArgument, "bad value for solver setting '" + key + "'");
      }
    }
  }
  m.validate();
  return m;
}

ojson solver_json(const famsec::TrustedSolver& s) {
  if (std::holds_alternative<famsec::ValueIterationSolver>(s)) return ojson{{"solver", "value_iteration"}};
  const auto& m = std::get<famsec::MctsConfig>(s);
  return ojson{{"solver", "mcts"},
               {"depth", m.depth},
               {"iterations", m.iterations},
               {"exploration", m.exploration},
               {"rollout_horizon", m.effective_horizon()}};
}

famsec::RewardSamples measure(const famsec::RolloutTarget& target, famsec::TrustedSolver solver, int runs,
                              std::uint64_t seed) {
  if (auto* m = std::get_if<famsec::MctsConfig>(&solver)) m->seed = famsec::mix_seed(seed, 1);
  return famsec::monte_carlo(target, famsec::solve_policy(target.spec, solver), runs, famsec::mix_seed(seed, 2));
}

std::string samples_csv(const famsec::RewardSamples& s) {
  std::ostringstream out;
  famsec::write_samples_csv(out, s);
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factorized machine self-confidence toolkit"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "OpenMP worker threads (0 keeps the runtime default)")
      ->check(CLI::NonNegativeNumber);

  // gen-network
  Common gen_common;
  int gen_nodes = 13;
  std::string gen_kind;
  double gen_p = 0.7;
  auto* gen = app.add_subcommand("gen-network", "Generate an admissible delivery task on a random network");
  add_common(gen, gen_common);
  gen->add_option("--nodes", gen_nodes, "Intersections")->check(CLI::Range(8, 64));
  gen->add_option("--generator", gen_kind, "watts_strogatz, expected_degree, erdos_renyi or static_scale_free");
  gen->add_option("--p-trans", gen_p, "ADT transition probability")->check(CLI::Range(0.0, 1.0));

  // assess
  Common assess_common;
  std::string assess_task;
  double zstar = 0.0;
  int alpha = 1;
  double k = 1.0;
  std::string assess_solver = "mcts:depth=3,iterations=100,exploration=1000";
  auto* assess = app.add_subcommand("assess", "Outcome assessment of a task under one solver");
  add_common(assess, assess_common);
  assess->add_option("--task", assess_task, "Task JSON")->required()->check(CLI::ExistingFile);
  assess->add_option("--zstar", zstar, "Minimal acceptable cumulative reward");
  assess->add_option("--alpha", alpha, "Partial-moment order")->check(CLI::NonNegativeNumber);
  assess->add_option("--k", k, "Moment exponent");
  assess->add_option("--solver", assess_solver, "'vi' or 'mcts:depth=..,iterations=..,exploration=..'");

  // solverq
  Common sq_common;
  std::string sq_task;
  std::string sq_trusted = "vi";
  std::string sq_candidate = "mcts:depth=3,iterations=100,exploration=1000";
  std::string sq_model;
  auto* solverq = app.add_subcommand("solverq", "Solver quality of a candidate against a trusted solver");
  add_common(solverq, sq_common);
  solverq->add_option("--task", sq_task, "Task JSON")->required()->check(CLI::ExistingFile);
  solverq->add_option("--trusted", sq_trusted, "'vi', 'mcts:...' or 'surrogate' (needs --model)");
  solverq->add_option("--candidate", sq_candidate, "'vi' or 'mcts:...'");
  solverq->add_option("--model", sq_model, "Surrogate model JSON")->check(CLI::ExistingFile);

  // surrogate train|predict
  auto* surrogate = app.add_subcommand("surrogate", "Train or query the trusted-solver surrogate");
  surrogate->require_subcommand(1);
  Common train_common;
  int train_tasks = 200;
  std::string train_trusted = "mcts:depth=3,iterations=1000,exploration=1000";
  std::string train_features = "baseline";
  std::string train_spread = "stddev";
  famsec::SurrogateConfig train_config;
  auto* train = surrogate->add_subcommand("train", "Generate data and train the surrogate");
  add_common(train, train_common);
  train->add_option("--tasks", train_tasks, "Generated tasks (before admissibility filtering)")->check(CLI::PositiveNumber);
  train->add_option("--trusted", train_trusted, "'vi' or 'mcts:...'");
  train->add_option("--features", train_features, "baseline or extended")->check(CLI::IsMember({"baseline", "extended"}));
  train->add_option("--spread", train_spread, "stddev or stderr")->check(CLI::IsMember({"stddev", "stderr"}));
  train->add_option("--epochs", train_config.mlp.epochs)->check(CLI::PositiveNumber);
  train->add_option("--learning-rate", train_config.mlp.learning_rate);
  train->add_option("--batch-size", train_config.mlp.batch_size)->check(CLI::PositiveNumber);
  train->add_option("--dropout", train_config.mlp.dropout_rate);
  train->add_option("--validation-fraction", train_config.validation_fraction);

  std::string predict_model;
  double predict_n = 13;
  double predict_p = 0.7;
  std::string predict_solver = "mcts:depth=8,iterations=1000,exploration=1000";
  auto* pred = surrogate->add_subcommand("predict", "Predict the trusted reward distribution");
  pred->add_option("--model", predict_model, "Surrogate model JSON")->required()->check(CLI::ExistingFile);
  pred->add_option("--nodes", predict_n, "Intersections");
  pred->add_option("--p-trans", predict_p, "ADT transition probability");
  pred->add_option("--solver", predict_solver, "Solver settings for extended feature schemas");

  // experiment
  Common exp_common;
  std::string exp_id;
  std::string exp_model;
  int exp_trusted_depth = 0;
  auto* experiment = app.add_subcommand("experiment", "Run a named experiment");
  add_common(experiment, exp_common);
  experiment->add_option("id", exp_id, "exp1|exp2|exp3|exp4|synthetic_xo|synthetic_xs|env_difficulty|calibration")
      ->required();
  experiment->add_option("--model", exp_model, "Surrogate model JSON (exp3, exp4)")->check(CLI::ExistingFile);
  experiment->add_option("--trusted-depth", exp_trusted_depth, "Override the trusted MCTS depth")
      ->check(CLI::NonNegativeNumber);

  // serve
  std::string serve_config;
  auto* serve = app.add_subcommand("serve", "Run the assessment HTTP service");
  serve->add_option("--config", serve_config, "Service config JSON")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    famsec::set_worker_count(workers);

    if (*gen) {
      famsec::RandomTaskSampler sampler;
      sampler.n_min = sampler.n_max = gen_nodes;
      sampler.p_min = sampler.p_max = gen_p;
      if (!gen_kind.empty()) sampler.kind = famsec::generator_from_string(gen_kind);
      for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        auto task = sampler(famsec::mix_seed(gen_common.seed, attempt));
        if (!famsec::admissible_task(task).admissible) continue;
        task.seed = gen_common.seed;
        emit(gen_common, "task", famsec::task_to_json(task), {});
        return 0;
      }
      throw Error(ErrorKind::GenerationFailed, "no admissible task within 100 attempts");
    }

    if (*assess) {
      const auto task = famsec::load_task(assess_task);
      const auto solver = parse_solver(assess_solver);
      const int runs = assess_common.runs > 0 ? assess_common.runs : 1000;
      const auto target = famsec::make_rollout_target(task);
      const auto samples = measure(target, solver, runs, assess_common.seed);
      const auto result = famsec::assess_outcome(samples.values, famsec::OutcomeStandard{zstar, alpha, k});
      ojson report{{"tool", "famsec"}, {"version", famsec::kToolVersion}, {"command", "assess"},
                   {"seed", assess_common.seed}, {"runs", runs}};
      report["solver"] = solver_json(solver);
      report["task"] = famsec::task_to_json(task);
      report["summary"] = famsec::summary_to_json(famsec::summarize(samples));
      report["outcome"] = famsec::outcome_to_json(result);
      report["success_probability"] = famsec::success_probability(samples);
      emit(assess_common, "assess", report, {{"samples.csv", samples_csv(samples)}});
      return 0;
    }

    if (*solverq) {
      const auto task = famsec::load_task(sq_task);
      const auto candidate = parse_solver(sq_candidate);
      const int runs = sq_common.runs > 0 ? sq_common.runs : 1000;
      const auto target = famsec::make_rollout_target(task);
      const auto c = measure(target, candidate, runs, famsec::mix_seed(sq_common.seed, 0xC));
      ojson report{{"tool", "famsec"}, {"version", famsec::kToolVersion}, {"command", "solverq"},
                   {"seed", sq_common.seed}, {"runs", runs}};
      report["task"] = famsec::task_to_json(task);
      report["candidate"] = solver_json(candidate);
      famsec::SolverQualityConfig quality;
      famsec::SolverQualityResult q;
      if (sq_trusted == "surrogate") {
        if (sq_model.empty()) throw Error(ErrorKind::MissingSurrogate, "--trusted surrogate needs --model");
        const auto model = famsec::load_model(sq_model);
        quality.r_low = model.r_low;
        quality.r_high = model.r_high;
        const famsec::MctsConfig trusted_solver{1000, 8, 1000.0};
        const auto prediction =
            famsec::predict(model, famsec::make_features(model.schema, famsec::task_feature_values(task, trusted_solver)));
        q = famsec::x_s_from_samples(c.values, prediction, quality);
        report["trusted"] = ojson{{"solver", "surrogate"}, {"model", fs::path(sq_model).filename().string()}};
      } else {
        const auto trusted = parse_solver(sq_trusted);
        const auto t = measure(target, trusted, runs, famsec::mix_seed(sq_common.seed, 0x7));
        const auto cs = famsec::summarize(c);
        const auto ts = famsec::summarize(t);
        quality.r_low = std::min(cs.min, ts.min);
        quality.r_high = std::max(cs.max, ts.max);
        if (!(quality.r_high > quality.r_low)) quality.r_high = quality.r_low + 1.0;
        q = famsec::x_s_from_samples(c.values, t.values, quality);
        report["trusted"] = solver_json(trusted);
        report["trusted_summary"] = famsec::summary_to_json(ts);
      }
      report["candidate_summary"] = famsec::summary_to_json(famsec::summarize(c));
      report["solver_quality"] = famsec::solver_quality_to_json(q, quality);
      emit(sq_common, "solverq", report, {{"candidate_samples.csv", samples_csv(c)}});
      return 0;
    }

    if (*train) {
      const auto trusted = parse_solver(train_trusted);
      const int runs = train_common.runs > 0 ? train_common.runs : 100;
      const auto schema = train_features == "baseline" ? famsec::baseline_schema() : famsec::extended_schema();
      const auto spread = train_spread == "stddev" ? famsec::SpreadKind::StdDev : famsec::SpreadKind::StdErr;
      const auto data = famsec::generate_training_data(famsec::RandomTaskSampler{}, trusted, train_tasks, runs,
                                                       train_common.seed, schema, spread);
      train_config.mlp.seed = famsec::mix_seed(train_common.seed, 0xC0);
      const auto model = famsec::train_surrogate(data, train_config);
      ojson report{{"tool", "famsec"}, {"version", famsec::kToolVersion}, {"command", "surrogate train"},
                   {"seed", train_common.seed}, {"runs", runs}};
      report["trusted"] = solver_json(trusted);
      report["generated"] = data.generated;
      report["admitted"] = data.rows.size();
      report["rejections"] = data.rejections;
      report["r_low"] = data.r_low;
      report["r_high"] = data.r_high;
      report["final_train_mse"] = model.mean_curve.train_mse.back();
      report["final_val_mse"] = model.mean_curve.val_mse.empty() ? ojson(nullptr) : ojson(model.mean_curve.val_mse.back());
      report["flags"] = model.flags;
      std::ostringstream curve;
      famsec::write_training_curve_csv(curve, model.mean_curve);
      std::ostringstream spread_curve;
      famsec::write_training_curve_csv(spread_curve, model.spread_curve);
      std::vector<famsec::CsvArtifact> csv{{"training_curve.csv", curve.str()},
                                           {"spread_training_curve.csv", spread_curve.str()}};
      if (!train_common.out_dir.empty()) {
        fs::create_directories(train_common.out_dir);
        famsec::save_model(model, (fs::path(train_common.out_dir) / "model.json").string());
      } else {
        report["model"] = famsec::model_to_json(model);
      }
      emit(train_common, "train", report, csv);
      return 0;
    }

    if (*pred) {
      const auto model = famsec::load_model(predict_model);
      auto values = famsec::task_feature_values(famsec::builtin_task_13(), parse_solver(predict_solver));
      values["N"] = predict_n;
      values["p_trans"] = predict_p;
      const auto g = famsec::predict(model, famsec::make_features(model.schema, values));
      std::cout << ojson{{"mu", g.mu}, {"sigma", g.sigma}, {"features", model.schema}}.dump(2) << '\n';
      return 0;
    }

    if (*experiment) {
      famsec::ExperimentOptions opts;
      opts.seed = exp_common.seed;
      opts.runs = exp_common.runs;
      opts.trusted_depth = exp_trusted_depth;
      if (!exp_model.empty()) opts.model_path = exp_model;
      const auto result = famsec::run_experiment(exp_id, opts);
      emit(exp_common, exp_id, result.report, result.csv);
      return 0;
    }

    if (*serve) {
      std::optional<std::string> path;
      if (!serve_config.empty()) path = serve_config;
      const auto config = famsec::load_service_config(path, [](const char* name) { return std::getenv(name); });
      famsec::AssessmentService service(config);
      famsec::HttpServer server(service);
      const int port = server.bind(config.bind_address, config.port);
      std::cerr << "famsec service listening on " << config.bind_address << ':' << port << '\n';
      server.listen();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "famsec: " << e.what() << '\n';
    return famsec::is_validation_error(e.kind()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "famsec: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
