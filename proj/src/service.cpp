#include "famsec/service.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "famsec/error.hpp"
#include "famsec/harness.hpp"
#include "famsec/outcome.hpp"
#include "famsec/rollout.hpp"
#include "famsec/solver_quality.hpp"

namespace famsec {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

double env_double(const char* name, const char* value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != std::string_view(value).size() || !std::isfinite(v)) throw std::invalid_argument(name);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidConfig, std::string(name) + " is not a number");
  }
}

long long env_int(const char* name, const char* value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != std::string_view(value).size()) throw std::invalid_argument(name);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidConfig, std::string(name) + " is not an integer");
  }
}

}  // namespace

ServiceConfig load_service_config(const std::optional<std::string>& path,
                                  const std::function<const char*(const char*)>& getenv) {
  ServiceConfig c;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config file " + *path);
    try {
      const json j = json::parse(in);
      c.bind_address = j.value("bind_address", c.bind_address);
      c.port = j.value("port", c.port);
      if (j.contains("surrogate_model_path")) c.surrogate_model_path = j.at("surrogate_model_path").get<std::string>();
      c.default_runs = j.value("default_runs", c.default_runs);
      c.event_log_path = j.value("event_log_path", c.event_log_path);
      c.seed = j.value("seed", c.seed);
      if (j.contains("scoring")) {
        const auto& s = j.at("scoring");
        c.scoring.reward_success = s.value("reward_success", c.scoring.reward_success);
        c.scoring.penalty_approved_capture = s.value("penalty_approved_capture", c.scoring.penalty_approved_capture);
        c.scoring.penalty_cancel = s.value("penalty_cancel", c.scoring.penalty_cancel);
        c.scoring.timeout_delta = s.value("timeout_delta", c.scoring.timeout_delta);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::InvalidConfig, std::string("malformed config file: ") + e.what());
    }
  }
  if (const char* v = getenv("FAMSEC_BIND_ADDRESS")) c.bind_address = v;
  if (const char* v = getenv("FAMSEC_PORT")) c.port = static_cast<int>(env_int("FAMSEC_PORT", v));
  if (const char* v = getenv("FAMSEC_SURROGATE_MODEL")) c.surrogate_model_path = std::string(v);
  if (const char* v = getenv("FAMSEC_DEFAULT_RUNS")) c.default_runs = static_cast<int>(env_int("FAMSEC_DEFAULT_RUNS", v));
  if (const char* v = getenv("FAMSEC_EVENT_LOG")) c.event_log_path = v;
  if (const char* v = getenv("FAMSEC_SEED")) c.seed = static_cast<std::uint64_t>(env_int("FAMSEC_SEED", v));
  if (const char* v = getenv("FAMSEC_REWARD_SUCCESS")) c.scoring.reward_success = env_double("FAMSEC_REWARD_SUCCESS", v);
  if (const char* v = getenv("FAMSEC_PENALTY_CAPTURE"))
    c.scoring.penalty_approved_capture = env_double("FAMSEC_PENALTY_CAPTURE", v);
  if (const char* v = getenv("FAMSEC_PENALTY_CANCEL")) c.scoring.penalty_cancel = env_double("FAMSEC_PENALTY_CANCEL", v);
  if (const char* v = getenv("FAMSEC_TIMEOUT_DELTA")) c.scoring.timeout_delta = env_double("FAMSEC_TIMEOUT_DELTA", v);
  if (c.port < 0 || c.port > 65535) throw Error(ErrorKind::InvalidConfig, "port out of range");
  if (c.default_runs < 2) throw Error(ErrorKind::InvalidConfig, "default_runs must be >= 2");
  return c;
}

// ---------------------------------------------------------------------------
// Labels

std::string_view to_string(TaskState state) {
  switch (state) {
    case TaskState::Generated: return "generated";
    case TaskState::Assessed: return "assessed";
    case TaskState::Decided: return "decided";
    case TaskState::Executed: return "executed";
  }
  return "unknown";
}

namespace {

std::size_t bin5(double x, double lo, double hi) {
  const double t = (x - lo) / (hi - lo) * 5.0;
  return static_cast<std::size_t>(std::clamp(std::floor(t), 0.0, 4.0));
}

}  // namespace

std::string outcome_label(double x_o) {
  static const char* const kLabels[] = {"very unlikely to meet standard", "unlikely to meet standard",
                                        "about even odds of meeting standard", "likely to meet standard",
                                        "very likely to meet standard"};
  return kLabels[bin5(x_o, -1.0, 1.0)];
}

std::string solver_label(double x_s) {
  static const char* const kLabels[] = {"much less capable than trusted solver", "less capable than trusted solver",
                                        "on par with trusted solver", "more capable than trusted solver",
                                        "much more capable than trusted solver"};
  return kLabels[bin5(x_s, 0.0, 2.0)];
}

// ---------------------------------------------------------------------------
// Service core

namespace {

constexpr std::uint64_t kCandidateStream = 0xA55E55;
constexpr std::uint64_t kTrustedStream = 0x7E57ED;
constexpr std::uint64_t kExecuteStream = 0xE8EC;
constexpr int kMaxGenerationAttempts = 100;
const MctsConfig kDefaultCandidate{100, 3, 1000.0};
const MctsConfig kSurrogateTrusted{1000, 8, 1000.0};

[[noreturn]] void not_found(const std::string& what) { throw Error(ErrorKind::NotFound, what); }
[[noreturn]] void conflict(const std::string& what) { throw Error(ErrorKind::Conflict, what); }

std::pair<double, double> range_field(const json& request, const char* name, double lo, double hi) {
  if (!request.contains(name)) return {lo, hi};
  const auto& r = request.at(name);
  if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
    throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be a two-element numeric array");
  const double a = r[0].get<double>();
  const double b = r[1].get<double>();
  if (!(a >= lo && b <= hi && a <= b))
    throw Error(ErrorKind::InvalidArgument, std::string(name) + " must lie within [" + std::to_string(lo) + ", " +
                                                std::to_string(hi) + "]");
  return {a, b};
}

template <typename T>
T field(const json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::InvalidArgument, std::string("field '") + name + "' has the wrong type");
  }
}

ojson trace_json(const Episode& ep, const DeliveryTask& task) {
  const int n = task.network.node_count();
  ojson steps = ojson::array();
  for (std::size_t t = 0; t < ep.trace.steps.size(); ++t) {
    const auto& s = ep.trace.steps[t];
    steps.push_back(ojson{{"t", t},
                          {"adt", adt_node(s.state, n)},
                          {"mg", mg_node(s.state, n)},
                          {"action", s.action},
                          {"reward", s.reward}});
  }
  ojson final_pos;
  if (ep.trace.final_state < caught_state(n)) {
    final_pos = ojson{{"adt", adt_node(ep.trace.final_state, n)}, {"mg", mg_node(ep.trace.final_state, n)}};
  } else if (ep.trace.final_state == delivered_state(n)) {
    final_pos = ojson{{"adt", task.goal}};
  }
  return ojson{{"steps", steps}, {"terminal", to_string(ep.trace.terminal)}, {"final", final_pos}};
}

}  // namespace

AssessmentService::AssessmentService(ServiceConfig config) : config_(std::move(config)) {
  if (config_.surrogate_model_path)
    surrogate_ = std::make_shared<const SurrogateModel>(load_model(*config_.surrogate_model_path));
  if (!config_.event_log_path.empty()) {
    std::ifstream in(config_.event_log_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json event;
      try {
        event = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::CorruptFile, std::string("event log line is not JSON: ") + e.what());
      }
      apply(event);
      events_.push_back(std::move(event));
    }
  }
}

void AssessmentService::record(ojson event) {
  if (!config_.event_log_path.empty()) {
    std::ofstream out(config_.event_log_path, std::ios::app);
    if (!out) throw Error(ErrorKind::InvalidConfig, "cannot append to event log " + config_.event_log_path);
    out << event.dump() << '\n';
    out.flush();
  }
  json plain = json::parse(event.dump());
  apply(plain);
  events_.push_back(std::move(plain));
}

void AssessmentService::apply(const json& e) {
  try {
    const auto type = e.at("type").get<std::string>();
    if (type == "session_created") {
      const auto id = e.at("session_id").get<std::string>();
      sessions_.emplace(id, Session{id, 0.0, {}});
      ++next_session_;
    } else if (type == "task_created") {
      const auto id = e.at("task_id").get<std::string>();
      tasks_.emplace(id, TaskRecord{id, task_from_json(e.at("task")), TaskState::Generated, {}, {}, {}, {}, {}});
      ++next_task_;
    } else if (type == "task_assessed") {
      auto& t = task_ref(e.at("task_id").get<std::string>());
      t.assessment = e.at("assessment");
      const auto& c = e.at("candidate");
      t.candidate = MctsConfig{c.at("iterations").get<int>(), c.at("depth").get<int>(),
                               c.at("exploration").get<double>()};
      t.state = TaskState::Assessed;
    } else if (type == "decision") {
      auto& t = task_ref(e.at("task_id").get<std::string>());
      auto& s = session_ref(e.at("session_id").get<std::string>());
      t.decision = e.at("decision").get<std::string>();
      t.session_id = s.id;
      t.state = TaskState::Decided;
      if (t.decision == "cancel") {
        const double delta = e.at("score_delta").get<double>();
        std::optional<double> xs;
        if (t.assessment.contains("x_s")) xs = t.assessment.at("x_s").get<double>();
        s.history.push_back({t.id, t.decision, t.assessment.at("x_o").get<double>(), xs, "cancelled", delta});
        s.score += delta;
      }
    } else if (type == "executed") {
      auto& t = task_ref(e.at("task_id").get<std::string>());
      t.execution = e.at("execution");
      t.state = TaskState::Executed;
      if (t.decision == "authorize") {
        auto& s = session_ref(t.session_id);
        const double delta = e.at("score_delta").get<double>();
        std::optional<double> xs;
        if (t.assessment.contains("x_s")) xs = t.assessment.at("x_s").get<double>();
        s.history.push_back(
            {t.id, t.decision, t.assessment.at("x_o").get<double>(), xs, t.execution.at("outcome"), delta});
        s.score += delta;
      }
    } else {
      throw Error(ErrorKind::CorruptFile, "unknown event type '" + type + "'");
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::CorruptFile, std::string("malformed event: ") + ex.what());
  }
}

AssessmentService::TaskRecord& AssessmentService::task_ref(const std::string& id) {
  const auto it = tasks_.find(id);
  if (it == tasks_.end()) not_found("unknown task '" + id + "'");
  return it->second;
}

const AssessmentService::TaskRecord& AssessmentService::task_ref(const std::string& id) const {
  const auto it = tasks_.find(id);
  if (it == tasks_.end()) not_found("unknown task '" + id + "'");
  return it->second;
}

AssessmentService::Session& AssessmentService::session_ref(const std::string& id) {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) not_found("unknown session '" + id + "'");
  return it->second;
}

ojson AssessmentService::session_json(const Session& s) const {
  ojson history = ojson::array();
  for (const auto& h : s.history) {
    history.push_back(ojson{{"task_id", h.task_id},
                            {"decision", h.decision},
                            {"x_o", h.x_o},
                            {"x_s", h.x_s ? ojson(*h.x_s) : ojson(nullptr)},
                            {"outcome", h.outcome},
                            {"score_delta", h.score_delta}});
  }
  const auto& sc = config_.scoring;
  return ojson{{"session_id", s.id},
               {"score", s.score},
               {"history", history},
               {"scoring",
                {{"reward_success", sc.reward_success},
                 {"penalty_approved_capture", sc.penalty_approved_capture},
                 {"penalty_cancel", sc.penalty_cancel},
                 {"timeout_delta", sc.timeout_delta}}}};
}

ojson AssessmentService::task_json(const TaskRecord& t) const {
  ojson j{{"task_id", t.id}, {"state", to_string(t.state)}, {"task", task_to_json(t.task)}};
  const auto& layout = t.task.network.layout();
  const auto points = layout ? *layout : circle_layout(t.task.network.node_count());
  ojson pts = ojson::array();
  for (const auto& p : points) pts.push_back(ojson{{"x", p.x}, {"y", p.y}});
  j["layout"] = pts;
  j["assessment"] = t.assessment.is_null() ? ojson(nullptr) : t.assessment;
  j["decision"] = t.decision.empty() ? ojson(nullptr) : ojson(t.decision);
  j["execution"] = t.execution.is_null() ? ojson(nullptr) : t.execution;
  return j;
}

ojson AssessmentService::create_session() {
  std::lock_guard lock(mutex_);
  const std::string id = "s" + std::to_string(next_session_);
  record(ojson{{"type", "session_created"}, {"session_id", id}});
  return session_json(sessions_.at(id));
}

ojson AssessmentService::get_session(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) not_found("unknown session '" + id + "'");
  return session_json(it->second);
}

double AssessmentService::replayed_score(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  double score = 0.0;
  for (const auto& e : events_) {
    if (e.at("type") == "decision" && e.at("session_id") == session_id && e.at("decision") == "cancel")
      score += e.at("score_delta").get<double>();
    if (e.at("type") == "executed" && e.value("session_id", std::string()) == session_id)
      score += e.at("score_delta").get<double>();
  }
  return score;
}

ojson AssessmentService::add_task(DeliveryTask task) {
  std::lock_guard lock(mutex_);
  const std::string id = "t" + std::to_string(next_task_);
  record(ojson{{"type", "task_created"}, {"task_id", id}, {"task", task_to_json(task)}});
  return task_json(tasks_.at(id));
}

ojson AssessmentService::generate_task(const json& request) {
  if (!request.is_object()) throw Error(ErrorKind::InvalidArgument, "request body must be a JSON object");
  const auto [n_lo, n_hi] = range_field(request, "n_range", 8, 35);
  const auto [p_lo, p_hi] = range_field(request, "p_trans_range", 0.0, 1.0);
  if (n_lo != std::floor(n_lo) || n_hi != std::floor(n_hi))
    throw Error(ErrorKind::InvalidArgument, "n_range must hold integers");
  std::uint64_t seed;
  {
    std::lock_guard lock(mutex_);
    seed = request.contains("seed") ? field<std::uint64_t>(request, "seed", 0) : mix_seed(config_.seed, next_task_);
  }
  RandomTaskSampler sampler;
  sampler.n_min = static_cast<int>(n_lo);
  sampler.n_max = static_cast<int>(n_hi);
  sampler.p_min = p_lo;
  sampler.p_max = p_hi;
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    DeliveryTask task = sampler(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    if (admissible_task(task).admissible) {
      task.seed = seed;
      return add_task(std::move(task));
    }
  }
  throw Error(ErrorKind::GenerationFailed, "no admissible task within the retry budget");
}

ojson AssessmentService::upload_task(const json& request) {
  return add_task(task_from_json(request));
}

ojson AssessmentService::get_task(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return task_json(task_ref(id));
}

ojson AssessmentService::assess(const std::string& task_id, const json& request) {
  if (!request.is_object()) throw Error(ErrorKind::InvalidArgument, "request body must be a JSON object");
  std::optional<DeliveryTask> task;
  {
    std::lock_guard lock(mutex_);
    const auto& t = task_ref(task_id);
    if (t.state != TaskState::Generated) conflict("task '" + task_id + "' is already " + std::string(to_string(t.state)));
    task = t.task;
  }
  OutcomeStandard standard{field<double>(request, "zstar", 0.0), field<int>(request, "alpha", 1),
                           field<double>(request, "k", 1.0)};
  standard.validate();
  const int runs = field<int>(request, "runs", config_.default_runs);
  if (runs < 2) throw Error(ErrorKind::InvalidArgument, "runs must be >= 2");
  MctsConfig candidate = kDefaultCandidate;
  if (request.contains("candidate")) {
    const auto& c = request.at("candidate");
    candidate.depth = field<int>(c, "depth", candidate.depth);
    candidate.iterations = field<int>(c, "iterations", candidate.iterations);
    candidate.exploration = field<double>(c, "exploration", candidate.exploration);
  }
  candidate.validate();
  const std::string trusted_mode = field<std::string>(request, "trusted", surrogate_ ? "surrogate" : "measured");
  if (trusted_mode != "surrogate" && trusted_mode != "measured")
    throw Error(ErrorKind::InvalidArgument, "trusted must be 'surrogate' or 'measured'");
  if (trusted_mode == "surrogate" && !surrogate_)
    throw Error(ErrorKind::MissingSurrogate, "the service has no surrogate model configured");

  const auto target = make_rollout_target(*task);
  const std::uint64_t candidate_seed = mix_seed(task->seed, kCandidateStream);
  MctsConfig planner = candidate;
  planner.seed = mix_seed(candidate_seed, 1);
  const auto samples = monte_carlo(target, make_online_policy(target.spec, planner), runs, mix_seed(candidate_seed, 2));
  const auto outcome = assess_outcome(samples.values, standard);
  const auto summary = summarize(samples.values);

  SolverQualityConfig quality;
  ojson trusted;
  std::optional<SolverQualityResult> q;
  if (trusted_mode == "surrogate") {
    quality.r_low = surrogate_->r_low;
    quality.r_high = surrogate_->r_high;
    const auto features = make_features(surrogate_->schema, task_feature_values(*task, kSurrogateTrusted));
    const auto prediction = predict(*surrogate_, features);
    q = x_s_from_samples(samples.values, prediction, quality);
    trusted = ojson{{"source", "surrogate"}, {"mu", prediction.mu}, {"sigma", prediction.sigma}};
  } else {
    const std::uint64_t trusted_seed = mix_seed(task->seed, kTrustedStream);
    const auto reference =
        monte_carlo(target, solve_policy(target.spec, ValueIterationSolver{}), runs, trusted_seed);
    quality.r_low = std::min(summary.min, *std::min_element(reference.values.begin(), reference.values.end()));
    quality.r_high = std::max(summary.max, *std::max_element(reference.values.begin(), reference.values.end()));
    if (!(quality.r_high > quality.r_low)) quality.r_high = quality.r_low + 1.0;
    q = x_s_from_samples(samples.values, reference.values, quality);
    trusted = ojson{{"source", "measured"},
                    {"solver", "value_iteration"},
                    {"seed", trusted_seed},
                    {"summary", summary_to_json(summarize(reference.values))}};
  }

  ojson a;
  a["task_id"] = task_id;
  a["zstar"] = standard.z_star;
  a["runs"] = runs;
  a["candidate"] = ojson{{"solver", "mcts"},
                         {"depth", candidate.depth},
                         {"iterations", candidate.iterations},
                         {"exploration", candidate.exploration},
                         {"seed", candidate_seed}};
  a["trusted"] = trusted;
  a["x_o"] = outcome.x_o;
  a["x_s"] = q->x_s;
  a["labels"] = ojson{{"x_o", outcome_label(outcome.x_o)}, {"x_s", solver_label(q->x_s)}};
  a["success_probability"] = success_probability(samples);
  a["candidate_summary"] = summary_to_json(summary);
  a["outcome"] = outcome_to_json(outcome);
  a["solver_quality"] = solver_quality_to_json(*q, quality);

  std::lock_guard lock(mutex_);
  const auto& t = task_ref(task_id);
  if (t.state != TaskState::Generated) conflict("task '" + task_id + "' changed state during assessment");
  record(ojson{{"type", "task_assessed"},
               {"task_id", task_id},
               {"candidate",
                {{"depth", candidate.depth}, {"iterations", candidate.iterations}, {"exploration", candidate.exploration}}},
               {"assessment", a}});
  return a;
}

ojson AssessmentService::decide(const std::string& task_id, const json& request) {
  if (!request.is_object()) throw Error(ErrorKind::InvalidArgument, "request body must be a JSON object");
  const auto decision = field<std::string>(request, "decision", "");
  if (decision != "authorize" && decision != "cancel")
    throw Error(ErrorKind::InvalidArgument, "decision must be 'authorize' or 'cancel'");
  std::lock_guard lock(mutex_);
  auto& t = task_ref(task_id);
  if (t.state == TaskState::Generated) conflict("task '" + task_id + "' has not been assessed");
  if (t.state != TaskState::Assessed) conflict("task '" + task_id + "' already has a decision");
  const auto session_id = field<std::string>(request, "session_id", "");
  if (session_id.empty()) throw Error(ErrorKind::InvalidArgument, "session_id is required");
  session_ref(session_id);
  const double delta = decision == "cancel" ? -config_.scoring.penalty_cancel : 0.0;
  record(ojson{{"type", "decision"},
               {"task_id", task_id},
               {"session_id", session_id},
               {"decision", decision},
               {"score_delta", delta}});
  return ojson{{"task_id", task_id},
               {"session_id", session_id},
               {"decision", decision},
               {"score_delta", delta},
               {"session", session_json(sessions_.at(session_id))}};
}

ojson AssessmentService::execute(const std::string& task_id) {
  std::optional<DeliveryTask> task;
  MctsConfig candidate;
  std::string decision;
  {
    std::lock_guard lock(mutex_);
    const auto& t = task_ref(task_id);
    if (t.state == TaskState::Executed) conflict("task '" + task_id + "' was already executed");
    if (t.state != TaskState::Decided) conflict("task '" + task_id + "' has no decision yet");
    task = t.task;
    candidate = t.candidate;
    decision = t.decision;
  }
  ojson execution;
  double delta = 0.0;
  const std::uint64_t seed = mix_seed(task->seed, kExecuteStream);
  if (decision == "cancel") {
    execution = ojson{{"outcome", "cancelled"}, {"seed", nullptr}, {"cumulative_reward", nullptr}, {"trace", nullptr}};
  } else {
    const auto target = make_rollout_target(*task);
    candidate.seed = mix_seed(seed, 1);
    const auto ep = simulate_episode(target, make_online_policy(target.spec, candidate), mix_seed(seed, 2));
    const auto& sc = config_.scoring;
    std::string outcome;
    if (ep.trace.terminal == TerminalKind::Delivered) {
      outcome = "delivered";
      delta = sc.reward_success;
    } else if (ep.trace.terminal == TerminalKind::Caught) {
      outcome = "caught";
      delta = -sc.penalty_approved_capture;
    } else {
      outcome = "timeout";
      delta = sc.timeout_delta;
    }
    execution = ojson{{"outcome", outcome},
                      {"seed", seed},
                      {"cumulative_reward", ep.cumulative_reward},
                      {"trace", trace_json(ep, *task)}};
  }

  std::lock_guard lock(mutex_);
  const auto& t = task_ref(task_id);
  if (t.state != TaskState::Decided) conflict("task '" + task_id + "' changed state during execution");
  record(ojson{{"type", "executed"},
               {"task_id", task_id},
               {"session_id", t.session_id},
               {"score_delta", decision == "authorize" ? delta : 0.0},
               {"execution", execution}});
  ojson out = execution;
  out["task_id"] = task_id;
  out["decision"] = decision;
  out["score_delta"] = decision == "authorize" ? delta : 0.0;
  out["session"] = session_json(sessions_.at(t.session_id));
  return out;
}

// ---------------------------------------------------------------------------
// Routing

namespace {

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::GenerationFailed: return 500;
    default: return is_validation_error(kind) ? 422 : 500;
  }
}

ServiceResponse error_response(int status, std::string_view kind, const std::string& message) {
  return {status, ojson{{"error", {{"kind", kind}, {"message", message}}}}};
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const auto j = path.find('/', i);
    const auto end = j == std::string_view::npos ? path.size() : j;
    if (end > i) parts.emplace_back(path.substr(i, end - i));
    i = end;
  }
  return parts;
}

}  // namespace

ServiceResponse AssessmentService::handle(std::string_view method, std::string_view path, std::string_view body,
                                          const std::optional<std::string>& idempotency_key) {
  std::string cache_key;
  if (idempotency_key && method == "POST") {
    cache_key = std::string(method) + ' ' + std::string(path) + ' ' + *idempotency_key;
    std::lock_guard lock(mutex_);
    const auto it = idempotent_.find(cache_key);
    if (it != idempotent_.end()) return it->second;
  }
  ServiceResponse response;
  try {
    json request = json::object();
    if (!body.empty()) {
      try {
        request = json::parse(body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("request body is not valid JSON: ") + e.what());
      }
    }
    const auto p = split_path(path);
    const bool get = method == "GET";
    const bool post = method == "POST";
    if (p.size() < 2 || p[0] != "v1") not_found("no route for " + std::string(path));
    if (p[1] == "spec" && p.size() == 2 && get) {
      response.body = openapi();
    } else if (p[1] == "sessions" && p.size() == 2 && post) {
      response = {201, create_session()};
    } else if (p[1] == "sessions" && p.size() == 3 && get) {
      response.body = get_session(p[2]);
    } else if (p[1] == "tasks" && p.size() == 2 && post) {
      response = {201, upload_task(request)};
    } else if (p[1] == "tasks" && p.size() == 3 && p[2] == "generate" && post) {
      response = {201, generate_task(request)};
    } else if (p[1] == "tasks" && p.size() == 3 && get) {
      response.body = get_task(p[2]);
    } else if (p[1] == "tasks" && p.size() == 4 && post && p[3] == "assess") {
      response.body = assess(p[2], request);
    } else if (p[1] == "tasks" && p.size() == 4 && post && p[3] == "decision") {
      response.body = decide(p[2], request);
    } else if (p[1] == "tasks" && p.size() == 4 && post && p[3] == "execute") {
      response.body = execute(p[2]);
    } else {
      not_found("no route for " + std::string(method) + " " + std::string(path));
    }
  } catch (const Error& e) {
    response = error_response(status_for(e.kind()), to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    response = error_response(500, "Internal", e.what());
  }
  if (!cache_key.empty()) {
    std::lock_guard lock(mutex_);
    idempotent_.emplace(cache_key, response);
  }
  return response;
}

ojson AssessmentService::openapi() {
  const auto op = [](const char* summary, std::vector<int> codes) {
    ojson responses;
    for (int c : codes) responses[std::to_string(c)] = ojson{{"description", c < 300 ? "ok" : "error"}};
    return ojson{{"summary", summary}, {"responses", responses}};
  };
  ojson paths;
  paths["/v1/sessions"]["post"] = op("Create a scoring session", {201});
  paths["/v1/sessions/{id}"]["get"] = op("Session snapshot with score and decision history", {200, 404});
  paths["/v1/tasks/generate"]["post"] = op("Generate an admissible delivery task", {201, 422, 500});
  paths["/v1/tasks"]["post"] = op("Upload a delivery task", {201, 422});
  paths["/v1/tasks/{id}"]["get"] = op("Task record", {200, 404});
  paths["/v1/tasks/{id}/assess"]["post"] = op("Outcome assessment and solver quality", {200, 404, 409, 422});
  paths["/v1/tasks/{id}/decision"]["post"] = op("Record authorize or cancel", {200, 404, 409, 422});
  paths["/v1/tasks/{id}/execute"]["post"] = op("Simulate the authorized delivery", {200, 404, 409});
  paths["/v1/spec"]["get"] = op("This document", {200});
  return ojson{{"openapi", "3.0.3"},
               {"info", {{"title", "famsec assessment service"}, {"version", kToolVersion}}},
               {"paths", paths}};
}

// ---------------------------------------------------------------------------
// HTTP

struct HttpServer::Impl {
  explicit Impl(AssessmentService& s) : service(s) {}
  AssessmentService& service;
  httplib::Server server;
};

HttpServer::HttpServer(AssessmentService& service) : impl_(std::make_unique<Impl>(service)) {
  const auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> key;
    if (req.has_header("Idempotency-Key")) key = req.get_header_value("Idempotency-Key");
    const auto r = impl_->service.handle(req.method, req.path, req.body, key);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body.dump(), "application/json");
  };
  impl_->server.Get(".*", forward);
  impl_->server.Post(".*", forward);
  impl_->server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Idempotency-Key");
    res.status = 204;
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw Error(ErrorKind::InvalidConfig, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace famsec
