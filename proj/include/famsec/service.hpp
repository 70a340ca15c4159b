#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "famsec/delivery.hpp"
#include "famsec/mdp.hpp"
#include "famsec/surrogate.hpp"

namespace famsec {

struct ScoringConfig {
  double reward_success = 1.0;
  double penalty_approved_capture = 2.0;
  double penalty_cancel = 0.25;
  double timeout_delta = 0.0;
};

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> surrogate_model_path;
  ScoringConfig scoring{};
  int default_runs = 100;
  std::string event_log_path;  // empty keeps events in memory only
  std::uint64_t seed = 0;
};

/// Reads an optional JSON config file, then applies FAMSEC_* environment
/// overrides through `getenv`. Throws InvalidConfig.
ServiceConfig load_service_config(const std::optional<std::string>& path,
                                  const std::function<const char*(const char*)>& getenv);

struct ServiceResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

enum class TaskState { Generated, Assessed, Decided, Executed };
std::string_view to_string(TaskState state);

/// Five equal-width bins over [-1, 1] and (0, 2).
std::string outcome_label(double x_o);
std::string solver_label(double x_s);

/// Task generation, assessment, decisions, execution and session scoring.
/// Every mutation is appended to the event log before it becomes visible;
/// constructing a service over an existing log replays it.
class AssessmentService {
 public:
  explicit AssessmentService(ServiceConfig config);

  /// Routes a request. Errors come back as {error: {kind, message}} with
  /// 404, 409 or 422 (500 for generation and internal failures).
  ServiceResponse handle(std::string_view method, std::string_view path, std::string_view body,
                         const std::optional<std::string>& idempotency_key = std::nullopt);

  nlohmann::ordered_json create_session();
  nlohmann::ordered_json get_session(const std::string& id) const;
  nlohmann::ordered_json generate_task(const nlohmann::json& request);
  nlohmann::ordered_json upload_task(const nlohmann::json& request);
  nlohmann::ordered_json get_task(const std::string& id) const;
  nlohmann::ordered_json assess(const std::string& task_id, const nlohmann::json& request);
  nlohmann::ordered_json decide(const std::string& task_id, const nlohmann::json& request);
  nlohmann::ordered_json execute(const std::string& task_id);

  static nlohmann::ordered_json openapi();

  const ServiceConfig& config() const { return config_; }
  /// Score recomputed from the event log alone.
  double replayed_score(const std::string& session_id) const;

 private:
  struct HistoryEntry {
    std::string task_id;
    std::string decision;
    double x_o = 0.0;
    std::optional<double> x_s;
    std::string outcome;
    double score_delta = 0.0;
  };
  struct Session {
    std::string id;
    double score = 0.0;
    std::vector<HistoryEntry> history;
  };
  struct TaskRecord {
    std::string id;
    DeliveryTask task;
    TaskState state = TaskState::Generated;
    nlohmann::ordered_json assessment;
    MctsConfig candidate{};
    std::string session_id;
    std::string decision;
    nlohmann::ordered_json execution;
  };

  void apply(const nlohmann::json& event);
  void record(nlohmann::ordered_json event);
  nlohmann::ordered_json task_json(const TaskRecord& t) const;
  nlohmann::ordered_json session_json(const Session& s) const;
  TaskRecord& task_ref(const std::string& id);
  const TaskRecord& task_ref(const std::string& id) const;
  Session& session_ref(const std::string& id);
  nlohmann::ordered_json add_task(DeliveryTask task);

  ServiceConfig config_;
  std::shared_ptr<const SurrogateModel> surrogate_;
  mutable std::mutex mutex_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, TaskRecord> tasks_;
  std::vector<nlohmann::json> events_;
  std::map<std::string, ServiceResponse> idempotent_;
  std::uint64_t next_session_ = 1;
  std::uint64_t next_task_ = 1;
};

/// HTTP front end for an AssessmentService.
class HttpServer {
 public:
  explicit HttpServer(AssessmentService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 binds any free port. Returns the bound port; throws InvalidConfig.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace famsec
