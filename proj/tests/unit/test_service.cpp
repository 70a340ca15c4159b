#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <httplib.h>

#include "famsec/error.hpp"
#include "famsec/service.hpp"

using namespace famsec;
using nlohmann::json;

namespace {

// The goal sits on a separate component, so over the planning horizon the
// loiter penalties outweigh the capture penalty and the planner walks into
// the pursuer.
std::string capture_fixture() {
  std::vector<std::pair<NodeId, NodeId>> e{{0, 1}, {1, 2}, {3, 4}};
  DeliveryTask t{RoadNetwork(5, e, GeneratorKind::Manual), 0, 2, 4, 1.0, Rewards{}, 0.95, 50};
  t.mg_pursue_prob = 1.0;
  t.seed = 11;
  return task_to_json(t).dump();
}

// The MG starts on a separate component and can never interfere.
std::string success_fixture() {
  std::vector<std::pair<NodeId, NodeId>> e{{0, 1}, {1, 2}, {3, 4}};
  DeliveryTask t{RoadNetwork(5, e, GeneratorKind::Manual), 0, 4, 2, 1.0, Rewards{}, 0.95, 50};
  t.seed = 12;
  return task_to_json(t).dump();
}

struct Fixture {
  AssessmentService svc{ServiceConfig{}};

  json call(std::string_view method, std::string_view path, const std::string& body = "", int expect = -1,
            std::optional<std::string> key = std::nullopt) {
    const auto r = svc.handle(method, path, body, key);
    if (expect >= 0) CHECK(r.status == expect);
    return json::parse(r.body.dump());
  }

  std::string session() { return call("POST", "/v1/sessions", "", 201)["session_id"]; }
  std::string upload(const std::string& body) { return call("POST", "/v1/tasks", body, 201)["task_id"]; }
  json assess(const std::string& id) {
    return call("POST", "/v1/tasks/" + id + "/assess", R"({"runs":20,"candidate":{"iterations":60}})", 200);
  }
};

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("cancel flow costs the cancel penalty") {
    Fixture f;
    const auto s = f.session();
    const auto t = f.call("POST", "/v1/tasks/generate", R"({"seed":5,"n_range":[8,12]})", 201);
    const std::string id = t["task_id"];
    CHECK(t["state"] == "generated");
    CHECK(t["layout"].size() == t["task"]["network"]["n"]);
    f.call("POST", "/v1/tasks/" + id + "/decision", R"({"decision":"cancel","session_id":")" + s + "\"}", 409);
    const auto a = f.assess(id);
    CHECK(a["x_o"].get<double>() >= -1.0);
    CHECK(a["x_s"].get<double>() > 0.0);
    CHECK(a["trusted"]["source"] == "measured");
    f.call("POST", "/v1/tasks/" + id + "/assess", "{}", 409);
    f.call("POST", "/v1/tasks/" + id + "/execute", "", 409);
    const auto d = f.call("POST", "/v1/tasks/" + id + "/decision", R"({"decision":"cancel","session_id":")" + s + "\"}", 200);
    CHECK(d["score_delta"] == -0.25);
    f.call("POST", "/v1/tasks/" + id + "/decision", R"({"decision":"authorize","session_id":")" + s + "\"}", 409);
    const auto x = f.call("POST", "/v1/tasks/" + id + "/execute", "", 200);
    CHECK(x["outcome"] == "cancelled");
    CHECK(x["session"]["score"] == -0.25);
    f.call("POST", "/v1/tasks/" + id + "/execute", "", 409);
    CHECK(f.call("GET", "/v1/sessions/" + s, "", 200)["history"].size() == 1u);
    CHECK(f.svc.replayed_score(s) == -0.25);
  }

  TEST_CASE("authorized capture and success fixtures") {
    Fixture f;
    const auto s = f.session();
    const auto caught = f.upload(capture_fixture());
    const auto ok = f.upload(success_fixture());
    f.assess(caught);
    const auto good = f.assess(ok);
    CHECK(good["x_o"] == 1.0);
    CHECK(good["success_probability"] == 1.0);
    for (const auto& id : {caught, ok})
      f.call("POST", "/v1/tasks/" + id + "/decision", R"({"decision":"authorize","session_id":")" + s + "\"}", 200);
    const auto c = f.call("POST", "/v1/tasks/" + caught + "/execute", "", 200);
    CHECK(c["outcome"] == "caught");
    CHECK(c["score_delta"] == -2.0);
    CHECK(c["trace"]["terminal"] == "caught");
    const auto d = f.call("POST", "/v1/tasks/" + ok + "/execute", "", 200);
    CHECK(d["outcome"] == "delivered");
    CHECK(d["trace"]["final"]["adt"] == 2);
    CHECK(d["trace"]["steps"].size() == 2u);
    CHECK(d["session"]["score"] == -1.0);
    CHECK(f.svc.replayed_score(s) == -1.0);
  }

  TEST_CASE("error statuses") {
    Fixture f;
    auto e = f.call("GET", "/v1/tasks/t99", "", 404);
    CHECK(e["error"]["kind"] == "NotFound");
    f.call("GET", "/v1/nowhere", "", 404);
    f.call("DELETE", "/v1/sessions", "", 404);
    f.call("POST", "/v1/tasks/generate", R"({"n_range":[4,40]})", 422);
    f.call("POST", "/v1/tasks/generate", R"({"p_trans_range":[0.5]})", 422);
    f.call("POST", "/v1/tasks/generate", "{not json", 422);
    f.call("POST", "/v1/tasks", R"({"schema_version":1})", 422);
    const auto id = f.upload(capture_fixture());
    f.call("POST", "/v1/tasks/" + id + "/assess", R"({"runs":1})", 422);
    f.call("POST", "/v1/tasks/" + id + "/assess", R"({"trusted":"surrogate"})", 422);
    f.assess(id);
    f.call("POST", "/v1/tasks/" + id + "/decision", R"({"decision":"maybe","session_id":"s1"})", 422);
    f.call("POST", "/v1/tasks/" + id + "/decision", R"({"decision":"cancel"})", 422);
    f.call("POST", "/v1/tasks/" + id + "/decision", R"({"decision":"cancel","session_id":"s42"})", 404);
  }

  TEST_CASE("idempotent decisions are recorded once") {
    Fixture f;
    const auto s = f.session();
    const auto id = f.upload(capture_fixture());
    f.assess(id);
    const std::string body = R"({"decision":"cancel","session_id":")" + s + "\"}";
    const auto a = f.call("POST", "/v1/tasks/" + id + "/decision", body, 200, "k1");
    const auto b = f.call("POST", "/v1/tasks/" + id + "/decision", body, 200, "k1");
    CHECK(a == b);
    CHECK(f.call("GET", "/v1/sessions/" + s)["score"] == -0.25);
  }

  TEST_CASE("assessment is deterministic for a task seed") {
    Fixture a;
    Fixture b;
    const auto ta = a.call("POST", "/v1/tasks/generate", R"({"seed":77})", 201);
    const auto tb = b.call("POST", "/v1/tasks/generate", R"({"seed":77})", 201);
    CHECK(ta["task"] == tb["task"]);
    CHECK(a.assess(ta["task_id"]) == b.assess(tb["task_id"]));
  }

  TEST_CASE("the event log replays into the same state") {
    const auto log = (std::filesystem::temp_directory_path() / "famsec_unit_events.jsonl").string();
    std::filesystem::remove(log);
    ServiceConfig cfg;
    cfg.event_log_path = log;
    std::string s;
    json before;
    {
      AssessmentService svc(cfg);
      s = json::parse(svc.handle("POST", "/v1/sessions", "").body.dump())["session_id"];
      const std::string id = json::parse(svc.handle("POST", "/v1/tasks", capture_fixture()).body.dump())["task_id"];
      svc.handle("POST", "/v1/tasks/" + id + "/assess", R"({"runs":10,"candidate":{"iterations":30}})");
      svc.handle("POST", "/v1/tasks/" + id + "/decision", R"({"decision":"authorize","session_id":")" + s + "\"}");
      svc.handle("POST", "/v1/tasks/" + id + "/execute", "");
      before = json::parse(svc.get_session(s).dump());
    }
    AssessmentService replay(cfg);
    CHECK(json::parse(replay.get_session(s).dump()) == before);
    CHECK(replay.replayed_score(s) == before["score"].get<double>());
    // New ids continue after the replayed ones.
    CHECK(json::parse(replay.create_session().dump())["session_id"] == "s2");
    std::ofstream(log, std::ios::app) << "{\"type\":\"bogus\"}\n";
    CHECK_THROWS_AS(AssessmentService{cfg}, Error);
    std::filesystem::remove(log);
  }

  TEST_CASE("config file and environment overrides") {
    const auto path = (std::filesystem::temp_directory_path() / "famsec_unit_cfg.json").string();
    std::ofstream(path) << R"({"port":9000,"default_runs":40,"scoring":{"penalty_cancel":0.5}})";
    std::map<std::string, std::string> env{{"FAMSEC_PORT", "9100"}, {"FAMSEC_REWARD_SUCCESS", "3"}};
    const auto getenv = [&](const char* name) -> const char* {
      const auto it = env.find(name);
      return it == env.end() ? nullptr : it->second.c_str();
    };
    const auto c = load_service_config(path, getenv);
    CHECK(c.port == 9100);
    CHECK(c.default_runs == 40);
    CHECK(c.scoring.penalty_cancel == 0.5);
    CHECK(c.scoring.reward_success == 3.0);
    env["FAMSEC_PORT"] = "90x";
    CHECK_THROWS_AS(load_service_config(path, getenv), Error);
    CHECK_THROWS_AS(load_service_config(std::string("/nonexistent.json"), getenv), Error);
    std::filesystem::remove(path);
  }

  TEST_CASE("indicator labels") {
    CHECK(outcome_label(-1.0) == "very unlikely to meet standard");
    CHECK(outcome_label(1.0) == "very likely to meet standard");
    CHECK(outcome_label(0.0) == "about even odds of meeting standard");
    CHECK(solver_label(1.0) == "on par with trusted solver");
    CHECK(solver_label(0.01) == "much less capable than trusted solver");
  }

  TEST_CASE("HTTP front end on localhost") {
    AssessmentService svc{ServiceConfig{}};
    HttpServer server(svc);
    const int port = server.bind("127.0.0.1", 0);
    std::thread loop([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    std::shared_ptr<httplib::Result> spec;
    for (int i = 0; i < 50; ++i) {
      auto r = client.Get("/v1/spec");
      if (r) {
        spec = std::make_shared<httplib::Result>(std::move(r));
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    REQUIRE(spec);
    CHECK((*spec)->status == 200);
    CHECK((*spec)->get_header_value("Access-Control-Allow-Origin") == "*");
    CHECK(json::parse((*spec)->body)["openapi"] == "3.0.3");
    auto created = client.Post("/v1/sessions", "", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    auto missing = client.Get("/v1/sessions/s404");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    auto pre = client.Options("/v1/sessions");
    REQUIRE(pre);
    CHECK(pre->status == 204);
    server.stop();
    loop.join();
  }
}
