#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "famsec/error.hpp"
#include "famsec/parallel.hpp"
#include "famsec/surrogate.hpp"

using namespace famsec;

namespace {

RandomTaskSampler small_sampler() {
  RandomTaskSampler s;
  s.n_max = 12;
  return s;
}

const TrainingSet& small_set() {
  static const TrainingSet set = generate_training_data(small_sampler(), ValueIterationSolver{}, 40, 20, 123);
  return set;
}

SurrogateModel small_model() {
  SurrogateConfig cfg;
  cfg.mlp.epochs = 30;
  cfg.mlp.seed = 4;
  return train_surrogate(small_set(), cfg);
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_SUITE("surrogate") {
  TEST_CASE("sampler respects its bounds and is reproducible") {
    const auto s = small_sampler();
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto t = s(seed);
      CHECK(t.network.node_count() >= 8);
      CHECK(t.network.node_count() <= 12);
      CHECK(t.p_trans >= 0.0);
      CHECK(t.p_trans <= 1.0);
      CHECK(t.network.connected());
      CHECK(task_to_json(t).dump() == task_to_json(s(seed)).dump());
    }
    RandomTaskSampler bad;
    bad.n_min = 4;
    CHECK_THROWS_AS(bad(1), Error);
    bad = {};
    bad.kind = GeneratorKind::Manual;
    CHECK_THROWS_AS(bad(1), Error);
  }

  TEST_CASE("training data accounts for every generated task") {
    const auto& set = small_set();
    int rejected = 0;
    for (const auto& [reason, count] : set.rejections) rejected += count;
    CHECK(set.generated == 40);
    CHECK(static_cast<int>(set.rows.size()) + rejected == 40);
    CHECK(set.r_low < set.r_high);
    for (const auto& r : set.rows) {
      CHECK(r.features.size() == 2u);
      CHECK(r.n_runs == 20);
      CHECK(r.mean >= set.r_low);
      CHECK(r.mean <= set.r_high);
    }
  }

  TEST_CASE("training data does not depend on the worker count") {
    set_worker_count(1);
    const auto a = generate_training_data(small_sampler(), ValueIterationSolver{}, 12, 10, 9);
    set_worker_count(3);
    const auto b = generate_training_data(small_sampler(), ValueIterationSolver{}, 12, 10, 9);
    set_worker_count(1);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].mean == b.rows[i].mean);
      CHECK(a.rows[i].spread == b.rows[i].spread);
      CHECK(a.rows[i].features == b.rows[i].features);
    }
  }

  TEST_CASE("feature tables") {
    const auto t = small_sampler()(3);
    const auto vi = task_feature_values(t, ValueIterationSolver{});
    CHECK(vi.at("N") == t.network.node_count());
    CHECK(vi.at("p_trans") == t.p_trans);
    CHECK(vi.at("d_m") == 0.0);
    const auto mc = task_feature_values(t, MctsConfig{250, 4, 30.0});
    CHECK(mc.at("its_m") == 250.0);
    CHECK(mc.at("d_m") == 4.0);
    CHECK(mc.at("e_m") == 30.0);
    const auto f = make_features(extended_schema(), mc);
    CHECK(f.values.size() == 5u);
    CHECK(kind_of([] { make_features({"N", "colour"}, {{"N", 1.0}}); }) == ErrorKind::SchemaMismatch);
  }

  TEST_CASE("model JSON round-trips with identical predictions") {
    const auto m = small_model();
    const auto path = (std::filesystem::temp_directory_path() / "famsec_unit_model.json").string();
    save_model(m, path);
    const auto back = load_model(path);
    const auto f = make_features(m.schema, {{"N", 10.0}, {"p_trans", 0.4}});
    const auto a = predict(m, f);
    const auto b = predict(back, f);
    CHECK(a.mu == b.mu);
    CHECK(a.sigma == b.sigma);
    CHECK(a.sigma >= 1e-6 * (m.r_high - m.r_low));
    CHECK(model_to_json(back).dump() == model_to_json(m).dump());
    std::filesystem::remove(path);
  }

  TEST_CASE("model loading errors") {
    auto j = nlohmann::json::parse(model_to_json(small_model()).dump());
    j["schema_version"] = 7;
    CHECK(kind_of([&] { model_from_json(j); }) == ErrorKind::SchemaVersionMismatch);
    j["schema_version"] = kModelSchemaVersion;
    j.erase("mean_net");
    CHECK(kind_of([&] { model_from_json(j); }) == ErrorKind::CorruptFile);
    CHECK(kind_of([] { load_model("/nonexistent/famsec/model.json"); }) == ErrorKind::NotFound);
    const auto path = (std::filesystem::temp_directory_path() / "famsec_unit_bad.json").string();
    std::ofstream(path) << "{ not json";
    CHECK(kind_of([&] { load_model(path); }) == ErrorKind::CorruptFile);
    std::filesystem::remove(path);
  }

  TEST_CASE("prediction checks the schema") {
    const auto m = small_model();
    CHECK(kind_of([&] { predict(m, TaskFeatures{{"p_trans", "N"}, {0.5, 10.0}}); }) == ErrorKind::SchemaMismatch);
    CHECK(kind_of([&] { predict(m, TaskFeatures{m.schema, {1.0}}); }) == ErrorKind::SchemaMismatch);
  }

  TEST_CASE("training curve CSV") {
    const auto m = small_model();
    std::ostringstream out;
    write_training_curve_csv(out, m.mean_curve);
    const auto text = out.str();
    CHECK(text.rfind("epoch,train_mse,val_mse\n1,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 31);
  }

  TEST_CASE("training is reproducible from the seed") {
    CHECK(model_to_json(small_model()).dump() == model_to_json(small_model()).dump());
  }
}
