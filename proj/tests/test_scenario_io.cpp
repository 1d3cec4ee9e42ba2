#include <filesystem>

#include <gtest/gtest.h>

#include "psiepi/optimizer.hpp"
#include "psiepi/scenario_io.hpp"
#include "test_support.hpp"

using namespace psiepi;

namespace {

std::string sample_text(Field f = Field::real) {
  OptimizerOptions o;
  o.restarts = 1;
  o.max_iters = 200;
  o.field = f;
  o.threads = 1;
  const OptimizationResult res = optimize_scenario(3, 3, o);
  return dump_canonical(to_file(res.scenario, Json{{"note", "sample"}}));
}

std::optional<ErrorCode> parse_code(const std::string &text) {
  return test::error_code([&] { to_scenario(parse_scenario_text(text)); });
}

} // namespace

TEST(ScenarioIo, RoundTripIsByteIdentical) {
  for (Field f : {Field::real, Field::complex}) {
    const std::string text = sample_text(f);
    const ScenarioFile file = parse_scenario_text(text);
    EXPECT_EQ(dump_canonical(file), text);
    const Scenario sc = to_scenario(file);
    EXPECT_EQ(dump_canonical(to_file(sc, file.metadata)), text);
  }
}

TEST(ScenarioIo, RoundTripPreservesS) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Field f = trial % 2 ? Field::complex : Field::real;
    const Scenario sc = test::random_povm_scenario(3 + trial % 3, 3 + trial % 2, f, rng);
    const Scenario back = to_scenario(parse_scenario_text(dump_canonical(to_file(sc))));
    EXPECT_EQ(s_value(sc, born_table(sc)).s, s_value(back, born_table(back)).s);
  }
}

TEST(ScenarioIo, RealFieldWritesPlainNumbers) {
  const Json j = Json::parse(sample_text(Field::real));
  EXPECT_TRUE(j["states"][0][0].is_number());
  const Json c = Json::parse(sample_text(Field::complex));
  EXPECT_TRUE(c["states"][0][0].is_array());
  EXPECT_EQ(c["field"], "complex");
}

TEST(ScenarioIo, MalformedFiles) {
  const Json good = Json::parse(sample_text());
  EXPECT_EQ(parse_code("{ not json"), ErrorCode::MalformedFile);
  EXPECT_EQ(parse_code("[]"), ErrorCode::MalformedFile);

  auto mutate = [&](auto fn) {
    Json j = good;
    fn(j);
    return parse_code(j.dump());
  };
  EXPECT_EQ(mutate([](Json &j) { j.erase("states"); }), ErrorCode::MalformedFile);
  EXPECT_EQ(mutate([](Json &j) { j["version"] = "2"; }), ErrorCode::MalformedFile);
  EXPECT_EQ(mutate([](Json &j) { j["dim"] = 3.5; }), ErrorCode::MalformedFile);
  EXPECT_EQ(mutate([](Json &j) { j["field"] = "quaternion"; }), ErrorCode::MalformedFile);
  EXPECT_EQ(mutate([](Json &j) { j["states"][1] = Json::array({1.0, 0.0}); }), ErrorCode::MalformedFile);
  EXPECT_EQ(mutate([](Json &j) { j["states"][1][0] = "x"; }), ErrorCode::MalformedFile);
  EXPECT_EQ(mutate([](Json &j) { j["measurements"][0]["effects"].erase(2); }), ErrorCode::MalformedFile);
  EXPECT_EQ(mutate([](Json &j) { j["metadata"] = 3; }), ErrorCode::MalformedFile);
}

TEST(ScenarioIo, InvariantViolationsNameTheCulprit) {
  Json j = Json::parse(sample_text());
  j["states"][2] = Json::array({1.0, 1.0, 0.0});
  try {
    to_scenario(parse_scenario_text(j.dump()));
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidScenario);
    EXPECT_NE(std::string(e.what()).find("state 2"), std::string::npos) << e.what();
  }

  Json k = Json::parse(sample_text());
  k["measurements"][0]["effects"][0][0][0] = 5.0;
  EXPECT_EQ(parse_code(k.dump()), ErrorCode::InvalidScenario);

  Json dup = Json::parse(sample_text());
  dup["measurements"][1]["j1"] = dup["measurements"][0]["j1"];
  dup["measurements"][1]["j2"] = dup["measurements"][0]["j2"];
  EXPECT_EQ(parse_code(dup.dump()), ErrorCode::InvalidScenario);
}

TEST(ScenarioIo, AtomicWriteAndLoad) {
  const auto dir = std::filesystem::temp_directory_path() / "psiepi_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "s.json";
  const std::string text = sample_text();
  write_file_atomic(path, text);
  EXPECT_FALSE(std::filesystem::exists(dir / "s.json.tmp"));
  EXPECT_EQ(read_text_file(path), text);
  EXPECT_EQ(dump_canonical(load_scenario_file(path)), text);
  EXPECT_EQ(test::error_code([&] { read_text_file(dir / "missing.json"); }), ErrorCode::MalformedFile);
  std::filesystem::remove_all(dir);
}
