#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rwre/errors.hpp"
#include "rwre/harness.hpp"
#include "rwre/report.hpp"

namespace rwre {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json two_point_env() { return {{"law", "two_point"}, {"low", 0.4}, {"high", 0.8}, {"prob_low", 0.3}}; }
json constant_env() { return {{"law", "constant"}, {"p", 0.75}}; }

fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("rwre_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TEST(ParseConfig, UnknownKindNamesField) {
  json j{{"kind", "teleport"}, {"environment", constant_env()}, {"seeds", {{"master", 1}}}};
  try {
    parse_config(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("kind"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, MasterSeedMandatory) {
  json j{{"kind", "invariants"}, {"environment", constant_env()}, {"seeds", json::object()}};
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("master"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, UnknownKeysRejected) {
  json j{{"kind", "invariants"}, {"environment", constant_env()}, {"seeds", {{"master", 1}}}, {"colour", "red"}};
  EXPECT_THROW(parse_config(j), ConfigError);
  j.erase("colour");
  j["params"] = {{"expect_speeed", 0.5}};
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(ParseConfig, EnvironmentLaws) {
  EXPECT_NO_THROW(parse_environment(two_point_env()));
  EXPECT_NO_THROW(parse_environment({{"law", "discrete"}, {"atoms", {{{"omega", 0.6}, {"prob", 0.5}}, {{"omega", 0.9}, {"prob", 0.5}}}}}));
  EXPECT_NO_THROW(parse_environment({{"law", "truncated"}, {"base", "beta"}, {"a", 2.0}, {"b", 1.0}, {"c", 0.1}}));
  EXPECT_THROW(parse_environment({{"law", "truncated"}, {"base", "beta"}, {"a", 2.0}, {"b", 1.0}}), ConfigError);
  EXPECT_THROW(parse_environment({{"law", "cauchy"}}), ConfigError);
  const auto spec = parse_environment(two_point_env());
  EXPECT_EQ(environment_to_json(parse_environment(environment_to_json(spec))), environment_to_json(spec));
}

TEST(ParseConfig, InitialLawRoundTrip) {
  for (const json& j : {json{{"law", "deterministic"}, {"count", 2}}, json{{"law", "poisson"}, {"mean", 0.4}},
                        json{{"law", "stationary"}, {"alpha", 0.5}}}) {
    const auto law = parse_initial_law(j, "params.eta");
    EXPECT_EQ(initial_law_to_json(parse_initial_law(initial_law_to_json(law), "x")), initial_law_to_json(law));
  }
  EXPECT_THROW(parse_initial_law({{"law", "poisson"}, {"mean", -1.0}}, "params.eta"), ConfigError);
}

TEST(Run, InvariantsTwoPoint) {
  json j{{"kind", "invariants"}, {"environment", two_point_env()}, {"seeds", {{"master", 1}}}};
  const auto report = run(parse_config(j));
  EXPECT_TRUE(report.passed());
  EXPECT_NEAR(report.estimates.at("speed").get<double>(), 3.0 / 13.0, 1e-15);
  EXPECT_NEAR(report.estimates.at("s_exponent").get<double>(), 2.94, 0.01);
}

TEST(Run, FCheckConstant) {
  json j{{"kind", "f-check"},
         {"environment", constant_env()},
         {"seeds", {{"master", 1}}},
         {"params", {{"window", {0, 999}}, {"tolerance", 1e-8}, {"expect_f", 2.0}}}};
  const auto report = run(parse_config(j));
  EXPECT_TRUE(report.passed());
  for (const auto& v : report.verdicts) EXPECT_TRUE(v.passed) << v.name << ": " << v.detail;
}

TEST(Run, ResourceCap) {
  json j{{"kind", "speed"},
         {"environment", constant_env()},
         {"seeds", {{"master", 1}, {"replicas", 1000}}},
         {"params", {{"n", 100000000}}}};
  EXPECT_THROW(run(parse_config(j)), ResourceCap);
}

TEST(Run, AssumptionViolationPropagates) {
  json j{{"kind", "invariants"}, {"environment", {{"law", "constant"}, {"p", 0.5}}}, {"seeds", {{"master", 1}}}};
  EXPECT_THROW(run(parse_config(j)), AssumptionViolation);
}

TEST(Run, CoupleReportHasEqualLengthSeries) {
  json j{{"kind", "couple"},
         {"environment", two_point_env()},
         {"seeds", {{"master", 1}, {"mode", "averaged"}, {"replicas", 5}}},
         {"params", {{"observe", {0, 49}}, {"steps", 20}, {"invariant_steps", 20}}}};
  const auto report = run(parse_config(j));
  const auto* plus = report.find_series("beta_plus");
  const auto* minus = report.find_series("beta_minus");
  ASSERT_NE(plus, nullptr);
  ASSERT_NE(minus, nullptr);
  EXPECT_EQ(plus->points.size(), minus->points.size());
  EXPECT_EQ(plus->points.size(), 21u);
}

TEST(Run, Reproducible) {
  json j{{"kind", "speed"},
         {"environment", two_point_env()},
         {"seeds", {{"master", 5}, {"mode", "averaged"}, {"replicas", 20}}},
         {"params", {{"n", 2000}}}};
  const auto cfg = parse_config(j);
  const auto a = strip_timing(report_to_json(run(cfg))).dump();
  const auto b = strip_timing(report_to_json(run(cfg))).dump();
  EXPECT_EQ(a, b);
}

TEST(Report, JsonRoundTrip) {
  ExperimentReport r;
  r.name = "x";
  r.kind = "speed";
  r.verdicts.push_back({"v", true, 0.25, "ok"});
  r.series.push_back({"s", {{1, 2, 1.5, 2.5}, {2, 3, 2.5, 3.5}}});
  r.notes.push_back("note");
  r.wall_clock_seconds = 1.5;
  const auto back = report_from_json(report_to_json(r));
  EXPECT_EQ(report_to_json(back), report_to_json(r));
}

TEST(PlotData, ThreePoints) {
  ExperimentReport r;
  r.name = "p";
  r.series.push_back({"s", {{1, 2, 1, 3}, {2, 4, 3, 5}, {3, 0.5, 0, 1}}});
  const auto csv = plot_data_csv(r);
  EXPECT_EQ(csv, "series,x,y,lo,hi\ns,1,2,1,3\ns,2,4,3,5\ns,3,0.5,0,1\n");
}

TEST(PlotData, EmptySeriesWritesNothing) {
  const auto dir = scratch_dir("plot");
  ExperimentReport r;
  r.name = "empty";
  const auto path = dir / "out.csv";
  EXPECT_THROW(emit_plot_data(r, path), IOError);
  EXPECT_FALSE(fs::exists(path));
  EXPECT_FALSE(fs::exists(dir / "out.csv.tmp"));
}

TEST(Persist, WritesReportAndSeries) {
  const auto dir = scratch_dir("persist");
  json j{{"kind", "invariants"},
         {"environment", constant_env()},
         {"seeds", {{"master", 1}}},
         {"output", {{"report", (dir / "r.json").string()}, {"series", (dir / "r.csv").string()}}}};
  const auto cfg = parse_config(j);
  const auto report = run(cfg);
  persist(cfg, report);
  const auto back = read_report(dir / "r.json");
  EXPECT_EQ(back.name, report.name);
  EXPECT_TRUE(fs::exists(dir / "r.csv"));
  EXPECT_FALSE(fs::exists(dir / "r.json.tmp"));
}

TEST(Persist, ReportEmbedsSeeds) {
  json j{{"kind", "invariants"}, {"environment", two_point_env()}, {"seeds", {{"master", 42}}}};
  const auto report = run(parse_config(j));
  EXPECT_EQ(report.config.at("seeds").at("master").get<std::uint64_t>(), 42u);
  EXPECT_TRUE(report.config.at("environment").contains("law"));
}

TEST(Configs, ExamplesAndAcceptanceValidate) {
  for (const char* sub : {"configs/examples", "configs/acceptance"}) {
    for (const auto& e : fs::directory_iterator(fs::path(RWRE_SOURCE_DIR) / sub)) {
      if (e.path().extension() != ".json") continue;
      const auto cfg = load_config(e.path());
      EXPECT_LE(estimate_work(cfg), cfg.max_site_steps) << e.path();
    }
  }
}

TEST(Configs, NameDefaultsToFileStem) {
  const auto dir = scratch_dir("stem");
  std::ofstream(dir / "my_run.json") << R"({"kind": "invariants", "environment": {"law": "constant", "p": 0.75},
                                           "seeds": {"master": 1}})";
  EXPECT_EQ(load_config(dir / "my_run.json").name, "my_run");
}

TEST(Configs, MalformedFile) {
  const auto dir = scratch_dir("bad");
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
}

}  // namespace
}  // namespace rwre
