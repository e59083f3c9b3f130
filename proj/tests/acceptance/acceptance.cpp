// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Reports of the configured runs are written to
// acceptance_reports/ in the working directory.
//
// Set RWRE_ACCEPTANCE_ONLY to a comma-separated list of criterion numbers to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/errors.hpp"
#include "rwre/harness.hpp"
#include "rwre/particle_system.hpp"
#include "rwre/report.hpp"

namespace fs = std::filesystem;
using rwre::ExperimentReport;

namespace {

const fs::path kConfigs = fs::path(RWRE_SOURCE_DIR) / "configs";
const fs::path kOut = "acceptance_reports";

struct Outcome {
  bool passed = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    passed = passed && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs one acceptance config, persists its report, and records every verdict.
ExperimentReport run_config(const std::string& name, Outcome& out) {
  auto config = rwre::load_config(kConfigs / "acceptance" / (name + ".json"));
  config.output.report = kOut / (name + ".json");
  const auto report = rwre::run(config);
  if (!report.series.empty()) config.output.series = kOut / (name + ".csv");
  rwre::persist(config, report);
  for (const auto& v : report.verdicts) {
    out.check(v.passed, name + ": " + v.name + " = " + rwre::format_number(v.value) + " (" + v.detail + ")");
  }
  return report;
}

void check_runtime(Outcome& out, std::chrono::steady_clock::time_point t0, double budget) {
  const double s = seconds_since(t0);
  std::ostringstream os;
  os << "runtime " << s << " s < " << budget << " s";
  out.check(s < budget, os.str());
}

Outcome c1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  run_config("c01_invariants_two_point", o);
  const auto constant = run_config("c01_invariants_constant", o);
  o.check(constant.estimates.at("s_exponent").is_null(), "constant spec: s_exponent absent");
  check_runtime(o, t0, 1.0);
  return o;
}

Outcome c2() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  run_config("c02_f_identity_two_point", o);
  run_config("c02_f_identity_constant", o);
  check_runtime(o, t0, 10.0);
  return o;
}

Outcome c3() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  run_config("c03_mean_f", o);
  check_runtime(o, t0, 30.0);
  return o;
}

Outcome c4() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  run_config("c04_speed_two_point", o);
  run_config("c04_speed_constant", o);
  run_config("c04_uniform_lln", o);
  check_runtime(o, t0, 300.0);
  return o;
}

Outcome c5() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  run_config("c05_slowdown_quenched", o);
  run_config("c05_slowdown_averaged", o);
  check_runtime(o, t0, 600.0);
  return o;
}

Outcome c6() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  run_config("c06_stationarity", o);
  check_runtime(o, t0, 900.0);
  return o;
}

Outcome c7() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  run_config("c07_convergence", o);
  check_runtime(o, t0, 1200.0);
  return o;
}

Outcome c8() {
  Outcome o;
  run_config("c08_coupling", o);
  return o;
}

Outcome c9() {
  Outcome o;
  run_config("c09_meeting", o);
  return o;
}

Outcome c10() {
  Outcome o;
  run_config("c10_hydrodynamics", o);
  return o;
}

// Conservation over the full cone and bit-exact window padding, checked
// directly on the particle system.
Outcome c11() {
  Outcome o;
  const auto spec = rwre::EnvironmentSpec::two_point(0.4, 0.8, 0.3);
  const rwre::Environment env(spec, 2024);

  const rwre::SiteRange start{0, 99};
  const auto sampled = rwre::sample_initial(env, rwre::PoissonConstant{2.0}, start, 1);
  rwre::Configuration complete(start, rwre::Extent::Complete);
  for (rwre::Site x = start.lo; x <= start.hi; ++x) complete.set(x, sampled.at(x));
  rwre::Evolver ev(env, complete, 7);
  std::int64_t broken = -1;
  for (int t = 1; t <= 1000 && broken < 0; ++t) {
    ev.step();
    if (ev.current().total() != complete.total()) broken = t;
  }
  o.check(broken < 0, "total " + std::to_string(complete.total()) + " conserved over 1000 steps on the full cone" +
                          (broken < 0 ? "" : " (broke at step " + std::to_string(broken) + ")"));

  const rwre::SiteRange observe{200, 260};
  const std::int64_t T = 1000;
  const auto cone = rwre::cone_window(observe, T);
  const auto wide = rwre::sample_initial(env, rwre::StationaryPoisson{0.5, 1e-10}, cone.padded(500), 3);
  const auto a = rwre::evolve(env, wide, T, 11, observe);
  const auto b = rwre::evolve(env, wide.restricted_to(cone), T, 11, observe);
  bool equal = a.window() == b.window();
  for (rwre::Site x = observe.lo; equal && x <= observe.hi; ++x) equal = a.at(x) == b.at(x);
  o.check(equal, "evolve on cone and on cone padded by 500 agree bit for bit on " + observe.str() + " after 1000 steps");
  return o;
}

// Every example config (one per experiment kind) plus the fast acceptance
// configs, each run twice.
Outcome c12() {
  Outcome o;
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(kConfigs / "examples")) {
    if (e.path().extension() == ".json") configs.push_back(e.path());
  }
  for (const char* n : {"c01_invariants_two_point", "c01_invariants_constant", "c02_f_identity_two_point",
                        "c08_coupling", "c09_meeting"}) {
    configs.push_back(kConfigs / "acceptance" / (std::string(n) + ".json"));
  }
  std::sort(configs.begin(), configs.end());
  std::size_t same = 0;
  for (const auto& path : configs) {
    const auto config = rwre::load_config(path);
    const auto a = rwre::strip_timing(rwre::report_to_json(rwre::run(config))).dump(2);
    const auto b = rwre::strip_timing(rwre::report_to_json(rwre::run(config))).dump(2);
    if (a == b) {
      ++same;
    } else {
      o.check(false, path.filename().string() + ": reports differ");
    }
  }
  o.check(same == configs.size(),
          std::to_string(same) + "/" + std::to_string(configs.size()) + " configs byte-identical modulo timing");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> body;
};

std::set<int> selected() {
  std::set<int> out;
  const char* env = std::getenv("RWRE_ACCEPTANCE_ONLY");
  if (!env || !*env) return out;
  std::stringstream ss(env);
  for (std::string tok; std::getline(ss, tok, ',');) out.insert(std::stoi(tok));
  return out;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "invariants", c1},        {2, "f-identity", c2},        {3, "mean of f", c3},
      {4, "speed and uniform LLN", c4}, {5, "slowdown decay", c5},  {6, "stationarity", c6},
      {7, "convergence", c7},       {8, "coupling", c8},          {9, "meeting", c9},
      {10, "hydrodynamics", c10},   {11, "conservation and cone", c11}, {12, "reproducibility", c12},
  };
  fs::create_directories(kOut);
  const auto only = selected();
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o.check(false, std::string(rwre::error_name(e)) + ": " + e.what());
    }
    std::cout << (o.passed ? "PASS" : "FAIL") << "  C" << c.id << " " << c.name << "  [" << seconds_since(t0)
              << " s]\n";
    for (const auto& l : o.lines) std::cout << "      " << l << '\n';
    std::cout.flush();
    failed += !o.passed;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed\n" : "acceptance: all passed\n");
  return failed ? 1 : 0;
}
