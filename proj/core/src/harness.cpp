#include "rwre/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "rwre/coupling.hpp"
#include "rwre/errors.hpp"
#include "rwre/estimators.hpp"
#include "rwre/walker.hpp"

#ifndef RWRE_VERSION
#define RWRE_VERSION "0.0.0"
#endif

namespace rwre {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view tool_version() noexcept { return RWRE_VERSION; }

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"speed",      "lln",    "slowdown", "hitting", "stationary", "converge",
                                              "couple",     "hydro",  "meet",     "f-check", "invariants"};
  return kinds;
}

namespace {

// ---------------------------------------------------------------------------
// JSON field access with ConfigError naming the field

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      bad(where + "." + key, "unknown field");
    }
  }
}

const json& need(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) bad(where + "." + key, "missing required field");
  return obj.at(key);
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) bad(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(field, "expected a finite number");
  return d;
}

std::int64_t as_integer(const json& v, const std::string& field) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  bad(field, "expected an integer");
}

std::uint64_t as_seed(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  bad(field, "expected a non-negative integer seed");
}

/// Experiment parameters with typed, defaulted access. Unknown keys are
/// rejected up front.
class Params {
 public:
  Params(const json& j, std::initializer_list<const char*> allowed) : j_(j) { check_keys(j_, "params", allowed); }

  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) const { return need(j_, "params", key); }

  double num(const char* key) const { return as_number(raw(key), field(key)); }
  double num(const char* key, double def) const { return has(key) ? num(key) : def; }
  double positive(const char* key, double def) const {
    const double v = num(key, def);
    if (!(v > 0.0)) bad(field(key), "must be positive");
    return v;
  }
  std::int64_t integer(const char* key) const { return as_integer(raw(key), field(key)); }
  std::int64_t integer(const char* key, std::int64_t def) const { return has(key) ? integer(key) : def; }
  std::int64_t count(const char* key, std::int64_t def, std::int64_t min = 1) const {
    const auto v = integer(key, def);
    if (v < min) bad(field(key), "must be at least " + std::to_string(min));
    return v;
  }
  std::int64_t count(const char* key) const {
    const auto v = integer(key);
    if (v < 1) bad(field(key), "must be at least 1");
    return v;
  }
  bool flag(const char* key, bool def) const {
    if (!has(key)) return def;
    if (!raw(key).is_boolean()) bad(field(key), "expected true or false");
    return raw(key).get<bool>();
  }
  std::string str(const char* key, const std::string& def) const {
    if (!has(key)) return def;
    if (!raw(key).is_string()) bad(field(key), "expected a string");
    return raw(key).get<std::string>();
  }
  std::vector<std::int64_t> ints(const char* key, std::vector<std::int64_t> def) const {
    if (!has(key)) return def;
    const auto& a = raw(key);
    if (!a.is_array() || a.empty()) bad(field(key), "expected a non-empty array of integers");
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_integer(a[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }
  std::vector<std::int64_t> ints(const char* key) const {
    raw(key);
    return ints(key, {});
  }
  SiteRange range(const char* key, SiteRange def) const {
    if (!has(key)) return def;
    const auto v = ints(key);
    if (v.size() != 2 || v[0] > v[1]) bad(field(key), "expected [lo, hi] with lo <= hi");
    return {v[0], v[1]};
  }

  static std::string field(const char* key) { return std::string("params.") + key; }

 private:
  const json& j_;
};

// ---------------------------------------------------------------------------
// Per-kind parameter blocks

struct InvariantsParams {
  std::optional<double> expect_mean_rho, expect_speed, expect_s;
  double exact_tolerance = 1e-12;
  double s_residual_max = 1e-10;
  std::optional<double> expect_f;
  SiteRange f_window{0, 99};
  double f_tolerance = 1e-10;
};

InvariantsParams parse_invariants(const json& j) {
  Params p(j, {"expect_mean_rho", "expect_speed", "expect_s", "exact_tolerance", "s_residual_max", "expect_f",
               "f_window", "f_tolerance"});
  InvariantsParams out;
  if (p.has("expect_mean_rho")) out.expect_mean_rho = p.num("expect_mean_rho");
  if (p.has("expect_speed")) out.expect_speed = p.num("expect_speed");
  if (p.has("expect_s")) out.expect_s = p.num("expect_s");
  if (p.has("expect_f")) out.expect_f = p.num("expect_f");
  out.exact_tolerance = p.positive("exact_tolerance", out.exact_tolerance);
  out.s_residual_max = p.positive("s_residual_max", out.s_residual_max);
  out.f_window = p.range("f_window", out.f_window);
  out.f_tolerance = p.positive("f_tolerance", out.f_tolerance);
  return out;
}

struct FCheckParams {
  SiteRange window{0, 9999};
  double tolerance = 1e-8;
  double residual_factor = 3.0;
  std::optional<SiteRange> mean_window;
  double mean_rel_tol = 0.02;
  std::optional<double> expect_f;
};

FCheckParams parse_fcheck(const json& j) {
  Params p(j, {"window", "tolerance", "residual_factor", "mean_window", "mean_rel_tol", "expect_f"});
  FCheckParams out;
  out.window = p.range("window", out.window);
  if (out.window.size() < 3) bad("params.window", "needs at least 3 sites");
  out.tolerance = p.positive("tolerance", out.tolerance);
  out.residual_factor = p.positive("residual_factor", out.residual_factor);
  if (p.has("mean_window")) out.mean_window = p.range("mean_window", {});
  out.mean_rel_tol = p.positive("mean_rel_tol", out.mean_rel_tol);
  if (p.has("expect_f")) out.expect_f = p.num("expect_f");
  return out;
}

struct SpeedParams {
  std::int64_t n = 100000;
  double z_max = 4.0;
};

SpeedParams parse_speed(const json& j) {
  Params p(j, {"n", "z_max"});
  return {p.count("n", 100000), p.positive("z_max", 4.0)};
}

struct LlnParams {
  double A = 0.0;
  double B = 1.0;
  std::int64_t n = 10000;
  std::int64_t m = 10;
  double threshold = 0.05;
  double pass_fraction = 0.95;
};

LlnParams parse_lln(const json& j) {
  Params p(j, {"A", "B", "n", "m", "threshold", "pass_fraction"});
  LlnParams out;
  out.A = p.num("A", out.A);
  out.B = p.num("B", out.B);
  if (!(out.A < out.B)) bad("params.B", "must exceed params.A");
  out.n = p.count("n", out.n);
  out.m = p.count("m", out.m);
  out.threshold = p.positive("threshold", out.threshold);
  out.pass_fraction = p.num("pass_fraction", out.pass_fraction);
  if (out.pass_fraction < 0.0 || out.pass_fraction > 1.0) bad("params.pass_fraction", "must lie in [0, 1]");
  return out;
}

struct SlowdownParams {
  std::optional<double> v;
  double v_fraction = 0.5;
  std::vector<std::int64_t> ns{200, 400, 800};
  bool free_fit = false;
  double exponent_band = 1.0;
};

SlowdownParams parse_slowdown(const json& j) {
  Params p(j, {"v", "v_fraction", "ns", "free_fit", "exponent_band"});
  SlowdownParams out;
  if (p.has("v") && p.has("v_fraction")) bad("params.v", "give either v or v_fraction, not both");
  if (p.has("v")) out.v = p.num("v");
  out.v_fraction = p.num("v_fraction", out.v_fraction);
  out.ns = p.ints("ns", out.ns);
  for (auto n : out.ns) {
    if (n < 1) bad("params.ns", "entries must be at least 1");
  }
  if (out.ns.size() > 64) bad("params.ns", "at most 64 entries");
  out.free_fit = p.flag("free_fit", false);
  out.exponent_band = p.positive("exponent_band", out.exponent_band);
  return out;
}

struct HittingParams {
  SiteRange starts{0, 0};
  std::vector<std::int64_t> ns{100, 200, 400};
  double mu = 0.0;  // required
};

HittingParams parse_hitting(const json& j) {
  Params p(j, {"starts", "ns", "mu"});
  HittingParams out;
  out.starts = p.range("starts", out.starts);
  out.ns = p.ints("ns", out.ns);
  for (auto n : out.ns) {
    if (n < 1) bad("params.ns", "entries must be at least 1");
  }
  out.mu = p.num("mu");
  if (!(out.mu > 0.0)) bad("params.mu", "must be positive");
  return out;
}

std::vector<Site> parse_probes(const Params& p, std::vector<Site> def) {
  if (!p.has("probes")) return def;
  const auto& v = p.raw("probes");
  if (v.is_object()) {
    check_keys(v, "params.probes", {"first", "count", "spacing"});
    const auto first = as_integer(need(v, "params.probes", "first"), "params.probes.first");
    const auto count = as_integer(need(v, "params.probes", "count"), "params.probes.count");
    const auto spacing = v.contains("spacing") ? as_integer(v["spacing"], "params.probes.spacing") : 1;
    if (count < 1 || spacing < 1) bad("params.probes", "count and spacing must be positive");
    std::vector<Site> out;
    for (std::int64_t i = 0; i < count; ++i) out.push_back(first + i * spacing);
    return out;
  }
  return p.ints("probes");
}

struct StationaryParams {
  double alpha = 0.5;
  std::int64_t T = 1000;
  std::vector<Site> probes{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::int64_t batches = 10;
  double level = 0.05;
  double rate_band = 0.03;
  double mean_se = 3.0;
  double f_tolerance = 1e-10;
};

StationaryParams parse_stationary(const json& j) {
  Params p(j, {"alpha", "T", "probes", "batches", "level", "rate_band", "mean_se", "f_tolerance"});
  StationaryParams out;
  out.alpha = p.positive("alpha", out.alpha);
  out.T = p.count("T", out.T, 0);
  out.probes = parse_probes(p, out.probes);
  out.batches = p.count("batches", out.batches);
  out.level = p.positive("level", out.level);
  out.rate_band = p.positive("rate_band", out.rate_band);
  out.mean_se = p.positive("mean_se", out.mean_se);
  out.f_tolerance = p.positive("f_tolerance", out.f_tolerance);
  return out;
}

struct ConvergeParams {
  InitialLaw initial = DeterministicConstant{1};
  std::optional<double> alpha;
  Site probe = 0;
  std::vector<std::int64_t> monotone_times{10, 100, 1000};
  std::int64_t final_time = 2000;
  double final_tv_max = 0.05;
  double f_tolerance = 1e-10;
};

ConvergeParams parse_converge(const json& j) {
  Params p(j, {"initial", "alpha", "probe", "monotone_times", "final_time", "final_tv_max", "f_tolerance"});
  ConvergeParams out;
  if (p.has("initial")) out.initial = parse_initial_law(p.raw("initial"), "params.initial");
  if (p.has("alpha")) out.alpha = p.positive("alpha", 1.0);
  out.probe = p.integer("probe", out.probe);
  out.monotone_times = p.ints("monotone_times", out.monotone_times);
  for (auto t : out.monotone_times) {
    if (t < 0) bad("params.monotone_times", "times must be non-negative");
  }
  out.final_time = p.count("final_time", out.final_time, 0);
  out.final_tv_max = p.positive("final_tv_max", out.final_tv_max);
  out.f_tolerance = p.positive("f_tolerance", out.f_tolerance);
  return out;
}

struct CoupleParams {
  InitialLaw eta = DeterministicConstant{1};
  std::optional<InitialLaw> zeta;  // stationary at alpha = v_P * E eta when absent
  SiteRange observe{0, 999};
  std::int64_t steps = 1000;
  bool share_config_seed = false;
  double step_se = 2.0;
  double difference_se = 3.0;
  double min_reduction = 0.5;
  std::int64_t invariant_steps = 1000;
};

CoupleParams parse_couple(const json& j) {
  Params p(j, {"eta", "zeta", "observe", "steps", "share_config_seed", "step_se", "difference_se", "min_reduction",
               "invariant_steps"});
  CoupleParams out;
  if (p.has("eta")) out.eta = parse_initial_law(p.raw("eta"), "params.eta");
  if (p.has("zeta")) out.zeta = parse_initial_law(p.raw("zeta"), "params.zeta");
  out.observe = p.range("observe", out.observe);
  out.steps = p.count("steps", out.steps);
  out.share_config_seed = p.flag("share_config_seed", false);
  out.step_se = p.positive("step_se", out.step_se);
  out.difference_se = p.positive("difference_se", out.difference_se);
  out.min_reduction = p.num("min_reduction", out.min_reduction);
  out.invariant_steps = p.count("invariant_steps", out.invariant_steps, 0);
  return out;
}

struct HydroParams {
  Profile profile = Profile::indicator(0.0, 1.0, 1.0);
  double N = 1000.0;
  double t = 1.0;
  std::vector<TestFunction> gs;
  SynthesisMode synthesis = SynthesisMode::Poisson;
  double threshold = 0.05;
  double pass_fraction = 0.95;
  std::vector<std::int64_t> median_ns;
};

HydroParams parse_hydro(const json& j) {
  Params p(j, {"profile", "N", "t", "g", "synthesis", "threshold", "pass_fraction", "median_ns"});
  HydroParams out;
  if (p.has("profile")) out.profile = parse_profile(p.raw("profile"), "params.profile");
  out.N = p.positive("N", out.N);
  out.t = p.num("t", out.t);
  if (out.t < 0.0) bad("params.t", "must be non-negative");
  const auto& g = p.raw("g");
  if (!g.is_array() || g.empty()) bad("params.g", "expected a non-empty array of test functions");
  for (std::size_t i = 0; i < g.size(); ++i) out.gs.push_back(parse_test_function(g[i], "params.g[" + std::to_string(i) + "]"));
  const auto mode = p.str("synthesis", "poisson");
  if (mode == "poisson") {
    out.synthesis = SynthesisMode::Poisson;
  } else if (mode == "floor") {
    out.synthesis = SynthesisMode::Floor;
  } else {
    bad("params.synthesis", "expected \"poisson\" or \"floor\"");
  }
  out.threshold = p.positive("threshold", out.threshold);
  out.pass_fraction = p.num("pass_fraction", out.pass_fraction);
  out.median_ns = p.ints("median_ns", {});
  for (auto n : out.median_ns) {
    if (n < 1) bad("params.median_ns", "entries must be at least 1");
  }
  return out;
}

struct MeetParams {
  Site y = 0;
  Site z = 2;
  std::int64_t horizon = 100000;
  double fraction_min = 0.999;
  std::vector<std::int64_t> checkpoints;
};

MeetParams parse_meet(const json& j) {
  Params p(j, {"y", "z", "horizon", "fraction_min", "checkpoints"});
  MeetParams out;
  out.y = p.integer("y", out.y);
  out.z = p.integer("z", out.z);
  if (((out.z - out.y) % 2) != 0) bad("params.z", "z - y must be even for the walks to meet");
  out.horizon = p.count("horizon", out.horizon);
  out.fraction_min = p.num("fraction_min", out.fraction_min);
  out.checkpoints = p.ints("checkpoints", {});
  if (out.checkpoints.empty()) {
    for (std::int64_t h = 1; h < out.horizon; h *= 10) out.checkpoints.push_back(h);
    out.checkpoints.push_back(out.horizon);
  }
  for (auto h : out.checkpoints) {
    if (h < 0 || h > out.horizon) bad("params.checkpoints", "entries must lie in [0, horizon]");
  }
  return out;
}

void validate_params(const ExperimentConfig& c) {
  const auto& k = c.kind;
  const auto& j = c.params;
  if (k == "invariants") parse_invariants(j);
  else if (k == "f-check") parse_fcheck(j);
  else if (k == "speed") parse_speed(j);
  else if (k == "lln") parse_lln(j);
  else if (k == "slowdown") parse_slowdown(j);
  else if (k == "hitting") parse_hitting(j);
  else if (k == "stationary") parse_stationary(j);
  else if (k == "converge") parse_converge(j);
  else if (k == "couple") parse_couple(j);
  else if (k == "hydro") parse_hydro(j);
  else if (k == "meet") parse_meet(j);
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json proportion_json(const ProportionEstimate& e) {
  return {{"successes", e.successes}, {"trials", e.trials}, {"estimate", e.estimate},
          {"lower", e.lower},         {"upper", e.upper},   {"degenerate", e.degenerate}};
}

json mean_json(const MeanEstimate& m) {
  return {{"mean", m.mean}, {"std_error", m.std_error}, {"samples", m.samples}};
}

Verdict verdict(std::string name, bool passed, double value, std::string detail) {
  return {std::move(name), passed, value, std::move(detail)};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---------------------------------------------------------------------------
// Experiments

void run_invariants(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_invariants(c.params);
  const auto inv = compute_invariants(c.environment);
  r.estimates["mean_rho"] = inv.mean_rho;
  r.estimates["speed"] = inv.speed;
  r.estimates["nestling"] = inv.nestling;
  r.estimates["s_exponent"] = inv.s_exponent ? json(*inv.s_exponent) : json(nullptr);
  r.estimates["s_residual"] = inv.s_residual ? json(*inv.s_residual) : json(nullptr);

  auto exact = [&](const char* name, double got, std::optional<double> want) {
    if (!want) return;
    const double d = std::fabs(got - *want);
    r.verdicts.push_back(verdict(name, d <= p.exact_tolerance, d,
                                 "|" + fmt(got) + " - " + fmt(*want) + "| <= " + fmt(p.exact_tolerance)));
  };
  exact("mean_rho", inv.mean_rho, p.expect_mean_rho);
  exact("speed", inv.speed, p.expect_speed);
  if (inv.s_exponent) {
    r.verdicts.push_back(verdict("s_residual", *inv.s_residual <= p.s_residual_max, *inv.s_residual,
                                 "|E rho^s - 1| <= " + fmt(p.s_residual_max)));
    if (p.expect_s) {
      const double d = std::fabs(*inv.s_exponent - *p.expect_s);
      r.verdicts.push_back(verdict("s_exponent", d <= 0.01, d, "|s - " + fmt(*p.expect_s) + "| <= 0.01"));
    }
  } else if (p.expect_s) {
    r.verdicts.push_back(verdict("s_exponent", false, std::nan(""), "no slowdown exponent for this law"));
  }

  const Environment env(c.environment, c.seeds.env_seed(0));
  const auto f = compute_f(env, p.f_window, p.f_tolerance);
  Series fs{"f", {}};
  double worst = 0.0;
  for (Site x = p.f_window.lo; x <= p.f_window.hi; ++x) {
    const double v = f.at(x);
    fs.points.push_back({static_cast<double>(x), v, v, v});
    if (p.expect_f) worst = std::max(worst, std::fabs(v - *p.expect_f));
  }
  r.estimates["f_max_depth"] = f.max_depth;
  if (p.expect_f) {
    r.verdicts.push_back(verdict("f_constant", worst <= p.f_tolerance, worst,
                                 "max |f - " + fmt(*p.expect_f) + "| <= " + fmt(p.f_tolerance)));
  }
  r.series.push_back(std::move(fs));
}

void run_fcheck(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_fcheck(c.params);
  const auto inv = compute_invariants(c.environment);
  const Environment env(c.environment, c.seeds.env_seed(0));
  const auto f = compute_f(env, p.window, p.tolerance);
  const auto res = potential_identity_residuals(env, f);
  const double worst = res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
  const double bound = p.residual_factor * p.tolerance;
  r.estimates["max_identity_residual"] = worst;
  r.estimates["max_depth"] = f.max_depth;
  r.verdicts.push_back(verdict("identity_residual", worst <= bound, worst, "max residual <= " + fmt(bound)));

  Series fs{"f", {}};
  double f_min = f.values.front(), f_max = f.values.front();
  for (Site x = p.window.lo; x <= p.window.hi; ++x) {
    const double v = f.at(x);
    f_min = std::min(f_min, v);
    f_max = std::max(f_max, v);
    fs.points.push_back({static_cast<double>(x), v, v, v});
  }
  r.estimates["f_min"] = f_min;
  r.estimates["f_max"] = f_max;
  if (p.expect_f) {
    const double d = std::max(std::fabs(f_min - *p.expect_f), std::fabs(f_max - *p.expect_f));
    r.verdicts.push_back(verdict("f_value", d <= bound, d, "max |f - " + fmt(*p.expect_f) + "| <= " + fmt(bound)));
  }
  if (p.mean_window) {
    const auto fm = compute_f(env, *p.mean_window, p.tolerance);
    double sum = 0.0;
    for (double v : fm.values) sum += v;
    const double mean = sum / static_cast<double>(fm.values.size());
    const double target = 1.0 / inv.speed;
    const double rel = std::fabs(mean - target) / target;
    r.estimates["window_mean_f"] = mean;
    r.estimates["inverse_speed"] = target;
    r.verdicts.push_back(verdict("mean_f", rel <= p.mean_rel_tol, rel,
                                 "|mean f - 1/v_P| / (1/v_P) <= " + fmt(p.mean_rel_tol) + " over " +
                                     p.mean_window->str()));
  }
  r.series.push_back(std::move(fs));
}

void run_speed(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_speed(c.params);
  if (c.seeds.replicas < 2) bad("seeds.replicas", "speed needs at least 2 replicas");
  const auto est = empirical_speed(c.environment, p.n, c.seeds);
  r.estimates["speed"] = mean_json(est.speed);
  r.estimates["analytic_speed"] = est.analytic;
  r.estimates["z_score"] = est.z_score;
  r.verdicts.push_back(verdict("speed_within_se", std::fabs(est.z_score) <= p.z_max, est.z_score,
                               "|empirical - v_P| <= " + fmt(p.z_max) + " SE"));
  const double h = kZ95 * est.speed.std_error;
  r.series.push_back({"speed", {{static_cast<double>(p.n), est.speed.mean, est.speed.mean - h, est.speed.mean + h}}});
}

void run_lln(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_lln(c.params);
  Series s{"max_deviation", {}};
  std::size_t below = 0;
  json per_run = json::array();
  for (std::size_t i = 0; i < c.seeds.replicas; ++i) {
    const Environment env(c.environment, c.seeds.env_seed(i));
    const auto d = uniform_lln_deviation(env, p.A, p.B, p.n, p.m, c.seeds.walk_seed(i));
    if (d.max_deviation < p.threshold) ++below;
    s.points.push_back({static_cast<double>(i), d.max_deviation, d.max_deviation, d.max_deviation});
    per_run.push_back(d.max_deviation);
    if (i == 0) {
      r.estimates["walks_per_run"] = d.walks;
      r.estimates["implied_gamma"] = d.implied_gamma;
    }
  }
  const double frac = static_cast<double>(below) / static_cast<double>(c.seeds.replicas);
  r.estimates["max_deviation"] = per_run;
  r.estimates["runs_below_threshold"] = below;
  r.verdicts.push_back(verdict("uniform_lln", frac >= p.pass_fraction, frac,
                               std::to_string(below) + "/" + std::to_string(c.seeds.replicas) + " runs below " +
                                   fmt(p.threshold) + ", need fraction >= " + fmt(p.pass_fraction)));
  r.series.push_back(std::move(s));
}

void run_slowdown(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_slowdown(c.params);
  const auto inv = compute_invariants(c.environment);
  const double v = p.v ? *p.v : p.v_fraction * inv.speed;
  const auto est = slowdown_curve(c.environment, v, p.ns, c.seeds);
  r.estimates["v"] = v;
  json curve = json::array();
  Series s{"slowdown", {}};
  for (std::size_t i = 0; i < p.ns.size(); ++i) {
    auto e = proportion_json(est[i]);
    e["n"] = p.ns[i];
    curve.push_back(e);
    s.points.push_back({static_cast<double>(p.ns[i]), est[i].estimate, est[i].lower, est[i].upper});
  }
  r.estimates["curve"] = curve;
  r.series.push_back(std::move(s));
  r.notes.push_back("slowdown scaling treats the arbitrary delta in the quenched exponent as 0");

  if (!inv.s_exponent) {
    r.notes.push_back("law is not nestling: no slowdown exponent, scaling fit skipped");
  } else {
    const auto d = fit_slowdown_scaling(p.ns, est, c.seeds.mode, *inv.s_exponent, p.free_fit);
    r.estimates["scaling"] = {{"mode", std::string(to_string(d.mode))},
                              {"free_fit", d.free_fit},
                              {"used_ns", d.used_ns},
                              {"slope", d.slope},
                              {"intercept", d.intercept},
                              {"r_squared", d.r_squared},
                              {"fitted_exponent", d.fitted_exponent ? json(*d.fitted_exponent) : json(nullptr)},
                              {"reference_exponent", d.reference_exponent}};
    if (c.seeds.mode == SeedMode::Averaged) {
      if (d.used_ns.size() < 2 || !d.fitted_exponent) {
        r.verdicts.push_back(verdict("averaged_exponent", false, std::nan(""),
                                     "fewer than two n with a confidence interval inside (0, 1)"));
      } else {
        const double gap = std::fabs(*d.fitted_exponent - d.reference_exponent);
        r.verdicts.push_back(verdict("averaged_exponent", gap <= p.exponent_band, *d.fitted_exponent,
                                     "|fitted - (1 - s)| = " + fmt(gap) + " <= " + fmt(p.exponent_band)));
      }
    }
  }
  if (c.seeds.mode == SeedMode::Quenched) {
    std::vector<std::size_t> order(p.ns.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p.ns[a] < p.ns[b]; });
    bool ok = true;
    double worst_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < order.size(); ++k) {
      const auto& prev = est[order[k - 1]];
      const auto& next = est[order[k]];
      worst_gap = std::min(worst_gap, prev.lower - next.upper);
      if (!(next.estimate < prev.estimate && next.upper < prev.lower)) ok = false;
    }
    r.verdicts.push_back(verdict("quenched_decreasing", ok, worst_gap,
                                 "p(n) strictly decreasing with disjoint 95% intervals"));
  }
}

void run_hitting(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_hitting(c.params);
  const Environment env(c.environment, c.seeds.env_seed(0));
  Series s{"hitting_tail", {}};
  json curve = json::array();
  std::vector<ProportionEstimate> est;
  for (auto n : p.ns) {
    est.push_back(hitting_tail(env, p.starts, n, p.mu, c.seeds.replicas, c.seeds.walk_seed(0)));
    auto e = proportion_json(est.back());
    e["n"] = n;
    curve.push_back(e);
    s.points.push_back({static_cast<double>(n), est.back().estimate, est.back().lower, est.back().upper});
  }
  r.estimates["mu"] = p.mu;
  r.estimates["curve"] = curve;
  bool ok = true;
  for (std::size_t k = 1; k < est.size(); ++k) {
    if (p.ns[k] > p.ns[k - 1] && est[k].estimate > est[k - 1].upper) ok = false;
  }
  r.verdicts.push_back(verdict("tail_non_increasing", ok, est.back().estimate,
                               "each estimate at most the previous upper 95% bound"));
  r.series.push_back(std::move(s));
}

void run_stationary(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_stationary(c.params);
  if (c.seeds.mode != SeedMode::Quenched) bad("seeds.mode", "stationary requires a quenched environment");
  const auto R = c.seeds.replicas;
  const std::size_t batch = R / static_cast<std::size_t>(p.batches);
  if (batch < 1000) bad("params.batches", "each batch needs at least 1000 replicas");
  const std::int64_t times[] = {p.T};
  const auto samples =
      sample_probe_counts(c.environment, c.seeds, StationaryPoisson{p.alpha, p.f_tolerance}, p.probes, times,
                          p.f_tolerance);

  Series mean_s{"mean_count", {}}, target_s{"alpha_f", {}};
  bool means_ok = true;
  double worst_z = 0.0;
  std::size_t tests = 0, rejections = 0;
  json probes = json::array();
  for (std::size_t k = 0; k < p.probes.size(); ++k) {
    const auto counts = samples.at(0, k);
    std::vector<double> xs(counts.begin(), counts.end());
    const auto m = mean_estimate(xs);
    const double target = p.alpha * samples.potential_at(0, k);
    const double z = m.std_error > 0.0 ? (m.mean - target) / m.std_error : 0.0;
    worst_z = std::max(worst_z, std::fabs(z));
    if (std::fabs(z) > p.mean_se) means_ok = false;
    std::size_t rej = 0;
    for (std::int64_t b = 0; b < p.batches; ++b) {
      const auto g = poisson_gof(counts.subspan(static_cast<std::size_t>(b) * batch, batch), target);
      ++tests;
      if (g.p_value < p.level) ++rej, ++rejections;
    }
    probes.push_back({{"site", p.probes[k]}, {"mean", m.mean}, {"std_error", m.std_error}, {"target", target},
                      {"z", z}, {"gof_rejections", rej}});
    const double h = kZ95 * m.std_error;
    mean_s.points.push_back({static_cast<double>(p.probes[k]), m.mean, m.mean - h, m.mean + h});
    target_s.points.push_back({static_cast<double>(p.probes[k]), target, target, target});
  }
  const double rate = static_cast<double>(rejections) / static_cast<double>(tests);
  r.estimates["probes"] = probes;
  r.estimates["gof_tests"] = tests;
  r.estimates["gof_rejection_rate"] = rate;
  r.verdicts.push_back(verdict("mean_matches_alpha_f", means_ok, worst_z,
                               "every probe mean within " + fmt(p.mean_se) + " SE of alpha f"));
  r.verdicts.push_back(verdict("gof_rejection_rate", std::fabs(rate - p.level) <= p.rate_band, rate,
                               std::to_string(rejections) + "/" + std::to_string(tests) + " rejections at level " +
                                   fmt(p.level) + ", need within " + fmt(p.rate_band)));
  r.series.push_back(std::move(mean_s));
  r.series.push_back(std::move(target_s));
}

void run_converge(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_converge(c.params);
  const auto inv = compute_invariants(c.environment);
  const double alpha = p.alpha ? *p.alpha : inv.speed * initial_law_mean(p.initial, c.environment);
  std::set<std::int64_t> all(p.monotone_times.begin(), p.monotone_times.end());
  all.insert(p.final_time);
  const std::vector<std::int64_t> times(all.begin(), all.end());
  const Site probes[] = {p.probe};
  const auto samples = sample_probe_counts(c.environment, c.seeds, p.initial, probes, times, p.f_tolerance);

  std::vector<double> lambdas(c.seeds.replicas);
  for (std::size_t i = 0; i < lambdas.size(); ++i) lambdas[i] = alpha * samples.potential_at(i, 0);

  std::map<std::int64_t, double> tv;
  Series s{"tv_distance", {}};
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto counts = samples.at(k, 0);
    const double d = c.seeds.mode == SeedMode::Quenched ? tv_distance_to_poisson(counts, lambdas.front())
                                                        : tv_distance_to_poisson_mixture(counts, lambdas);
    tv[times[k]] = d;
    s.points.push_back({static_cast<double>(times[k]), d, d, d});
  }
  json tvj = json::object();
  for (auto [t, d] : tv) tvj[std::to_string(t)] = d;
  r.estimates["alpha"] = alpha;
  r.estimates["tv"] = tvj;
  r.estimates["reference"] =
      c.seeds.mode == SeedMode::Quenched ? "Poisson(alpha f)" : "mixture over replicas of Poisson(alpha f)";

  bool mono = true;
  for (std::size_t k = 1; k < p.monotone_times.size(); ++k) {
    if (!(tv[p.monotone_times[k]] < tv[p.monotone_times[k - 1]])) mono = false;
  }
  r.verdicts.push_back(verdict("tv_decreasing", mono, tv[p.monotone_times.back()],
                               "TV strictly decreasing over the monotone times"));
  r.verdicts.push_back(verdict("tv_final", tv[p.final_time] < p.final_tv_max, tv[p.final_time],
                               "TV at t = " + std::to_string(p.final_time) + " below " + fmt(p.final_tv_max)));
  r.series.push_back(std::move(s));
}

// Exact structural checks on random small coupled systems: beta_plus and
// beta_minus never share a site, both marginals conserve mass, re-coupling
// the marginals returns the same decomposition, and a fully matched pair
// evolves exactly like evolve().
Verdict coupling_invariant_check(const EnvironmentSpec& spec, std::uint64_t seed, std::int64_t steps) {
  const Environment env(spec, derive_seed(seed, Domain::Environment, 0));
  const SiteRange w{0, 49};
  const auto eta = sample_initial(env, PoissonConstant{1.5}, w, derive_seed(seed, Domain::Config, 0));
  auto eta_c = Configuration(w, Extent::Complete);
  auto zeta_c = Configuration(w, Extent::Complete);
  const auto zeta = sample_initial(env, PoissonConstant{1.0}, w, derive_seed(seed, Domain::ConfigAlt, 0));
  for (Site x = w.lo; x <= w.hi; ++x) {
    eta_c.set(x, eta.at(x));
    zeta_c.set(x, zeta.at(x));
  }
  const std::uint64_t dyn = derive_seed(seed, Domain::Dynamics, 0);
  CoupledEvolver mixed(env, couple_initial(eta_c, zeta_c), dyn);
  CoupledEvolver matched(env, couple_initial(eta_c, eta_c), dyn);
  Evolver plain(env, eta_c, dyn);
  const auto eta_total = eta_c.total();
  const auto zeta_total = zeta_c.total();
  for (std::int64_t t = 0; t < steps; ++t) {
    mixed.step();
    matched.step();
    plain.step();
    const auto& cc = mixed.current();
    const auto e = cc.eta();
    const auto z = cc.zeta();
    if (!cc.complementary()) return verdict("coupling_invariants", false, static_cast<double>(t + 1), "complementarity broken");
    if (e.total() != eta_total || z.total() != zeta_total) {
      return verdict("coupling_invariants", false, static_cast<double>(t + 1), "marginal mass not conserved");
    }
    const auto again = couple_initial(e, z);
    if (again.xi() != cc.xi() || again.beta_plus() != cc.beta_plus() || again.beta_minus() != cc.beta_minus()) {
      return verdict("coupling_invariants", false, static_cast<double>(t + 1), "re-coupling the marginals differs");
    }
    const auto m = matched.current().eta();
    const auto& q = plain.current();
    for (Site x = std::min(m.window().lo, q.window().lo); x <= std::max(m.window().hi, q.window().hi); ++x) {
      if (m.at(x) != q.at(x)) {
        return verdict("coupling_invariants", false, static_cast<double>(t + 1),
                       "matched system departs from evolve()");
      }
    }
  }
  return verdict("coupling_invariants", true, static_cast<double>(steps),
                 "complementarity, marginal reconstruction and matched evolution exact for " + std::to_string(steps) +
                     " steps");
}

void run_couple(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_couple(c.params);
  const auto inv = compute_invariants(c.environment);
  const InitialLaw zeta = p.zeta ? *p.zeta : InitialLaw(StationaryPoisson{inv.speed * initial_law_mean(p.eta, c.environment)});
  if (c.seeds.replicas < 2) bad("seeds.replicas", "couple needs at least 2 replicas");
  r.estimates["eta_law"] = initial_law_to_json(p.eta);
  r.estimates["zeta_law"] = initial_law_to_json(zeta);

  if (p.invariant_steps > 0) {
    r.verdicts.push_back(coupling_invariant_check(c.environment, c.seeds.master_seed, p.invariant_steps));
  }

  const auto d = discrepancy_decay(c.environment, c.seeds, p.eta, zeta, p.observe, p.steps,
                                   DiscrepancyOptions{p.share_config_seed});
  Series plus{"beta_plus", {}}, minus{"beta_minus", {}}, diff{"difference", {}};
  std::int64_t violations = 0;
  double worst_step = -std::numeric_limits<double>::infinity();
  bool diff_ok = true;
  double worst_diff = 0.0;
  for (std::size_t t = 0; t < d.minus_density.size(); ++t) {
    const double x = static_cast<double>(t);
    plus.points.push_back({x, d.plus_density[t], d.plus_density[t] - 2 * d.plus_stderr[t],
                           d.plus_density[t] + 2 * d.plus_stderr[t]});
    minus.points.push_back({x, d.minus_density[t], d.minus_density[t] - 2 * d.minus_stderr[t],
                            d.minus_density[t] + 2 * d.minus_stderr[t]});
    diff.points.push_back({x, d.difference[t], d.difference[t] - 2 * d.difference_stderr[t],
                           d.difference[t] + 2 * d.difference_stderr[t]});
    if (t > 0) {
      const double rise = d.minus_density[t] - d.minus_density[t - 1];
      const double allowed = p.step_se * d.minus_stderr[t];
      worst_step = std::max(worst_step, rise - allowed);
      if (rise > allowed) ++violations;
      const double se = std::sqrt(d.difference_stderr[t] * d.difference_stderr[t] +
                                  d.difference_stderr[0] * d.difference_stderr[0]);
      const double gap = std::fabs(d.difference[t] - d.difference[0]);
      if (se > 0.0) worst_diff = std::max(worst_diff, gap / se);
      if (gap > p.difference_se * se) diff_ok = false;
    }
  }
  const double m0 = d.minus_density.front();
  const double mT = d.minus_density.back();
  const double reduction = m0 > 0.0 ? 1.0 - mT / m0 : 0.0;
  r.estimates["minus_density_initial"] = m0;
  r.estimates["minus_density_final"] = mT;
  r.estimates["minus_reduction"] = reduction;
  r.estimates["stepwise_violations"] = violations;
  r.verdicts.push_back(verdict("minus_non_increasing", violations == 0, worst_step,
                               std::to_string(violations) + " steps where beta_minus rose by more than " +
                                   fmt(p.step_se) + " SE"));
  r.verdicts.push_back(verdict("minus_reduction", reduction >= p.min_reduction, reduction,
                               "beta_minus density reduced by at least " + fmt(p.min_reduction)));
  r.verdicts.push_back(verdict("difference_constant", diff_ok, worst_diff,
                               "beta_plus - beta_minus within " + fmt(p.difference_se) + " SE of its initial value"));
  r.series.push_back(std::move(plus));
  r.series.push_back(std::move(minus));
  r.series.push_back(std::move(diff));
}

std::vector<double> hydro_run_errors(const HydroTransport& h) {
  std::vector<double> worst(h.errors.front().size(), 0.0);
  for (const auto& g : h.errors) {
    for (std::size_t i = 0; i < g.size(); ++i) worst[i] = std::max(worst[i], g[i]);
  }
  return worst;
}

void run_hydro(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_hydro(c.params);
  const auto h = hydro_transport_error(c.environment, p.profile, p.N, p.t, p.gs, c.seeds, p.synthesis);
  const auto worst = hydro_run_errors(h);
  std::size_t below = 0;
  for (double e : worst) below += e < p.threshold ? 1 : 0;
  const double frac = static_cast<double>(below) / static_cast<double>(worst.size());
  r.estimates["steps"] = h.steps;
  r.estimates["speed"] = h.speed;
  r.estimates["targets"] = h.targets;
  json per_g = json::array();
  for (std::size_t k = 0; k < p.gs.size(); ++k) {
    per_g.push_back({{"target", h.targets[k]}, {"mean_error", mean_json(h.mean_error[k])},
                     {"median_error", median(h.errors[k])}});
  }
  r.estimates["per_test_function"] = per_g;
  r.estimates["runs_below_threshold"] = below;
  r.verdicts.push_back(verdict("transport_error", frac >= p.pass_fraction, frac,
                               std::to_string(below) + "/" + std::to_string(worst.size()) +
                                   " runs with every test-function error below " + fmt(p.threshold)));
  Series runs{"run_error", {}};
  for (std::size_t i = 0; i < worst.size(); ++i) runs.points.push_back({static_cast<double>(i), worst[i], worst[i], worst[i]});
  r.series.push_back(std::move(runs));

  if (p.median_ns.size() >= 2) {
    Series med{"median_error", {}};
    std::vector<double> meds;
    for (auto n : p.median_ns) {
      const auto hn = hydro_transport_error(c.environment, p.profile, static_cast<double>(n), p.t, p.gs, c.seeds,
                                            p.synthesis);
      meds.push_back(median(hydro_run_errors(hn)));
      med.points.push_back({static_cast<double>(n), meds.back(), meds.back(), meds.back()});
    }
    bool dec = true;
    for (std::size_t k = 1; k < meds.size(); ++k) {
      if (!(meds[k] < meds[k - 1])) dec = false;
    }
    r.estimates["median_errors"] = meds;
    r.verdicts.push_back(verdict("median_error_decreasing", dec, meds.back(), "median run error strictly decreasing in N"));
    r.series.push_back(std::move(med));
  }
}

void run_meet(const ExperimentConfig& c, ExperimentReport& r) {
  const auto p = parse_meet(c.params);
  const Environment env(c.environment, c.seeds.env_seed(0));
  const auto m = meeting_experiment(env, p.y, p.z, p.horizon, c.seeds.replicas, c.seeds.walk_seed(0));
  r.estimates["met"] = m.met;
  r.estimates["fraction_met"] = m.fraction_met;
  r.estimates["histogram_log2"] = m.histogram;
  const auto ci = wilson_interval(m.met, c.seeds.replicas);
  r.estimates["fraction_ci"] = {ci.lower, ci.upper};
  r.verdicts.push_back(verdict("fraction_met", m.fraction_met >= p.fraction_min, m.fraction_met,
                               std::to_string(m.met) + "/" + std::to_string(c.seeds.replicas) +
                                   " met by the horizon, need >= " + fmt(p.fraction_min)));
  auto hs = p.checkpoints;
  std::sort(hs.begin(), hs.end());
  Series s{"fraction_met", {}};
  bool mono = true;
  double prev = -1.0;
  for (auto h : hs) {
    const double f = m.fraction_met_by(h);
    if (f < prev) mono = false;
    prev = f;
    const auto e = wilson_interval(static_cast<std::size_t>(std::llround(f * static_cast<double>(c.seeds.replicas))),
                                   c.seeds.replicas);
    s.points.push_back({static_cast<double>(h), f, e.lower, e.upper});
  }
  r.verdicts.push_back(verdict("fraction_non_decreasing", mono, prev, "fraction met non-decreasing in the horizon"));
  r.series.push_back(std::move(s));
}

using Runner = void (*)(const ExperimentConfig&, ExperimentReport&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table{
      {"invariants", run_invariants}, {"f-check", run_fcheck},   {"speed", run_speed},
      {"lln", run_lln},               {"slowdown", run_slowdown}, {"hitting", run_hitting},
      {"stationary", run_stationary}, {"converge", run_converge}, {"couple", run_couple},
      {"hydro", run_hydro},           {"meet", run_meet}};
  return table;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config blocks

EnvironmentSpec parse_environment(const json& j) {
  const std::string where = "environment";
  if (!j.is_object()) bad(where, "expected an object");
  const auto& law = need(j, where, "law");
  if (!law.is_string()) bad(where + ".law", "expected a string");
  const auto name = law.get<std::string>();
  std::optional<double> c;
  if (j.contains("c")) c = as_number(j["c"], where + ".c");
  try {
    if (name == "two_point") {
      check_keys(j, where, {"law", "low", "high", "prob_low", "c", "seed"});
      return EnvironmentSpec::two_point(as_number(need(j, where, "low"), where + ".low"),
                                        as_number(need(j, where, "high"), where + ".high"),
                                        as_number(need(j, where, "prob_low"), where + ".prob_low"), c);
    }
    if (name == "constant") {
      check_keys(j, where, {"law", "p", "c", "seed"});
      return EnvironmentSpec::constant(as_number(need(j, where, "p"), where + ".p"), c);
    }
    if (name == "discrete") {
      check_keys(j, where, {"law", "atoms", "c", "seed"});
      const auto& atoms = need(j, where, "atoms");
      if (!atoms.is_array()) bad(where + ".atoms", "expected an array");
      std::vector<Atom> out;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const std::string f = where + ".atoms[" + std::to_string(i) + "]";
        check_keys(atoms[i], f, {"omega", "prob"});
        out.push_back({as_number(need(atoms[i], f, "omega"), f + ".omega"),
                       as_number(need(atoms[i], f, "prob"), f + ".prob")});
      }
      return EnvironmentSpec::discrete(std::move(out), c);
    }
    if (name == "truncated") {
      check_keys(j, where, {"law", "base", "a", "b", "c", "seed"});
      const auto& base = need(j, where, "base");
      BaseDensity bd;
      if (base == "uniform") {
        bd = BaseDensity::Uniform;
      } else if (base == "beta") {
        bd = BaseDensity::Beta;
      } else {
        bad(where + ".base", "expected \"uniform\" or \"beta\"");
      }
      if (!c) bad(where + ".c", "required for truncated laws");
      return EnvironmentSpec::truncated(bd, as_number(need(j, where, "a"), where + ".a"),
                                        as_number(need(j, where, "b"), where + ".b"), *c);
    }
  } catch (const InvalidSpec& e) {
    bad(where, e.what());
  }
  bad(where + ".law", "unknown law \"" + name + "\" (two_point, constant, discrete, truncated)");
}

json environment_to_json(const EnvironmentSpec& spec) {
  json j;
  std::visit(
      [&](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, TwoPointLaw>) {
          j = {{"law", "two_point"}, {"low", law.low}, {"high", law.high}, {"prob_low", law.prob_low}};
        } else if constexpr (std::is_same_v<T, DiscreteLaw>) {
          if (law.atoms.size() == 1) {
            j = {{"law", "constant"}, {"p", law.atoms.front().omega}};
          } else {
            json atoms = json::array();
            for (const auto& a : law.atoms) atoms.push_back({{"omega", a.omega}, {"prob", a.prob}});
            j = {{"law", "discrete"}, {"atoms", atoms}};
          }
        } else {
          j = {{"law", "truncated"},
               {"base", law.base == BaseDensity::Uniform ? "uniform" : "beta"},
               {"a", law.a},
               {"b", law.b}};
        }
      },
      spec.law());
  j["c"] = spec.ellipticity();
  return j;
}

InitialLaw parse_initial_law(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  const auto& law = need(j, where, "law");
  if (!law.is_string()) bad(where + ".law", "expected a string");
  const auto name = law.get<std::string>();
  if (name == "deterministic") {
    check_keys(j, where, {"law", "count"});
    const auto n = as_integer(need(j, where, "count"), where + ".count");
    if (n < 0 || n > 1'000'000) bad(where + ".count", "must lie in [0, 1e6]");
    return DeterministicConstant{static_cast<std::uint32_t>(n)};
  }
  if (name == "poisson") {
    check_keys(j, where, {"law", "mean"});
    const double m = as_number(need(j, where, "mean"), where + ".mean");
    if (m < 0.0) bad(where + ".mean", "must be non-negative");
    return PoissonConstant{m};
  }
  if (name == "stationary") {
    check_keys(j, where, {"law", "alpha", "f_tolerance"});
    StationaryPoisson s;
    s.alpha = as_number(need(j, where, "alpha"), where + ".alpha");
    if (s.alpha < 0.0) bad(where + ".alpha", "must be non-negative");
    if (j.contains("f_tolerance")) s.f_tolerance = as_number(j["f_tolerance"], where + ".f_tolerance");
    return s;
  }
  if (name == "quantile") {
    check_keys(j, where, {"law", "table", "support_cap"});
    const auto& table = need(j, where, "table");
    if (!table.is_array() || table.empty()) bad(where + ".table", "expected a non-empty array");
    std::vector<QuantileEntry> entries;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const std::string f = where + ".table[" + std::to_string(i) + "]";
      check_keys(table[i], f, {"omega", "pmf"});
      QuantileEntry e;
      e.omega = as_number(need(table[i], f, "omega"), f + ".omega");
      const auto& pmf = need(table[i], f, "pmf");
      if (!pmf.is_array() || pmf.empty()) bad(f + ".pmf", "expected a non-empty array");
      for (std::size_t k = 0; k < pmf.size(); ++k) e.pmf.push_back(as_number(pmf[k], f + ".pmf"));
      entries.push_back(std::move(e));
    }
    std::size_t cap = 64;
    if (j.contains("support_cap")) cap = static_cast<std::size_t>(std::max<std::int64_t>(1, as_integer(j["support_cap"], where + ".support_cap")));
    try {
      return QuantileProduct::make(std::move(entries), cap);
    } catch (const std::exception& e) {
      bad(where, e.what());
    }
  }
  bad(where + ".law", "unknown initial law \"" + name + "\" (deterministic, poisson, stationary, quantile)");
}

json initial_law_to_json(const InitialLaw& law) {
  return std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, DeterministicConstant>) {
          return {{"law", "deterministic"}, {"count", l.count}};
        } else if constexpr (std::is_same_v<T, PoissonConstant>) {
          return {{"law", "poisson"}, {"mean", l.mean}};
        } else if constexpr (std::is_same_v<T, StationaryPoisson>) {
          return {{"law", "stationary"}, {"alpha", l.alpha}, {"f_tolerance", l.f_tolerance}};
        } else {
          json table = json::array();
          for (const auto& e : l.table) table.push_back({{"omega", e.omega}, {"pmf", e.pmf}});
          return {{"law", "quantile"}, {"table", table}, {"support_cap", l.support_cap}};
        }
      },
      law);
}

Profile parse_profile(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  const auto& kind = need(j, where, "kind");
  try {
    if (kind == "indicator") {
      check_keys(j, where, {"kind", "a", "b", "height"});
      return Profile::indicator(as_number(need(j, where, "a"), where + ".a"),
                                as_number(need(j, where, "b"), where + ".b"),
                                j.contains("height") ? as_number(j["height"], where + ".height") : 1.0);
    }
    if (kind == "piecewise_linear") {
      check_keys(j, where, {"kind", "knots"});
      const auto& knots = need(j, where, "knots");
      if (!knots.is_array()) bad(where + ".knots", "expected an array of [x, y] pairs");
      PiecewiseLinearProfile p;
      for (const auto& k : knots) {
        if (!k.is_array() || k.size() != 2) bad(where + ".knots", "expected [x, y] pairs");
        p.knots.push_back({as_number(k[0], where + ".knots"), as_number(k[1], where + ".knots")});
      }
      return Profile(std::move(p));
    }
  } catch (const std::invalid_argument& e) {
    bad(where, e.what());
  }
  bad(where + ".kind", "expected \"indicator\" or \"piecewise_linear\"");
}

TestFunction parse_test_function(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  const auto& kind = need(j, where, "kind");
  try {
    if (kind == "triangle") {
      check_keys(j, where, {"kind", "lo", "hi", "height"});
      return TestFunction::triangle(as_number(need(j, where, "lo"), where + ".lo"),
                                    as_number(need(j, where, "hi"), where + ".hi"),
                                    j.contains("height") ? as_number(j["height"], where + ".height") : 1.0);
    }
    if (kind == "bump") {
      check_keys(j, where, {"kind", "center", "radius", "height"});
      return TestFunction(BumpFunction{as_number(need(j, where, "center"), where + ".center"),
                                       as_number(need(j, where, "radius"), where + ".radius"),
                                       j.contains("height") ? as_number(j["height"], where + ".height") : 1.0});
    }
    if (kind == "zero") {
      check_keys(j, where, {"kind", "lo", "hi"});
      return TestFunction(ZeroFunction{as_number(need(j, where, "lo"), where + ".lo"),
                                       as_number(need(j, where, "hi"), where + ".hi")});
    }
  } catch (const std::invalid_argument& e) {
    bad(where, e.what());
  }
  bad(where + ".kind", "expected \"triangle\", \"bump\" or \"zero\"");
}

ExperimentConfig parse_config(const json& j, std::string default_name) {
  check_keys(j, "config", {"name", "kind", "environment", "seeds", "params", "limits", "output"});
  ExperimentConfig c;
  c.name = std::move(default_name);
  if (j.contains("name")) {
    if (!j["name"].is_string()) bad("name", "expected a string");
    c.name = j["name"].get<std::string>();
  }
  if (!j.contains("kind")) bad("kind", "missing required field");
  if (!j["kind"].is_string()) bad("kind", "expected a string");
  c.kind = j["kind"].get<std::string>();
  if (!runners().contains(c.kind)) {
    std::string all;
    for (const auto& k : experiment_kinds()) all += (all.empty() ? "" : ", ") + k;
    bad("kind", "unknown experiment kind \"" + c.kind + "\" (expected one of " + all + ")");
  }

  const auto& env = need(j, "config", "environment");
  c.environment = parse_environment(env);

  const auto& seeds = need(j, "config", "seeds");
  check_keys(seeds, "seeds", {"master", "mode", "replicas"});
  c.seeds.master_seed = as_seed(need(seeds, "seeds", "master"), "seeds.master");
  if (seeds.contains("mode")) {
    if (!seeds["mode"].is_string()) bad("seeds.mode", "expected a string");
    try {
      c.seeds.mode = seed_mode_from_string(seeds["mode"].get<std::string>());
    } catch (const ConfigError& e) {
      bad("seeds.mode", e.what());
    }
  }
  if (seeds.contains("replicas")) {
    const auto n = as_integer(seeds["replicas"], "seeds.replicas");
    if (n < 1) bad("seeds.replicas", "must be at least 1");
    c.seeds.replicas = static_cast<std::size_t>(n);
  }
  if (env.contains("seed")) c.seeds.fixed_env_seed = as_seed(env["seed"], "environment.seed");

  if (j.contains("params")) c.params = j["params"];
  if (!c.params.is_object()) bad("params", "expected an object");

  if (j.contains("limits")) {
    check_keys(j["limits"], "limits", {"max_site_steps"});
    if (j["limits"].contains("max_site_steps")) {
      c.max_site_steps = as_number(j["limits"]["max_site_steps"], "limits.max_site_steps");
      if (!(c.max_site_steps > 0.0)) bad("limits.max_site_steps", "must be positive");
    }
  }
  if (j.contains("output")) {
    check_keys(j["output"], "output", {"report", "series"});
    for (const char* key : {"report", "series"}) {
      if (!j["output"].contains(key)) continue;
      if (!j["output"][key].is_string()) bad(std::string("output.") + key, "expected a path string");
      (std::string(key) == "report" ? c.output.report : c.output.series) = j["output"][key].get<std::string>();
    }
  }
  validate_params(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.stem().string());
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["kind"] = c.kind;
  j["environment"] = environment_to_json(c.environment);
  if (c.seeds.fixed_env_seed) j["environment"]["seed"] = *c.seeds.fixed_env_seed;
  j["seeds"] = {{"master", c.seeds.master_seed},
                {"mode", std::string(to_string(c.seeds.mode))},
                {"replicas", c.seeds.replicas},
                {"environment_seed_replica0", c.seeds.env_seed(0)}};
  j["params"] = c.params;
  j["limits"] = {{"max_site_steps", c.max_site_steps}};
  json out = json::object();
  if (c.output.report) out["report"] = c.output.report->generic_string();
  if (c.output.series) out["series"] = c.output.series->generic_string();
  j["output"] = out;
  return j;
}

double estimate_work(const ExperimentConfig& c) {
  const double R = static_cast<double>(c.seeds.replicas);
  const auto& k = c.kind;
  if (k == "invariants") {
    const auto p = parse_invariants(c.params);
    return static_cast<double>(p.f_window.size());
  }
  if (k == "f-check") {
    const auto p = parse_fcheck(c.params);
    return static_cast<double>(p.window.size()) + (p.mean_window ? static_cast<double>(p.mean_window->size()) : 0.0);
  }
  if (k == "speed") return R * static_cast<double>(parse_speed(c.params).n);
  if (k == "lln") {
    const auto p = parse_lln(c.params);
    const double n = static_cast<double>(p.n);
    return R * (p.B - p.A) * n * static_cast<double>(p.m) * n;
  }
  if (k == "slowdown") {
    const auto p = parse_slowdown(c.params);
    return R * static_cast<double>(*std::max_element(p.ns.begin(), p.ns.end()));
  }
  if (k == "hitting") {
    const auto p = parse_hitting(c.params);
    double w = 0.0;
    for (auto n : p.ns) w += std::ceil(static_cast<double>(n) * p.mu);
    return R * static_cast<double>(p.starts.size()) * w;
  }
  if (k == "stationary") {
    const auto p = parse_stationary(c.params);
    return probe_sampling_work(p.probes, p.T, c.seeds.replicas);
  }
  if (k == "converge") {
    const auto p = parse_converge(c.params);
    std::int64_t T = p.final_time;
    for (auto t : p.monotone_times) T = std::max(T, t);
    const Site probes[] = {p.probe};
    return probe_sampling_work(probes, T, c.seeds.replicas);
  }
  if (k == "couple") {
    const auto p = parse_couple(c.params);
    const double T = static_cast<double>(p.steps);
    return 3.0 * R * (static_cast<double>(p.observe.size()) * T + T * T) +
           static_cast<double>(p.invariant_steps) * (50.0 + 2.0 * static_cast<double>(p.invariant_steps));
  }
  if (k == "hydro") {
    const auto p = parse_hydro(c.params);
    const auto [lo, hi] = p.profile.support();
    auto one = [&](double N) {
      const double steps = std::floor(N * p.t);
      return R * (N * (hi - lo) + steps) * steps;
    };
    double w = one(p.N);
    for (auto n : p.median_ns) w += one(static_cast<double>(n));
    return w;
  }
  if (k == "meet") return 2.0 * R * static_cast<double>(parse_meet(c.params).horizon);
  return 0.0;
}

ExperimentReport run(const ExperimentConfig& config) {
  const double work = estimate_work(config);
  if (work > config.max_site_steps) {
    throw ResourceCap("experiment '" + config.name + "' needs about " + fmt(work) +
                      " site-steps, above limits.max_site_steps = " + fmt(config.max_site_steps));
  }
  ExperimentReport r;
  r.name = config.name;
  r.kind = config.kind;
  r.config = config_to_json(config);
  r.tool_version = std::string(tool_version());
  r.started_at = timestamp_utc();
  r.estimates["environment"] = config.environment.describe();
  r.estimates["estimated_work"] = work;
  const auto t0 = std::chrono::steady_clock::now();
  runners().at(config.kind)(config, r);
  r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void persist(const ExperimentConfig& config, const ExperimentReport& report) {
  if (config.output.report) write_report(report, *config.output.report);
  if (config.output.series) emit_plot_data(report, *config.output.series);
}

}  // namespace rwre
