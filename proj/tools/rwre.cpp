// rwre: run, validate and plot declarative experiments.
//
// Exit codes: 0 every verdict passed, 1 some verdict failed, 2 config or
// runtime error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rwre/errors.hpp"
#include "rwre/harness.hpp"
#include "rwre/report.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kError = 2;

std::vector<fs::path> collect_configs(const fs::path& target) {
  if (!fs::is_directory(target)) return {target};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(target)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw rwre::ConfigError(target.string() + ": no .json configs in directory");
  return out;
}

void print_report(const rwre::ExperimentReport& r) {
  std::cout << r.name << " (" << r.kind << "): " << (r.passed() ? "PASS" : "FAIL") << "  [" << r.wall_clock_seconds
            << " s]\n";
  for (const auto& v : r.verdicts) {
    std::cout << "  " << (v.passed ? "pass " : "FAIL ") << v.name << " = " << rwre::format_number(v.value) << "  "
              << v.detail << '\n';
  }
}

int cmd_run(const std::string& target, const std::string& out_dir) {
  int status = kPass;
  std::vector<fs::path> configs;
  try {
    configs = collect_configs(target);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  for (const auto& path : configs) {
    try {
      auto config = rwre::load_config(path);
      if (!out_dir.empty()) {
        if (!config.output.report) config.output.report = fs::path(out_dir) / (config.name + ".json");
        if (!config.output.series) config.output.series = fs::path(out_dir) / (config.name + ".csv");
      }
      const auto report = rwre::run(config);
      if (config.output.series && report.series.empty()) config.output.series.reset();
      rwre::persist(config, report);
      print_report(report);
      if (!report.passed()) status = std::max(status, kFail);
    } catch (const std::exception& e) {
      std::cerr << path.string() << ": " << rwre::error_name(e) << ": " << e.what() << '\n';
      status = kError;
    }
  }
  return status;
}

int cmd_validate(const std::string& target) {
  int status = kPass;
  std::vector<fs::path> configs;
  try {
    configs = collect_configs(target);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  for (const auto& path : configs) {
    try {
      const auto config = rwre::load_config(path);
      const double work = rwre::estimate_work(config);
      std::cout << path.string() << ": ok (" << config.kind << ", ~" << work << " site-steps";
      if (work > config.max_site_steps) {
        std::cout << ", over the cap of " << config.max_site_steps << ")\n";
        status = kError;
      } else {
        std::cout << ")\n";
      }
    } catch (const std::exception& e) {
      std::cerr << path.string() << ": " << e.what() << '\n';
      status = kError;
    }
  }
  return status;
}

int cmd_plot(const std::string& report_path, std::string out) {
  try {
    const auto report = rwre::read_report(report_path);
    if (out.empty()) out = fs::path(report_path).replace_extension(".csv").string();
    rwre::emit_plot_data(report, out);
    std::cout << out << '\n';
    return kPass;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walks in random environments: experiment runner"};
  app.set_version_flag("--version", std::string(rwre::tool_version()));
  app.require_subcommand(1);

  int workers = 0;
  app.add_option("-j,--workers", workers, "Worker threads (overrides RWRE_WORKERS)")->check(CLI::PositiveNumber);

  std::string target, out_dir, report, plot_out;

  auto* run = app.add_subcommand("run", "Run a config file, or every .json config in a directory");
  run->add_option("config", target, "Config file or directory")->required();
  run->add_option("-o,--out-dir", out_dir, "Directory for reports of configs without an output block");

  auto* validate = app.add_subcommand("validate", "Check configs without running them");
  validate->add_option("config", target, "Config file or directory")->required();

  auto* plot = app.add_subcommand("plot", "Write long-format plot data for a report");
  plot->add_option("report", report, "Report JSON")->required();
  plot->add_option("-o,--output", plot_out, "CSV path (default: report path with .csv)");

  auto* kinds = app.add_subcommand("kinds", "List experiment kinds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kError;
  }

  if (workers > 0) setenv("RWRE_WORKERS", std::to_string(workers).c_str(), 1);

  if (*run) return cmd_run(target, out_dir);
  if (*validate) return cmd_validate(target);
  if (*plot) return cmd_plot(report, plot_out);
  if (*kinds) {
    for (const auto& k : rwre::experiment_kinds()) std::cout << k << '\n';
    return kPass;
  }
  return kError;
}
