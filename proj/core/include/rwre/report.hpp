#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rwre {

struct Verdict {
  std::string name;
  bool passed = false;
  /// The statistic the verdict was decided on.
  double value = 0.0;
  std::string detail;
};

struct SeriesPoint {
  double x = 0.0;
  double y = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct Series {
  std::string name;
  std::vector<SeriesPoint> points;
};

struct ExperimentReport {
  std::string name;
  std::string kind;
  /// Normalised config, including resolved defaults and derived seeds.
  nlohmann::json config;
  std::string tool_version;
  double wall_clock_seconds = 0.0;
  std::string started_at;
  nlohmann::json estimates = nlohmann::json::object();
  std::vector<Verdict> verdicts;
  std::vector<Series> series;
  std::vector<std::string> notes;

  bool passed() const noexcept;
  const Series* find_series(const std::string& name) const noexcept;
};

/// Timing fields live under the "timing" key; everything else is a pure
/// function of the config.
nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
nlohmann::json strip_timing(nlohmann::json j);

/// Writes to a temporary sibling, then renames over the destination.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

void write_report(const ExperimentReport& report, const std::filesystem::path& path);
ExperimentReport read_report(const std::filesystem::path& path);

/// Long-format CSV: header "series,x,y,lo,hi", then every point of every
/// series in report order. Throws IOError without creating the file when the
/// report has no series.
std::string plot_data_csv(const ExperimentReport& report);
void emit_plot_data(const ExperimentReport& report, const std::filesystem::path& path);

std::string format_number(double v);

}  // namespace rwre
