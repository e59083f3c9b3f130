#include "rwre/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "rwre/errors.hpp"

namespace rwre {

namespace fs = std::filesystem;
using nlohmann::json;

bool ExperimentReport::passed() const noexcept {
  for (const auto& v : verdicts) {
    if (!v.passed) return false;
  }
  return true;
}

const Series* ExperimentReport::find_series(const std::string& n) const noexcept {
  for (const auto& s : series) {
    if (s.name == n) return &s;
  }
  return nullptr;
}

json report_to_json(const ExperimentReport& r) {
  json j;
  j["name"] = r.name;
  j["kind"] = r.kind;
  j["tool_version"] = r.tool_version;
  j["config"] = r.config;
  j["estimates"] = r.estimates;
  json verdicts = json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back({{"name", v.name}, {"passed", v.passed}, {"value", v.value}, {"detail", v.detail}});
  }
  j["verdicts"] = verdicts;
  j["passed"] = r.passed();
  json series = json::array();
  for (const auto& s : r.series) {
    json pts = json::array();
    for (const auto& p : s.points) pts.push_back({p.x, p.y, p.lo, p.hi});
    series.push_back({{"name", s.name}, {"columns", {"x", "y", "lo", "hi"}}, {"points", pts}});
  }
  j["series"] = series;
  j["notes"] = r.notes;
  j["timing"] = {{"wall_clock_seconds", r.wall_clock_seconds}, {"started_at", r.started_at}};
  return j;
}

ExperimentReport report_from_json(const json& j) {
  ExperimentReport r;
  try {
    r.name = j.at("name").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.tool_version = j.value("tool_version", "");
    r.config = j.value("config", json::object());
    r.estimates = j.value("estimates", json::object());
    for (const auto& v : j.value("verdicts", json::array())) {
      r.verdicts.push_back({v.at("name").get<std::string>(), v.at("passed").get<bool>(),
                            v.at("value").is_null() ? std::nan("") : v.at("value").get<double>(),
                            v.value("detail", "")});
    }
    for (const auto& s : j.value("series", json::array())) {
      Series out{s.at("name").get<std::string>(), {}};
      for (const auto& p : s.at("points")) {
        auto num = [&](std::size_t i) { return p.at(i).is_null() ? std::nan("") : p.at(i).get<double>(); };
        out.points.push_back({num(0), num(1), num(2), num(3)});
      }
      r.series.push_back(std::move(out));
    }
    r.notes = j.value("notes", std::vector<std::string>{});
    if (j.contains("timing")) {
      r.wall_clock_seconds = j["timing"].value("wall_clock_seconds", 0.0);
      r.started_at = j["timing"].value("started_at", "");
    }
  } catch (const json::exception& e) {
    throw IOError(std::string("malformed report: ") + e.what());
  }
  return r;
}

json strip_timing(json j) {
  j.erase("timing");
  return j;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IOError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw IOError("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IOError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_report(const ExperimentReport& report, const fs::path& path) {
  write_file_atomic(path, report_to_json(report).dump(2) + "\n");
}

ExperimentReport read_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open report " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IOError("cannot parse report " + path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string plot_data_csv(const ExperimentReport& report) {
  if (report.series.empty()) throw IOError("report '" + report.name + "' has no series to plot");
  std::ostringstream os;
  os << "series,x,y,lo,hi\n";
  for (const auto& s : report.series) {
    for (const auto& p : s.points) {
      os << s.name << ',' << format_number(p.x) << ',' << format_number(p.y) << ',' << format_number(p.lo) << ','
         << format_number(p.hi) << '\n';
    }
  }
  return os.str();
}

void emit_plot_data(const ExperimentReport& report, const fs::path& path) {
  write_file_atomic(path, plot_data_csv(report));
}

}  // namespace rwre
