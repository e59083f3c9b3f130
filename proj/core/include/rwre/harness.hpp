#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwre/environment.hpp"
#include "rwre/functions.hpp"
#include "rwre/particle_system.hpp"
#include "rwre/report.hpp"
#include "rwre/seeds.hpp"

namespace rwre {

inline constexpr double kDefaultMaxSiteSteps = 1e9;

std::string_view tool_version() noexcept;

/// Experiment kinds accepted in the "kind" field.
const std::vector<std::string>& experiment_kinds();

struct OutputPaths {
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> series;
};

/// One experiment, parsed from a JSON document:
///
///   { "name": ..., "kind": ...,
///     "environment": { "law": ..., <law fields>, "c": ..., "seed": ... },
///     "seeds": { "master": ..., "mode": "quenched"|"averaged", "replicas": ... },
///     "params": { ... },
///     "limits": { "max_site_steps": ... },
///     "output": { "report": ..., "series": ... } }
struct ExperimentConfig {
  std::string name;
  std::string kind;
  EnvironmentSpec environment = EnvironmentSpec::constant(0.75);
  SeedPolicy seeds;
  nlohmann::json params = nlohmann::json::object();
  double max_site_steps = kDefaultMaxSiteSteps;
  OutputPaths output;
};

/// Throws ConfigError naming the offending field. Nothing is simulated.
ExperimentConfig parse_config(const nlohmann::json& j, std::string default_name = "experiment");
ExperimentConfig load_config(const std::filesystem::path& path);

EnvironmentSpec parse_environment(const nlohmann::json& j);
nlohmann::json environment_to_json(const EnvironmentSpec& spec);
InitialLaw parse_initial_law(const nlohmann::json& j, const std::string& field);
nlohmann::json initial_law_to_json(const InitialLaw& law);
Profile parse_profile(const nlohmann::json& j, const std::string& field);
TestFunction parse_test_function(const nlohmann::json& j, const std::string& field);

/// Normalised echo of the config with every default filled in.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Upper estimate of the site-steps (walk steps or occupied-site updates)
/// the experiment will process.
double estimate_work(const ExperimentConfig& config);

/// Runs the experiment. Throws ResourceCap when estimate_work exceeds the
/// configured cap, and propagates AssumptionViolation from the model.
ExperimentReport run(const ExperimentConfig& config);

/// Writes the report and series files named in config.output (if any).
void persist(const ExperimentConfig& config, const ExperimentReport& report);

}  // namespace rwre
