#include "rwre/seeds.hpp"

#include "rwre/errors.hpp"
#include "rwre/random.hpp"

namespace rwre {

std::string_view to_string(SeedMode mode) noexcept {
  return mode == SeedMode::Quenched ? "quenched" : "averaged";
}

SeedMode seed_mode_from_string(std::string_view name) {
  if (name == "quenched") return SeedMode::Quenched;
  if (name == "averaged") return SeedMode::Averaged;
  throw ConfigError("seeds.mode: expected 'quenched' or 'averaged', got '" + std::string(name) + "'");
}

std::uint64_t SeedPolicy::replica_seed(std::size_t r) const noexcept {
  return derive_seed(master_seed, Domain::Replica, r);
}

std::uint64_t SeedPolicy::env_seed(std::size_t r) const noexcept {
  if (mode == SeedMode::Quenched) {
    return fixed_env_seed ? *fixed_env_seed : derive_seed(master_seed, Domain::Environment, 0);
  }
  return derive_seed(replica_seed(r), Domain::Environment, 0);
}

std::uint64_t SeedPolicy::config_seed(std::size_t r) const noexcept {
  return derive_seed(replica_seed(r), Domain::Config, 0);
}

std::uint64_t SeedPolicy::alt_config_seed(std::size_t r) const noexcept {
  return derive_seed(replica_seed(r), Domain::ConfigAlt, 0);
}

std::uint64_t SeedPolicy::dyn_seed(std::size_t r) const noexcept {
  return derive_seed(replica_seed(r), Domain::Dynamics, 0);
}

std::uint64_t SeedPolicy::walk_seed(std::size_t r, std::uint64_t particle) const noexcept {
  return derive_seed(replica_seed(r), Domain::Walk, particle);
}

}  // namespace rwre
