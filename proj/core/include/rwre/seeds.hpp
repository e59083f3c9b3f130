#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rwre {

/// Quenched: one environment shared by every replica. Averaged: a fresh
/// environment per replica.
enum class SeedMode { Quenched, Averaged };

std::string_view to_string(SeedMode mode) noexcept;
SeedMode seed_mode_from_string(std::string_view name);

/// Splits a master seed into per-replica (env, config, dyn, walk) seeds.
///
/// Each child is derive_seed(master, Replica, r) further derived by purpose,
/// so the two modes differ only in which environment seed a replica sees.
struct SeedPolicy {
  SeedMode mode = SeedMode::Quenched;
  std::uint64_t master_seed = 0;
  std::size_t replicas = 1;
  /// Quenched environment seed; derived from the master seed when absent.
  std::optional<std::uint64_t> fixed_env_seed;

  std::uint64_t replica_seed(std::size_t r) const noexcept;
  std::uint64_t env_seed(std::size_t r) const noexcept;
  std::uint64_t config_seed(std::size_t r) const noexcept;
  std::uint64_t alt_config_seed(std::size_t r) const noexcept;
  std::uint64_t dyn_seed(std::size_t r) const noexcept;
  std::uint64_t walk_seed(std::size_t r, std::uint64_t particle = 0) const noexcept;
};

}  // namespace rwre
