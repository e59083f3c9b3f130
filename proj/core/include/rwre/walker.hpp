#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/seeds.hpp"
#include "rwre/site.hpp"

namespace rwre {

struct WalkOptions {
  bool record_path = false;
};

struct WalkResult {
  Site start = 0;
  std::int64_t steps = 0;
  Site final_position = 0;
  Site min_position = 0;
  /// Deepest excursion below the starting site, start - min_position.
  std::int64_t max_backtrack = 0;
  /// Positions after each step (steps + 1 entries) when requested.
  std::vector<Site> path;
};

/// Quenched nearest-neighbour walk. Step k uses word k of the stream keyed
/// on walk_seed, so the trajectory depends only on (env, start, walk_seed)
/// and a longer walk extends a shorter one with the same seed.
WalkResult run_walk(const Environment& env, Site start, std::int64_t steps, std::uint64_t walk_seed,
                    WalkOptions options = {});

/// Same as above, reusing an already materialised window of the environment.
WalkResult run_walk(EnvironmentWindow& window, Site start, std::int64_t steps, std::uint64_t walk_seed,
                    WalkOptions options = {});

/// Final positions only, one walk per (start, seed) pair; the hot loop of
/// the family estimators.
void final_positions(EnvironmentWindow& window, std::span<const Site> starts,
                     std::span<const std::uint64_t> seeds, std::int64_t steps, std::span<Site> out);

enum class HitOutcome { Hit, Censored };

struct HittingResult {
  Site start = 0;
  std::int64_t distance = 0;
  HitOutcome outcome = HitOutcome::Censored;
  /// Hitting time when outcome == Hit, the cap otherwise.
  std::int64_t time = 0;

  bool hit() const noexcept { return outcome == HitOutcome::Hit; }
};

/// First time the walk from `start` reaches start + distance, or Censored
/// after `cap` steps. Uses the same variate stream as run_walk.
HittingResult hitting_time(const Environment& env, Site start, std::int64_t distance, std::int64_t cap,
                           std::uint64_t walk_seed);
HittingResult hitting_time(EnvironmentWindow& window, Site start, std::int64_t distance, std::int64_t cap,
                           std::uint64_t walk_seed);

struct BacktrackTail {
  std::size_t samples = 0;
  /// tail[k] = fraction of walks with max_backtrack >= k, k = 0..max_k.
  std::vector<double> tail;
  std::vector<double> std_error;
};

/// Empirical tail of max_backtrack over replicas x starts, with environments
/// drawn according to the policy (one per replica when averaged).
BacktrackTail backtrack_tail(const EnvironmentSpec& spec, const SeedPolicy& policy, std::span<const Site> starts,
                             std::int64_t horizon, std::int64_t max_k);

}  // namespace rwre
