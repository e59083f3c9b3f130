#include "rwre/walker.hpp"

#include <algorithm>
#include <cmath>

#include "rwre/errors.hpp"
#include "rwre/parallel.hpp"
#include "rwre/random.hpp"

namespace rwre {

namespace {

// Walks in blocks of four steps (one Philox block each), extending the
// window ahead of the walker so the inner loop reads thresholds unchecked.
// `visit(step, position)` returns false to stop early.
template <class Visit>
std::int64_t walk_blocks(EnvironmentWindow& window, Site& pos, std::int64_t steps, std::uint64_t walk_seed,
                         Visit&& visit) {
  Stream stream(walk_seed, Domain::Walk, 0);
  std::int64_t done = 0;
  std::uint32_t block = 0;
  while (done < steps) {
    window.ensure({pos - 4, pos + 4});
    const auto words = stream.block_at(block++);
    const int todo = static_cast<int>(std::min<std::int64_t>(4, steps - done));
    for (int k = 0; k < todo; ++k) {
      pos += words[k] < *window.threshold_data(pos) ? 1 : -1;
      ++done;
      if (!visit(done, pos)) return done;
    }
  }
  return done;
}

}  // namespace

WalkResult run_walk(EnvironmentWindow& window, Site start, std::int64_t steps, std::uint64_t walk_seed,
                    WalkOptions options) {
  if (steps < 0) throw std::invalid_argument("run_walk: negative step count");
  WalkResult r;
  r.start = start;
  r.steps = steps;
  Site pos = start;
  Site lowest = start;
  if (options.record_path) {
    r.path.reserve(static_cast<std::size_t>(steps) + 1);
    r.path.push_back(start);
  }
  walk_blocks(window, pos, steps, walk_seed, [&](std::int64_t, Site p) {
    lowest = std::min(lowest, p);
    if (options.record_path) r.path.push_back(p);
    return true;
  });
  r.final_position = pos;
  r.min_position = lowest;
  r.max_backtrack = start - lowest;
  return r;
}

WalkResult run_walk(const Environment& env, Site start, std::int64_t steps, std::uint64_t walk_seed,
                    WalkOptions options) {
  EnvironmentWindow window(env, {start - 64, start + 64});
  return run_walk(window, start, steps, walk_seed, options);
}

void final_positions(EnvironmentWindow& window, std::span<const Site> starts,
                     std::span<const std::uint64_t> seeds, std::int64_t steps, std::span<Site> out) {
  // Eight walks in lock step: their Philox blocks come from one vectorised
  // call and their dependency chains through the threshold loads overlap.
  constexpr std::size_t kLanes = 8;
  const std::size_t n = starts.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    Site pos[kLanes];
    PhiloxKeys keys;
    for (std::size_t l = 0; l < kLanes; ++l) {
      pos[l] = starts[i + l];
      const auto k = key_of(seeds[i + l]);
      keys[0][l] = k[0];
      keys[1][l] = k[1];
    }
    std::int64_t done = 0;
    std::uint32_t block = 0;
    while (done < steps) {
      // Two blocks per lane per round trip: each lane moves at most 8, and
      // the window must cover all lanes.
      window.ensure({*std::min_element(pos, pos + kLanes) - 8, *std::max_element(pos, pos + kLanes) + 8});
      PhiloxLanes first, second;
      first[0].fill(block);
      second[0].fill(block + 1);
      first[1].fill(static_cast<std::uint32_t>(Domain::Walk));
      second[1] = first[1];
      first[2].fill(0);
      first[3].fill(0);
      second[2] = first[2];
      second[3] = first[3];
      philox_x8x2(first, second, keys);
      block += 2;
      const int todo = static_cast<int>(std::min<std::int64_t>(8, steps - done));
      for (int k = 0; k < todo; ++k) {
        const auto& words = k < 4 ? first[static_cast<std::size_t>(k)] : second[static_cast<std::size_t>(k - 4)];
        for (std::size_t l = 0; l < kLanes; ++l) {
          pos[l] += words[l] < *window.threshold_data(pos[l]) ? 1 : -1;
        }
      }
      done += todo;
    }
    for (std::size_t l = 0; l < kLanes; ++l) out[i + l] = pos[l];
  }
  for (; i < n; ++i) {
    Site pos = starts[i];
    walk_blocks(window, pos, steps, seeds[i], [](std::int64_t, Site) { return true; });
    out[i] = pos;
  }
}

HittingResult hitting_time(EnvironmentWindow& window, Site start, std::int64_t distance, std::int64_t cap,
                           std::uint64_t walk_seed) {
  if (distance < 1) throw std::invalid_argument("hitting_time: distance must be >= 1");
  if (cap < distance) throw std::invalid_argument("hitting_time: cap must be >= distance");
  HittingResult r;
  r.start = start;
  r.distance = distance;
  const Site target = start + distance;
  Site pos = start;
  std::int64_t when = -1;
  walk_blocks(window, pos, cap, walk_seed, [&](std::int64_t step, Site p) {
    if (p == target) {
      when = step;
      return false;
    }
    return true;
  });
  if (when >= 0) {
    r.outcome = HitOutcome::Hit;
    r.time = when;
  } else {
    r.outcome = HitOutcome::Censored;
    r.time = cap;
  }
  return r;
}

HittingResult hitting_time(const Environment& env, Site start, std::int64_t distance, std::int64_t cap,
                           std::uint64_t walk_seed) {
  EnvironmentWindow window(env, {start - 64, start + distance + 64});
  return hitting_time(window, start, distance, cap, walk_seed);
}

BacktrackTail backtrack_tail(const EnvironmentSpec& spec, const SeedPolicy& policy, std::span<const Site> starts,
                             std::int64_t horizon, std::int64_t max_k) {
  if (policy.replicas < 1) throw std::invalid_argument("backtrack_tail: need at least one replica");
  if (max_k < 0) throw std::invalid_argument("backtrack_tail: max_k must be >= 0");
  auto per_replica = map_replicas(policy.replicas, [&](std::size_t r) {
    Environment env(spec, policy.env_seed(r));
    EnvironmentWindow window(env);
    std::vector<std::int64_t> depth(starts.size());
    for (std::size_t j = 0; j < starts.size(); ++j) {
      depth[j] = run_walk(window, starts[j], horizon, policy.walk_seed(r, j)).max_backtrack;
    }
    return depth;
  });

  BacktrackTail out;
  out.samples = policy.replicas * starts.size();
  std::vector<std::size_t> at_least(static_cast<std::size_t>(max_k) + 1, 0);
  for (const auto& depths : per_replica) {
    for (auto d : depths) {
      const auto top = static_cast<std::size_t>(std::min(d, max_k));
      for (std::size_t k = 0; k <= top; ++k) ++at_least[k];
    }
  }
  const double n = static_cast<double>(out.samples);
  for (auto c : at_least) {
    const double p = n > 0 ? static_cast<double>(c) / n : 0.0;
    out.tail.push_back(p);
    out.std_error.push_back(n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0);
  }
  return out;
}

}  // namespace rwre
