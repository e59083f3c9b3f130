#include <benchmark/benchmark.h>

#include <vector>

#include "rwre/environment.hpp"
#include "rwre/particle_system.hpp"
#include "rwre/random.hpp"
#include "rwre/walker.hpp"

namespace {

const rwre::EnvironmentSpec& two_point() {
  static const auto spec = rwre::EnvironmentSpec::two_point(0.4, 0.8, 0.3);
  return spec;
}

void BM_Philox(benchmark::State& state) {
  rwre::Stream s(1, rwre::Domain::Walk, 0);
  for (auto _ : state) benchmark::DoNotOptimize(s.next_u32());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Philox);

void BM_SingleWalk(benchmark::State& state) {
  const rwre::Environment env(two_point(), 3);
  const auto steps = state.range(0);
  rwre::EnvironmentWindow window(env, {-steps - 8, steps + 8});
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rwre::run_walk(window, 0, steps, ++seed).final_position);
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_SingleWalk)->Arg(10000);

void BM_WalkFamily(benchmark::State& state) {
  const rwre::Environment env(two_point(), 3);
  const std::int64_t steps = 10000;
  const auto walks = static_cast<std::size_t>(state.range(0));
  rwre::EnvironmentWindow window(env, {-steps - 8, steps + 8});
  std::vector<rwre::Site> starts(walks, 0), out(walks);
  std::vector<std::uint64_t> seeds(walks);
  std::uint64_t next = 0;
  for (auto _ : state) {
    for (auto& s : seeds) s = ++next;
    rwre::final_positions(window, starts, seeds, steps, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * steps * static_cast<std::int64_t>(walks));
}
BENCHMARK(BM_WalkFamily)->Arg(64);

void BM_EvolveRestricted(benchmark::State& state) {
  const rwre::Environment env(two_point(), 3);
  const auto steps = state.range(0);
  const auto init = rwre::sample_initial(env, rwre::DeterministicConstant{1}, {-steps, steps}, 5);
  std::uint64_t work = 0;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    rwre::Evolver ev(env, init, ++seed);
    ev.advance(steps);
    work += ev.work();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(work));
}
BENCHMARK(BM_EvolveRestricted)->Arg(500);

void BM_ComputeF(benchmark::State& state) {
  const rwre::Environment env(two_point(), 3);
  const auto sites = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(rwre::compute_f(env, {0, sites - 1}, 1e-10).values.data());
  state.SetItemsProcessed(state.iterations() * sites);
}
BENCHMARK(BM_ComputeF)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
