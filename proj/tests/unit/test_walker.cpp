#include <gtest/gtest.h>

#include <vector>

#include "rwre/environment.hpp"
#include "rwre/random.hpp"
#include "rwre/walker.hpp"

namespace rwre {
namespace {

const EnvironmentSpec kTwoPoint = EnvironmentSpec::two_point(0.4, 0.8, 0.3);

// First seed whose first step from `start` goes in the requested direction.
std::uint64_t seed_with_first_step(const Environment& env, Site start, bool right) {
  for (std::uint64_t s = 0;; ++s) {
    Stream st(s, Domain::Walk, 0);
    const bool r = st.next_u32() < bernoulli_threshold(env.omega_at(start));
    if (r == right) return s;
  }
}

TEST(RunWalk, ZeroSteps) {
  Environment env(kTwoPoint, 1);
  const auto r = run_walk(env, 5, 0, 9);
  EXPECT_EQ(r.final_position, 5);
  EXPECT_EQ(r.max_backtrack, 0);
}

TEST(RunWalk, PathIsNearestNeighbour) {
  Environment env(kTwoPoint, 1);
  const auto r = run_walk(env, 0, 1000, 3, {.record_path = true});
  ASSERT_EQ(r.path.size(), 1001u);
  Site lowest = 0;
  for (std::size_t i = 1; i < r.path.size(); ++i) {
    EXPECT_EQ(std::abs(r.path[i] - r.path[i - 1]), 1);
    lowest = std::min(lowest, r.path[i]);
  }
  EXPECT_EQ(r.final_position, r.path.back());
  EXPECT_EQ(r.min_position, lowest);
  EXPECT_EQ(r.max_backtrack, -lowest);
  EXPECT_EQ((r.final_position - r.start) % 2, 1000 % 2);
}

TEST(RunWalk, LongerWalkExtendsShorter) {
  Environment env(kTwoPoint, 2);
  const auto a = run_walk(env, 0, 37, 8, {.record_path = true});
  const auto b = run_walk(env, 0, 101, 8, {.record_path = true});
  for (std::size_t i = 0; i < a.path.size(); ++i) EXPECT_EQ(a.path[i], b.path[i]);
}

TEST(RunWalk, Deterministic) {
  Environment env(kTwoPoint, 2);
  EXPECT_EQ(run_walk(env, 0, 5000, 4).final_position, run_walk(env, 0, 5000, 4).final_position);
}

TEST(FinalPositions, MatchesRunWalk) {
  Environment env(kTwoPoint, 6);
  EnvironmentWindow w(env);
  std::vector<Site> starts;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < 29; ++i) {
    starts.push_back(3 * i - 20);
    seeds.push_back(derive_seed(77, Domain::Walk, static_cast<std::uint64_t>(i)));
  }
  for (std::int64_t steps : {0, 1, 7, 8, 9, 1001}) {
    std::vector<Site> out(starts.size());
    final_positions(w, starts, seeds, steps, out);
    for (std::size_t i = 0; i < starts.size(); ++i) {
      EXPECT_EQ(out[i], run_walk(env, starts[i], steps, seeds[i]).final_position) << "walk " << i << " n " << steps;
    }
  }
}

TEST(HittingTime, MinimalCrossing) {
  Environment env(kTwoPoint, 1);
  const auto s = seed_with_first_step(env, 0, true);
  const auto h = hitting_time(env, 0, 1, 10, s);
  EXPECT_TRUE(h.hit());
  EXPECT_EQ(h.time, 1);
}

TEST(HittingTime, CensoredAtCap) {
  Environment env(kTwoPoint, 1);
  const auto s = seed_with_first_step(env, 0, false);
  const auto h = hitting_time(env, 0, 10, 10, s);
  EXPECT_FALSE(h.hit());
  EXPECT_EQ(h.time, 10);
}

TEST(HittingTime, AgreesWithPath) {
  Environment env(kTwoPoint, 9);
  const auto path = run_walk(env, 4, 20000, 12, {.record_path = true}).path;
  for (std::int64_t x : {1, 5, 40}) {
    const auto h = hitting_time(env, 4, x, 20000, 12);
    ASSERT_TRUE(h.hit());
    EXPECT_EQ(path[static_cast<std::size_t>(h.time)], 4 + x);
    for (std::int64_t t = 0; t < h.time; ++t) EXPECT_LT(path[static_cast<std::size_t>(t)], 4 + x);
  }
}

TEST(HittingTime, StrictlyIncreasingInDistance) {
  Environment env(kTwoPoint, 9);
  std::int64_t prev = 0;
  for (std::int64_t x = 1; x <= 30; ++x) {
    const auto h = hitting_time(env, 0, x, 100000, 5);
    ASSERT_TRUE(h.hit());
    EXPECT_GT(h.time, prev);
    prev = h.time;
  }
}

TEST(HittingTime, BadArguments) {
  Environment env(kTwoPoint, 1);
  EXPECT_THROW(hitting_time(env, 0, 0, 10, 1), std::invalid_argument);
  EXPECT_THROW(hitting_time(env, 0, 5, 4, 1), std::invalid_argument);
}

TEST(BacktrackTail, ShapeAndMonotone) {
  const std::vector<Site> starts{0, 10, 20};
  SeedPolicy p{SeedMode::Averaged, 3, 50, std::nullopt};
  const auto t = backtrack_tail(kTwoPoint, p, starts, 500, 20);
  EXPECT_EQ(t.samples, 150u);
  ASSERT_EQ(t.tail.size(), 21u);
  EXPECT_EQ(t.tail[0], 1.0);
  for (std::size_t k = 1; k < t.tail.size(); ++k) EXPECT_LE(t.tail[k], t.tail[k - 1]);
}

}  // namespace
}  // namespace rwre
