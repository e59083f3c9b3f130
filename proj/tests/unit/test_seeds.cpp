#include <gtest/gtest.h>

#include "rwre/errors.hpp"
#include "rwre/seeds.hpp"

namespace rwre {
namespace {

TEST(SeedPolicy, QuenchedSharesEnvironment) {
  SeedPolicy p{SeedMode::Quenched, 17, 10, std::nullopt};
  for (std::size_t r = 1; r < 10; ++r) EXPECT_EQ(p.env_seed(r), p.env_seed(0));
  EXPECT_NE(p.dyn_seed(0), p.dyn_seed(1));
  EXPECT_NE(p.walk_seed(0), p.walk_seed(1));
}

TEST(SeedPolicy, AveragedDrawsFreshEnvironments) {
  SeedPolicy p{SeedMode::Averaged, 17, 10, std::nullopt};
  EXPECT_NE(p.env_seed(0), p.env_seed(1));
}

TEST(SeedPolicy, ModesDifferOnlyInEnvironment) {
  SeedPolicy q{SeedMode::Quenched, 17, 10, std::nullopt};
  SeedPolicy a{SeedMode::Averaged, 17, 10, std::nullopt};
  for (std::size_t r = 0; r < 10; ++r) {
    EXPECT_EQ(q.config_seed(r), a.config_seed(r));
    EXPECT_EQ(q.alt_config_seed(r), a.alt_config_seed(r));
    EXPECT_EQ(q.dyn_seed(r), a.dyn_seed(r));
    EXPECT_EQ(q.walk_seed(r, 3), a.walk_seed(r, 3));
  }
}

TEST(SeedPolicy, FixedEnvironmentSeed) {
  SeedPolicy p{SeedMode::Quenched, 17, 2, 99};
  EXPECT_EQ(p.env_seed(1), 99u);
}

TEST(SeedPolicy, PurposesAreDistinct) {
  SeedPolicy p{SeedMode::Averaged, 3, 1, std::nullopt};
  const std::uint64_t s[] = {p.env_seed(0), p.config_seed(0), p.alt_config_seed(0), p.dyn_seed(0), p.walk_seed(0)};
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) EXPECT_NE(s[i], s[j]);
}

TEST(SeedMode, Names) {
  EXPECT_EQ(seed_mode_from_string("quenched"), SeedMode::Quenched);
  EXPECT_EQ(seed_mode_from_string(to_string(SeedMode::Averaged)), SeedMode::Averaged);
  EXPECT_THROW(seed_mode_from_string("annealed"), ConfigError);
}

}  // namespace
}  // namespace rwre
