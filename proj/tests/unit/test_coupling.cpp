#include <gtest/gtest.h>

#include "rwre/coupling.hpp"
#include "rwre/errors.hpp"

namespace rwre {
namespace {

const EnvironmentSpec kTwoPoint = EnvironmentSpec::two_point(0.4, 0.8, 0.3);
const EnvironmentSpec kConstant = EnvironmentSpec::discrete({{0.75, 1.0}});

Configuration make(SiteRange w, Extent e, std::initializer_list<std::pair<Site, std::uint32_t>> counts) {
  Configuration c(w, e);
  for (auto [x, n] : counts) c.set(x, n);
  return c;
}

TEST(CoupleInitial, MinAndExcess) {
  const auto eta = make({0, 2}, Extent::Complete, {{1, 3}, {2, 1}});
  const auto zeta = make({0, 2}, Extent::Complete, {{1, 1}, {0, 2}});
  const auto cc = couple_initial(eta, zeta);
  EXPECT_EQ(cc.xi()[1], 1u);
  EXPECT_EQ(cc.beta_plus()[1], 2u);
  EXPECT_EQ(cc.beta_minus()[1], 0u);
  EXPECT_EQ(cc.beta_minus()[0], 2u);
  EXPECT_EQ(cc.beta_plus()[2], 1u);
  EXPECT_TRUE(cc.complementary());
  EXPECT_EQ(cc.eta(), eta);
  EXPECT_EQ(cc.zeta(), zeta);
}

TEST(CoupleInitial, IdenticalAndEmpty) {
  const auto eta = make({0, 3}, Extent::Complete, {{0, 2}, {3, 1}});
  const auto same = couple_initial(eta, eta);
  EXPECT_EQ(same.plus_count({0, 3}) + same.minus_count({0, 3}), 0u);
  EXPECT_EQ(same.eta(), eta);
  const Configuration empty({0, 3}, Extent::Complete);
  const auto e = couple_initial(empty, eta);
  EXPECT_EQ(e.minus_count({0, 3}), eta.total());
  EXPECT_EQ(e.zeta(), eta);
}

TEST(CoupleInitial, WindowMismatch) {
  EXPECT_THROW(couple_initial(Configuration({0, 3}), Configuration({0, 4})), WindowMismatch);
}

TEST(CoupledStep, MatchedSystemEqualsEvolve) {
  Environment env(kTwoPoint, 3);
  Configuration c = sample_initial(env, PoissonConstant{1.5}, {0, 60}, 2);
  Configuration complete(c.window(), Extent::Complete);
  for (Site x = 0; x <= 60; ++x) complete.set(x, c.at(x));
  CoupledEvolver ce(env, couple_initial(complete, complete), 77);
  Evolver ev(env, complete, 77);
  for (int t = 0; t < 200; ++t) {
    ce.step();
    ev.step();
    ASSERT_EQ(ce.current().eta(), ev.current()) << "step " << t;
  }
}

TEST(CoupledStep, InvariantsOverRandomSteps) {
  Environment env(kTwoPoint, 5);
  const auto a = sample_initial(env, PoissonConstant{1.5}, {0, 49}, 1);
  const auto b = sample_initial(env, PoissonConstant{1.0}, {0, 49}, 2);
  Configuration ea({0, 49}, Extent::Complete), eb({0, 49}, Extent::Complete);
  for (Site x = 0; x <= 49; ++x) {
    ea.set(x, a.at(x));
    eb.set(x, b.at(x));
  }
  CoupledEvolver ce(env, couple_initial(ea, eb), 9);
  for (int t = 0; t < 1000; ++t) {
    ce.step();
    const auto& cur = ce.current();
    ASSERT_TRUE(cur.complementary());
    ASSERT_EQ(cur.eta().total(), ea.total());
    ASSERT_EQ(cur.zeta().total(), eb.total());
    const auto again = couple_initial(cur.eta(), cur.zeta());
    ASSERT_EQ(again.xi(), cur.xi());
    ASSERT_EQ(again.beta_plus(), cur.beta_plus());
  }
}

TEST(CoupledStep, ArrivalsRematch) {
  // One + particle at 0 and one - particle at 2: find dynamics where both
  // land on 1; they must then be matched there.
  Environment env(kConstant, 1);
  const auto eta = make({0, 2}, Extent::Complete, {{0, 1}});
  const auto zeta = make({0, 2}, Extent::Complete, {{2, 1}});
  const auto cc = couple_initial(eta, zeta);
  int found = 0;
  for (std::uint64_t seed = 0; seed < 200 && found < 3; ++seed) {
    const auto next = coupled_step(env, cc, seed);
    if (next.eta().at(1) == 1 && next.zeta().at(1) == 1) {
      const auto idx = static_cast<std::size_t>(1 - next.window().lo);
      EXPECT_EQ(next.xi()[idx], 1u);
      EXPECT_EQ(next.beta_plus()[idx], 0u);
      EXPECT_EQ(next.beta_minus()[idx], 0u);
      ++found;
    }
  }
  EXPECT_GT(found, 0);
}

TEST(Discrepancy, IdenticalLawsSharedSeedStayMatched) {
  SeedPolicy p{SeedMode::Averaged, 4, 5, std::nullopt};
  const auto s = discrepancy_decay(kTwoPoint, p, PoissonConstant{1.0}, PoissonConstant{1.0}, {0, 49}, 30,
                                   {.share_config_seed = true});
  ASSERT_EQ(s.plus_density.size(), 31u);
  for (std::size_t t = 0; t < s.plus_density.size(); ++t) {
    EXPECT_EQ(s.plus_density[t], 0.0);
    EXPECT_EQ(s.minus_density[t], 0.0);
  }
}

TEST(Discrepancy, MinusDecreasesAndDifferenceHolds) {
  SeedPolicy p{SeedMode::Averaged, 4, 40, std::nullopt};
  const auto s = discrepancy_decay(kTwoPoint, p, DeterministicConstant{1}, StationaryPoisson{3.0 / 13.0, 1e-10},
                                   {0, 199}, 200);
  EXPECT_LT(s.minus_density.back(), s.minus_density.front());
  EXPECT_NEAR(s.difference.back(), s.difference.front(), 4 * s.difference_stderr.back() + 4 * s.difference_stderr.front());
}

TEST(Meeting, SameStartMeetsAtZero) {
  Environment env(kConstant, 1);
  const auto m = meeting_experiment(env, 3, 3, 100, 10, 1);
  EXPECT_EQ(m.fraction_met, 1.0);
  EXPECT_EQ(*m.outcomes[0].meeting_time, 0);
}

TEST(Meeting, OddSeparation) {
  Environment env(kConstant, 1);
  EXPECT_THROW(meeting_experiment(env, 0, 3, 100, 10, 1), ParityError);
}

TEST(Meeting, FractionMonotoneInHorizon) {
  Environment env(kConstant, 1);
  const auto m = meeting_experiment(env, 0, 2, 10000, 300, 5);
  double prev = 0;
  for (std::int64_t h : {1, 10, 100, 1000, 10000}) {
    const double f = m.fraction_met_by(h);
    EXPECT_GE(f, prev);
    prev = f;
  }
  EXPECT_EQ(prev, m.fraction_met);
  // Shorter runs with the same seed reproduce the prefix.
  const auto short_run = meeting_experiment(env, 0, 2, 100, 300, 5);
  EXPECT_EQ(short_run.fraction_met, m.fraction_met_by(100));
}

}  // namespace
}  // namespace rwre
