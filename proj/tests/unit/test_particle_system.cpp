#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rwre/environment.hpp"
#include "rwre/errors.hpp"
#include "rwre/particle_system.hpp"

namespace rwre {
namespace {

const EnvironmentSpec kTwoPoint = EnvironmentSpec::two_point(0.4, 0.8, 0.3);
const EnvironmentSpec kConstant = EnvironmentSpec::discrete({{0.75, 1.0}});

TEST(Configuration, BasicAccess) {
  Configuration c({-2, 2}, Extent::Restricted);
  c.set(0, 3);
  c.set(2, 1);
  EXPECT_EQ(c.at(0), 3u);
  EXPECT_EQ(c.total(), 4u);
  EXPECT_EQ(c.total({1, 2}), 1u);
  EXPECT_EQ(c.occupied(), 2u);
  EXPECT_THROW(c.at(5), WindowTooSmall);
  Configuration complete({-2, 2}, Extent::Complete);
  EXPECT_EQ(complete.at(100), 0u);
}

TEST(Configuration, RestrictedTo) {
  Configuration c({0, 9}, Extent::Complete);
  c.set(3, 2);
  c.set(8, 1);
  const auto all = c.restricted_to({2, 8});
  EXPECT_EQ(all.extent(), Extent::Complete);
  const auto part = c.restricted_to({0, 5});
  EXPECT_EQ(part.extent(), Extent::Restricted);
  EXPECT_EQ(part.total(), 2u);
}

TEST(SampleInitial, DeterministicConstant) {
  Environment env(kTwoPoint, 1);
  const auto c = sample_initial(env, DeterministicConstant{2}, {-5, 5}, 3);
  for (Site x = -5; x <= 5; ++x) EXPECT_EQ(c.at(x), 2u);
}

TEST(SampleInitial, PoissonMean) {
  Environment env(kTwoPoint, 1);
  const auto c = sample_initial(env, PoissonConstant{1.7}, {0, 99999}, 3);
  EXPECT_NEAR(static_cast<double>(c.total()) / 1e5, 1.7, 5 * std::sqrt(1.7 / 1e5));
}

TEST(SampleInitial, StationaryMeanIsAlphaOverSpeed) {
  // E[alpha f] = alpha / v_P.
  Environment env(kTwoPoint, 2);
  const auto c = sample_initial(env, StationaryPoisson{0.5, 1e-10}, {0, 199999}, 4);
  EXPECT_NEAR(static_cast<double>(c.total()) / 2e5 / (0.5 * 13.0 / 3.0), 1.0, 0.03);
  EXPECT_NEAR(initial_law_mean(StationaryPoisson{0.5, 1e-10}, kTwoPoint), 0.5 * 13.0 / 3.0, 1e-12);
}

TEST(SampleInitial, WindowIndependent) {
  Environment env(kTwoPoint, 2);
  const auto a = sample_initial(env, PoissonConstant{2.0}, {0, 50}, 4);
  const auto b = sample_initial(env, PoissonConstant{2.0}, {-30, 90}, 4);
  for (Site x = 0; x <= 50; ++x) EXPECT_EQ(a.at(x), b.at(x));
}

TEST(QuantileProduct, TableAndTruncation) {
  auto q = QuantileProduct::make({{0.4, {0.0, 1.0}}, {0.8, {0.5, 0.25, 0.25}}}, 2);
  EXPECT_EQ(q.pmf_for(0.4).size(), 2u);
  ASSERT_EQ(q.pmf_for(0.8).size(), 2u);
  EXPECT_DOUBLE_EQ(q.pmf_for(0.8)[0] + q.pmf_for(0.8)[1], 1.0);
  Environment env(kTwoPoint, 5);
  const auto c = sample_initial(env, q, {0, 200}, 1);
  for (Site x = 0; x <= 200; ++x) {
    if (env.omega_at(x) == 0.4) EXPECT_EQ(c.at(x), 1u);
  }
}

TEST(Evolve, ZeroStepsIsIdentity) {
  Environment env(kTwoPoint, 1);
  const auto c = sample_initial(env, PoissonConstant{1.0}, {0, 40}, 2);
  EXPECT_EQ(evolve(env, c, 0, 5), c);
}

TEST(Evolve, RestrictedWindowShrinks) {
  Environment env(kTwoPoint, 1);
  const auto c = sample_initial(env, PoissonConstant{1.0}, {0, 40}, 2);
  const auto out = evolve(env, c, 10, 5);
  EXPECT_EQ(out.window(), (SiteRange{10, 30}));
  EXPECT_EQ(out.time(), 10);
  EXPECT_THROW(evolve(env, c, 10, 5, {5, 30}), WindowTooSmall);
}

TEST(Evolve, ConservationOnCompleteCone) {
  Environment env(kTwoPoint, 8);
  auto c = sample_initial(env, PoissonConstant{2.0}, {0, 200}, 3);
  Configuration complete(c.window(), Extent::Complete);
  for (Site x = 0; x <= 200; ++x) complete.set(x, c.at(x));
  Evolver ev(env, complete, 21);
  for (int t = 0; t < 1000; ++t) {
    ev.step();
    ASSERT_EQ(ev.current().total(), complete.total()) << "step " << t;
  }
  EXPECT_EQ(ev.current().time(), 1000);
}

TEST(Evolve, ConstantSpecSingleParticleDrift) {
  // Every particle is a walk with speed 1/2.
  Environment env(kConstant, 1);
  Configuration c({0, 0}, Extent::Complete);
  c.set(0, 20000);
  const auto out = evolve(env, c, 200, 3);
  double s = 0;
  for (Site x = out.window().lo; x <= out.window().hi; ++x) s += static_cast<double>(x) * out.at(x);
  EXPECT_NEAR(s / 20000 / 200, 0.5, 5 * std::sqrt(0.75 * 200) / 200 / std::sqrt(20000.0));
}

TEST(Evolve, WindowPaddingEquality) {
  Environment env(kTwoPoint, 12);
  const SiteRange observe{100, 160};
  const std::int64_t T = 300;
  const auto wide = sample_initial(env, PoissonConstant{1.3}, cone_window(observe, T).padded(250), 6);
  const auto tight = wide.restricted_to(cone_window(observe, T));
  const auto a = evolve(env, wide, T, 44, observe);
  const auto b = evolve(env, tight, T, 44, observe);
  EXPECT_EQ(a.window(), observe);
  for (Site x = observe.lo; x <= observe.hi; ++x) ASSERT_EQ(a.at(x), b.at(x));
}

TEST(Evolve, StationaryMeanPreserved) {
  // Under pi_alpha the mean at a probe stays alpha f(probe); averaged over
  // the window the sum changes only by boundary flux, checked loosely.
  Environment env(kTwoPoint, 2);
  const SiteRange observe{0, 999};
  const auto c = sample_initial(env, StationaryPoisson{0.5, 1e-10}, cone_window(observe, 100), 9);
  const auto out = evolve(env, c, 100, 10, observe);
  const auto f = compute_f(env, observe, 1e-10);
  double expected = 0;
  for (double v : f.values) expected += 0.5 * v;
  EXPECT_NEAR(static_cast<double>(out.total()), expected, 5 * std::sqrt(expected));
}

TEST(Pairing, DirectSum) {
  Configuration c({0, 1}, Extent::Complete);
  c.set(0, 2);
  c.set(1, 1);
  const auto g = TestFunction::triangle(-2.0, 2.0);
  EXPECT_DOUBLE_EQ(empirical_pairing(c, 1.0, g), 2.5);
  EXPECT_EQ(empirical_pairing(c, 1.0, TestFunction(ZeroFunction{-5.0, 5.0})), 0.0);
}

TEST(Pairing, RiemannSum) {
  const double N = 1e4;
  Configuration c({0, 10000}, Extent::Complete);
  for (Site x = 0; x <= 10000; ++x) c.set(x, 1);
  EXPECT_NEAR(empirical_pairing(c, N, TestFunction::triangle(0.0, 1.0)), 0.5, 0.01);
}

TEST(ScaledRange, Bounds) {
  EXPECT_EQ(scaled_range(10.0, 0.0, 1.0), (SiteRange{1, 10}));
  EXPECT_EQ(scaled_range(10.0, -0.25, 0.35), (SiteRange{-2, 3}));
}

TEST(Synthesis, ZeroProfileIsEmpty) {
  const auto c = synthesize_profile_config(Profile::indicator(0.0, 1.0, 0.0), 100.0, 1);
  EXPECT_EQ(c.total(), 0u);
}

TEST(Synthesis, FloorMode) {
  const auto c = synthesize_profile_config(Profile::indicator(0.0, 1.0, 2.5), 100.0, 1, SynthesisMode::Floor);
  EXPECT_EQ(c.extent(), Extent::Complete);
  EXPECT_EQ(c.at(50), 2u);
  EXPECT_EQ(c.at(500), 0u);
}

TEST(Synthesis, PairingConverges) {
  const auto c = synthesize_profile_config(Profile::indicator(0.0, 1.0, 1.0), 1e5, 3);
  EXPECT_NEAR(empirical_pairing(c, 1e5, TestFunction::triangle(0.0, 1.0)), 0.5, 0.01);
}

TEST(Serialization, RoundTrip) {
  Environment env(kTwoPoint, 1);
  auto c = sample_initial(env, PoissonConstant{0.7}, {-20, 30}, 2);
  c.set_time(17);
  c.set_seed(99);
  std::stringstream ss;
  write_configuration(ss, c);
  const auto back = read_configuration(ss);
  EXPECT_EQ(back, c);
}

TEST(Serialization, RejectsGarbage) {
  std::stringstream ss("# window 0 4\n7 x\n");
  EXPECT_ANY_THROW(read_configuration(ss));
}

}  // namespace
}  // namespace rwre
