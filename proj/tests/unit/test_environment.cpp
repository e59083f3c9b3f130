#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/errors.hpp"
#include "rwre/random.hpp"

namespace rwre {
namespace {

const EnvironmentSpec kTwoPoint = EnvironmentSpec::two_point(0.4, 0.8, 0.3);
const EnvironmentSpec kConstant = EnvironmentSpec::discrete({{0.75, 1.0}});

// Composite Simpson on [a, b].
double simpson(const std::function<double(double)>& h, double a, double b, int n = 20000) {
  const double dx = (b - a) / n;
  double s = h(a) + h(b);
  for (int i = 1; i < n; ++i) s += h(a + i * dx) * (i % 2 ? 4.0 : 2.0);
  return s * dx / 3.0;
}

double bisect(const std::function<double(double)>& g, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(lo) * g(mid) <= 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(EnvironmentSpec, RejectsMalformedLaws) {
  EXPECT_THROW(EnvironmentSpec::discrete({}), InvalidSpec);
  EXPECT_THROW(EnvironmentSpec::discrete({{0.6, 0.5}, {0.7, 0.4}}), InvalidSpec);
  EXPECT_THROW(EnvironmentSpec::discrete({{1.0, 1.0}}), InvalidSpec);
  EXPECT_THROW(EnvironmentSpec::two_point(0.4, 0.8, 1.5), InvalidSpec);
  EXPECT_THROW(EnvironmentSpec::two_point(0.4, 0.8, 0.3, 0.45), InvalidSpec);
  EXPECT_THROW(EnvironmentSpec::truncated(BaseDensity::Uniform, 0.8, 0.2, 0.1), InvalidSpec);
  EXPECT_THROW(EnvironmentSpec::truncated(BaseDensity::Beta, -1.0, 2.0, 0.1), InvalidSpec);
  EXPECT_THROW(EnvironmentSpec::truncated(BaseDensity::Uniform, 0.0, 0.05, 0.1), InvalidSpec);
}

TEST(EnvironmentSpec, DefaultEllipticity) {
  EXPECT_DOUBLE_EQ(kTwoPoint.ellipticity(), 0.2);
  EXPECT_DOUBLE_EQ(kConstant.ellipticity(), 0.25);
}

TEST(Environment, DeterministicPerSite) {
  Environment env(kTwoPoint, 7);
  const double a = env.omega_at(0);
  EXPECT_EQ(a, env.omega_at(0));
  EXPECT_TRUE(a == 0.4 || a == 0.8);
  Environment again(kTwoPoint, 7);
  for (Site x = -50; x <= 50; ++x) EXPECT_EQ(env.omega_at(x), again.omega_at(x));
}

TEST(Environment, DegenerateLaw) {
  Environment env(kConstant, 123);
  for (Site x = -5; x <= 5; ++x) EXPECT_EQ(env.omega_at(x), 0.75);
}

TEST(Environment, TwoPointFrequency) {
  Environment env(kTwoPoint, 1);
  int low = 0;
  const int n = 200000;
  for (Site x = 0; x < n; ++x) low += env.omega_at(x) == 0.4;
  EXPECT_NEAR(static_cast<double>(low) / n, 0.3, 5 * std::sqrt(0.21 / n));
}

TEST(Environment, TruncatedSupport) {
  const auto spec = EnvironmentSpec::truncated(BaseDensity::Beta, 2.0, 3.0, 0.1);
  Environment env(spec, 5);
  for (Site x = 0; x < 1000; ++x) {
    const double w = env.omega_at(x);
    EXPECT_GE(w, 0.1);
    EXPECT_LE(w, 0.9);
  }
}

TEST(EnvironmentWindow, MatchesEnvironment) {
  Environment env(kTwoPoint, 3);
  EnvironmentWindow w(env, {-10, 10});
  for (Site x = -40; x <= 40; ++x) {
    EXPECT_EQ(w.omega(x), env.omega_at(x));
    EXPECT_DOUBLE_EQ(w.rho(x), (1 - env.omega_at(x)) / env.omega_at(x));
    EXPECT_EQ(w.threshold(x), bernoulli_threshold(env.omega_at(x)));
  }
  EXPECT_TRUE(w.range().contains(SiteRange{-40, 40}));
}

TEST(MeanRho, ReferenceValues) {
  EXPECT_DOUBLE_EQ(mean_rho(kConstant), 1.0 / 3.0);
  EXPECT_NEAR(mean_rho(kTwoPoint), 0.3 * 1.5 + 0.7 * 0.25, 1e-15);
  EXPECT_DOUBLE_EQ(mean_rho(EnvironmentSpec::discrete({{0.5, 1.0}})), 1.0);
}

TEST(MeanRho, TruncatedUniformClosedForm) {
  // Uniform on [0.5, 0.9]: E rho = (log(0.9/0.5) - 0.4) / 0.4.
  const auto spec = EnvironmentSpec::truncated(BaseDensity::Uniform, 0.5, 1.0, 0.1);
  EXPECT_NEAR(mean_rho(spec), (std::log(1.8) - 0.4) / 0.4, 1e-9);
}

TEST(MeanRho, TruncatedBetaQuadrature) {
  const double a = 3.0, b = 1.5, c = 0.05;
  const auto spec = EnvironmentSpec::truncated(BaseDensity::Beta, a, b, c);
  auto pdf = [&](double w) { return std::pow(w, a - 1) * std::pow(1 - w, b - 1); };
  const double z = simpson(pdf, c, 1 - c);
  const double m = simpson([&](double w) { return pdf(w) * (1 - w) / w; }, c, 1 - c) / z;
  EXPECT_NEAR(mean_rho(spec), m, 1e-8);
}

TEST(Invariants, ConstantSpec) {
  const auto inv = compute_invariants(kConstant);
  EXPECT_DOUBLE_EQ(inv.speed, 0.5);
  EXPECT_FALSE(inv.s_exponent.has_value());
  EXPECT_FALSE(inv.nestling);
}

TEST(Invariants, TwoPointSpec) {
  const auto inv = compute_invariants(kTwoPoint);
  EXPECT_NEAR(inv.mean_rho, 0.625, 1e-15);
  EXPECT_NEAR(inv.speed, 3.0 / 13.0, 1e-15);
  ASSERT_TRUE(inv.s_exponent.has_value());
  const double oracle = bisect([](double s) { return 0.3 * std::pow(1.5, s) + 0.7 * std::pow(0.25, s) - 1.0; }, 1.0, 10.0);
  EXPECT_NEAR(*inv.s_exponent, oracle, 1e-9);
  EXPECT_NEAR(*inv.s_exponent, 2.94, 0.01);
  EXPECT_LE(*inv.s_residual, 1e-10);
  EXPECT_TRUE(inv.nestling);
}

TEST(Invariants, TruncatedUniformExponent) {
  // Uniform on [0.3, 0.9]; oracle: Simpson moment plus bisection.
  const auto spec = EnvironmentSpec::truncated(BaseDensity::Uniform, 0.3, 1.0, 0.1);
  auto moment = [](double s) {
    return simpson([s](double w) { return std::pow((1 - w) / w, s); }, 0.3, 0.9) / 0.6 - 1.0;
  };
  const auto inv = compute_invariants(spec);
  ASSERT_TRUE(inv.s_exponent.has_value());
  EXPECT_NEAR(*inv.s_exponent, bisect(moment, 1.0001, 20.0), 1e-6);
  EXPECT_LE(*inv.s_residual, 1e-10);
}

TEST(Invariants, RecurrentLawRejected) {
  EXPECT_THROW(compute_invariants(EnvironmentSpec::discrete({{0.5, 1.0}})), AssumptionViolation);
  EXPECT_THROW(compute_invariants(EnvironmentSpec::two_point(0.3, 0.6, 0.5)), AssumptionViolation);
}

TEST(Potential, ConstantClosedForm) {
  Environment env(kConstant, 1);
  const auto f = compute_f(env, {-20, 300}, 1e-12);
  for (double v : f.values) EXPECT_NEAR(v, 1.0 / (2 * 0.75 - 1), 1e-11);
}

// Backward recursion omega_x f_x = 1 + rho_{x+1} omega_{x+1} f_{x+1},
// started far to the right; the start error shrinks like a product of rhos.
TEST(Potential, TwoPointBackwardRecursion) {
  Environment env(kTwoPoint, 11);
  const SiteRange win{0, 499};
  const auto f = compute_f(env, win, 1e-12);
  const Site far = win.hi + 4000;
  double g = 1.0 / (1.0 - 0.625);
  std::vector<double> oracle(static_cast<std::size_t>(win.size()));
  for (Site x = far; x >= win.lo; --x) {
    const double w1 = env.omega_at(x + 1);
    g = 1.0 + (1 - w1) / w1 * g;
    if (x <= win.hi) oracle[static_cast<std::size_t>(x - win.lo)] = g / env.omega_at(x);
  }
  for (Site x = win.lo; x <= win.hi; ++x) {
    EXPECT_NEAR(f.at(x), oracle[static_cast<std::size_t>(x - win.lo)], 1e-9 * oracle[static_cast<std::size_t>(x - win.lo)]);
  }
}

TEST(Potential, IdentityResiduals) {
  for (const auto& spec : {kTwoPoint, kConstant}) {
    Environment env(spec, 2);
    const auto f = compute_f(env, {0, 9999}, 1e-8);
    const auto res = potential_identity_residuals(env, f);
    ASSERT_EQ(res.size(), 9998u);
    for (double r : res) ASSERT_LE(r, 3e-8);
  }
}

TEST(Potential, WindowChoiceWithinTolerance) {
  Environment env(kTwoPoint, 6);
  const auto small = compute_f(env, {0, 99}, 1e-10);
  const auto large = compute_f(env, {-5000, 5000}, 1e-10);
  for (Site x = 0; x <= 99; ++x) EXPECT_NEAR(small.at(x), large.at(x), 1e-7 * large.at(x));
}

TEST(Potential, MeanIsInverseSpeed) {
  Environment env(kTwoPoint, 4);
  const auto f = compute_f(env, {0, 99999}, 1e-8);
  double sum = 0;
  for (double v : f.values) sum += v;
  EXPECT_NEAR(sum / 1e5 / (13.0 / 3.0), 1.0, 0.02);
}

TEST(Potential, Errors) {
  Environment bad(EnvironmentSpec::discrete({{0.5, 1.0}}), 1);
  EXPECT_THROW(compute_f(bad, {0, 3}, 1e-8), AssumptionViolation);
  Environment env(kTwoPoint, 1);
  EXPECT_THROW(compute_f(env, {0, 3}, 1e-12, 2), DepthExceeded);
  EXPECT_NO_THROW(compute_f(env, {0, 3}, 1e-12));
  EXPECT_THROW(compute_f(env, {0, 3}, 0.0), InvalidSpec);
}

}  // namespace
}  // namespace rwre
