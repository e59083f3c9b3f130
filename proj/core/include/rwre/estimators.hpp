#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/functions.hpp"
#include "rwre/particle_system.hpp"
#include "rwre/seeds.hpp"

namespace rwre {

inline constexpr double kZ95 = 1.959963984540054;

/// Binomial proportion with a Wilson interval. With zero successes the
/// estimate is degenerate and the interval is the one-sided [0, 3/trials].
struct ProportionEstimate {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool degenerate = false;
};

ProportionEstimate wilson_interval(std::size_t successes, std::size_t trials, double z = kZ95);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

MeanEstimate mean_estimate(std::span<const double> values);

// ---------------------------------------------------------------------------
// Laws of large numbers

struct SpeedEstimate {
  MeanEstimate speed;
  double analytic = 0.0;
  /// (empirical - analytic) / stderr
  double z_score = 0.0;
};

/// X_n / n over replicas (start 0), environments per the policy.
SpeedEstimate empirical_speed(const EnvironmentSpec& spec, std::int64_t n, const SeedPolicy& policy);

struct LlnDeviation {
  double max_deviation = 0.0;
  std::size_t walks = 0;
  SiteRange starts;
  /// log m / log n: the exponent for which m = n^gamma.
  double implied_gamma = 0.0;
};

/// max over y in (An, Bn], i <= m of |(X_n^{y,i} - y)/n - v_P|. Walk (y, i)
/// has a seed depending only on (seed, y, i), so nested families give
/// nested maxima.
LlnDeviation uniform_lln_deviation(const Environment& env, double A, double B, std::int64_t n, std::int64_t m,
                                   std::uint64_t seed);

std::uint64_t family_walk_seed(std::uint64_t seed, Site y, std::uint64_t i) noexcept;

// ---------------------------------------------------------------------------
// Slowdown

/// P(X_n - start <= n v) for each n; one walk per replica to max(ns), read
/// at every n, which matches separate runs exactly.
std::vector<ProportionEstimate> slowdown_curve(const EnvironmentSpec& spec, double v,
                                               std::span<const std::int64_t> ns, const SeedPolicy& policy);

/// Throws InsufficientSamples below 1000 replicas.
ProportionEstimate slowdown_probability(const EnvironmentSpec& spec, double v, std::int64_t n,
                                        const SeedPolicy& policy);

struct ScalingDiagnostic {
  SeedMode mode = SeedMode::Quenched;
  std::vector<std::int64_t> ns;
  std::vector<ProportionEstimate> estimates;
  /// n values whose interval stays strictly inside (0, 1).
  std::vector<std::int64_t> used_ns;
  /// Quenched default: -log p = intercept + slope * n^(1 - 1/s).
  /// Quenched free fit: log(-log p) = intercept + slope * log n.
  /// Averaged: log p = intercept + slope * log n.
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  /// kappa (quenched, free fit) or kappa' (averaged); the slope of the
  /// log-log regression in both cases.
  std::optional<double> fitted_exponent;
  /// 1 - 1/s (quenched) or 1 - s (averaged).
  double reference_exponent = 0.0;
  bool free_fit = false;
};

ScalingDiagnostic fit_slowdown_scaling(std::span<const std::int64_t> ns, std::span<const ProportionEstimate> estimates,
                                       SeedMode mode, double s_exponent, bool free_fit = false);

// ---------------------------------------------------------------------------
// Hitting times

/// P(exists y in ys: T_n^y >= n mu), censored walks counting as exceedances.
ProportionEstimate hitting_tail(const Environment& env, SiteRange ys, std::int64_t n, double mu,
                                std::size_t replicas, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Distributional checks

struct GofBin {
  std::uint32_t lo = 0;
  /// Inclusive; UINT32_MAX for the open upper tail.
  std::uint32_t hi = 0;
  double observed = 0.0;
  double expected = 0.0;
};

struct GofResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::size_t samples = 0;
  std::vector<GofBin> bins;
};

/// Pearson chi-square test of the samples against Poisson(lambda), bins
/// merged until every expected count is at least 5. Throws
/// InsufficientSamples below 1000 samples.
GofResult poisson_gof(std::span<const std::uint32_t> samples, double lambda);

double poisson_pmf(std::uint32_t k, double lambda);

/// Total variation between the empirical pmf and Poisson(lambda), with the
/// Poisson support cut where its tail mass drops below 1e-9.
double tv_distance_to_poisson(std::span<const std::uint32_t> samples, double lambda);
/// Same, for an empirical pmf given as a table.
double tv_distance_to_poisson(std::span<const double> pmf, double lambda);
/// Against the mixture (1/R) sum_r Poisson(lambdas[r]); samples[r] is drawn
/// in the situation whose reference mean is lambdas[r].
double tv_distance_to_poisson_mixture(std::span<const std::uint32_t> samples, std::span<const double> lambdas);

// ---------------------------------------------------------------------------
// Probe sampling for stationarity / convergence

struct ProbeSamples {
  std::vector<Site> probes;
  std::vector<std::int64_t> times;
  std::size_t replicas = 0;
  /// counts[(t * probes + p) * replicas + r]
  std::vector<std::uint32_t> counts;
  /// f(theta^x omega) at each probe in replica r's environment: [r * probes + p].
  std::vector<double> potential;

  std::span<const std::uint32_t> at(std::size_t time_index, std::size_t probe_index) const {
    return {counts.data() + (time_index * probes.size() + probe_index) * replicas, replicas};
  }
  double potential_at(std::size_t replica, std::size_t probe_index) const {
    return potential[replica * probes.size() + probe_index];
  }
};

/// Evolves law-distributed configurations on the cone of the probes and
/// records eta_t(probe) at each requested time, per replica.
ProbeSamples sample_probe_counts(const EnvironmentSpec& spec, const SeedPolicy& policy, const InitialLaw& law,
                                 std::span<const Site> probes, std::span<const std::int64_t> times,
                                 double f_tolerance = 1e-10);

/// Upper bound on the site-steps sample_probe_counts will process.
double probe_sampling_work(std::span<const Site> probes, std::int64_t horizon, std::size_t replicas);

// ---------------------------------------------------------------------------
// Hydrodynamics

struct HydroTransport {
  double N = 0.0;
  double t = 0.0;
  std::int64_t steps = 0;
  double speed = 0.0;
  /// Per test function: integral of prof(y - v t) g(y) over supp g.
  std::vector<double> targets;
  /// errors[g][replica] = |pairing - target|
  std::vector<std::vector<double>> errors;
  std::vector<MeanEstimate> mean_error;
};

/// Synthesises eta_0 from the profile at scale N, evolves floor(N t) steps
/// and compares the pairing with each g against the transported profile.
HydroTransport hydro_transport_error(const EnvironmentSpec& spec, const Profile& profile, double N, double t,
                                     std::span<const TestFunction> gs, const SeedPolicy& policy,
                                     SynthesisMode mode = SynthesisMode::Poisson);

double transported_profile_integral(const Profile& profile, double shift, const TestFunction& g);

}  // namespace rwre
