#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/particle_system.hpp"
#include "rwre/seeds.hpp"

namespace rwre {

/// Two configurations in the same environment, stored as matched pairs xi
/// and unmatched excesses beta_plus (eta only) / beta_minus (zeta only).
/// eta = xi + beta_plus, zeta = xi + beta_minus, beta_plus * beta_minus = 0.
class CoupledConfiguration {
 public:
  CoupledConfiguration() = default;
  CoupledConfiguration(SiteRange window, Extent extent, std::int64_t time);

  SiteRange window() const noexcept { return window_; }
  Extent extent() const noexcept { return extent_; }
  std::int64_t time() const noexcept { return time_; }

  std::vector<std::uint32_t>& xi() noexcept { return xi_; }
  std::vector<std::uint32_t>& beta_plus() noexcept { return plus_; }
  std::vector<std::uint32_t>& beta_minus() noexcept { return minus_; }
  const std::vector<std::uint32_t>& xi() const noexcept { return xi_; }
  const std::vector<std::uint32_t>& beta_plus() const noexcept { return plus_; }
  const std::vector<std::uint32_t>& beta_minus() const noexcept { return minus_; }

  Configuration eta() const;
  Configuration zeta() const;

  /// Sum of beta_plus (resp. beta_minus) over r, which must be in the window.
  std::uint64_t plus_count(SiteRange r) const;
  std::uint64_t minus_count(SiteRange r) const;
  std::uint64_t total_particles() const noexcept;

  /// True when beta_plus(x) * beta_minus(x) == 0 at every site.
  bool complementary() const noexcept;

 private:
  SiteRange window_{};
  Extent extent_ = Extent::Restricted;
  std::int64_t time_ = 0;
  std::vector<std::uint32_t> xi_;
  std::vector<std::uint32_t> plus_;
  std::vector<std::uint32_t> minus_;
};

/// xi = min(eta, zeta), beta_plus = (eta - zeta)^+, beta_minus = (eta - zeta)^-.
/// Throws WindowMismatch when the windows differ.
CoupledConfiguration couple_initial(const Configuration& eta, const Configuration& zeta);

/// One coupled step. Matched particles use the same variates as evolve()
/// (so a fully matched system evolves exactly like its xi marginal); the
/// + and - excesses use independent families, and arrivals re-match per site.
class CoupledEvolver {
 public:
  CoupledEvolver(const Environment& env, CoupledConfiguration initial, std::uint64_t dyn_seed);

  void step();
  const CoupledConfiguration& current() const noexcept { return current_; }

 private:
  EnvironmentWindow env_window_;
  CoupledConfiguration current_;
  std::uint64_t dyn_seed_;
};

CoupledConfiguration coupled_step(const Environment& env, const CoupledConfiguration& cc, std::uint64_t dyn_seed);

struct DiscrepancyOptions {
  /// Sample eta_0 and zeta_0 from the same config seed (identical laws then
  /// give identical configurations).
  bool share_config_seed = false;
};

/// Mean discrepancy densities on the observation window per time step,
/// averaged over replicas; standard errors are across replicas.
struct DiscrepancySeries {
  SiteRange observe;
  std::size_t replicas = 0;
  std::vector<double> plus_density;
  std::vector<double> plus_stderr;
  std::vector<double> minus_density;
  std::vector<double> minus_stderr;
  /// beta_plus - beta_minus density, with its own across-replica stderr.
  std::vector<double> difference;
  std::vector<double> difference_stderr;
  /// Per-replica minus density at each step, row-major [replica][step].
  std::vector<double> minus_by_replica;
};

/// Couples eta_0 ~ law_eta and zeta_0 ~ law_zeta on the cone of `observe`
/// and tracks beta densities for `steps` steps. Requires
/// E[eta_0(0)] >= E[zeta_0(0)].
DiscrepancySeries discrepancy_decay(const EnvironmentSpec& spec, const SeedPolicy& policy,
                                    const InitialLaw& law_eta, const InitialLaw& law_zeta, SiteRange observe,
                                    std::int64_t steps, DiscrepancyOptions options = {});

/// step, beta_plus_density, beta_minus_density, beta_plus_stderr, beta_minus_stderr
void write_discrepancy_csv(std::ostream& os, const DiscrepancySeries& series);

struct MeetingOutcome {
  Site y = 0;
  Site z = 0;
  bool met = false;
  std::optional<std::int64_t> meeting_time;
  std::int64_t horizon = 0;
};

struct MeetingSummary {
  Site y = 0;
  Site z = 0;
  std::int64_t horizon = 0;
  std::vector<MeetingOutcome> outcomes;
  std::size_t met = 0;
  double fraction_met = 0.0;
  /// counts[k] = meetings with time in [2^k - 1, 2^(k+1) - 1).
  std::vector<std::size_t> histogram;

  /// Fraction of replicas that met at or before h (h <= horizon).
  double fraction_met_by(std::int64_t h) const;
};

/// Two independent walks from y and z in the same environment; replica r
/// uses walk seeds derived from (seed, r). Throws ParityError for odd z - y.
MeetingOutcome meet_once(EnvironmentWindow& window, Site y, Site z, std::int64_t horizon, std::uint64_t seed_y,
                         std::uint64_t seed_z);
MeetingSummary meeting_experiment(const Environment& env, Site y, Site z, std::int64_t horizon,
                                  std::size_t replicas, std::uint64_t seed);

}  // namespace rwre
