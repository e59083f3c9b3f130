#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/functions.hpp"
#include "rwre/random.hpp"
#include "rwre/site.hpp"

namespace rwre {

/// Restricted: the window is a view of an infinite system, so sites outside
/// it are unknown and evolution loses one site per side per step.
/// Complete: every particle lies inside the window, outside is empty, and
/// evolution is exact on the growing cone.
enum class Extent { Restricted, Complete };

/// Particle counts on a finite window. Stored densely; zero sites are
/// "absent" in the sparse text form.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(SiteRange window, Extent extent = Extent::Restricted, std::int64_t time = 0);

  SiteRange window() const noexcept { return window_; }
  Extent extent() const noexcept { return extent_; }
  std::int64_t time() const noexcept { return time_; }
  void set_time(std::int64_t t) noexcept { time_ = t; }
  std::optional<std::uint64_t> seed() const noexcept { return seed_; }
  void set_seed(std::optional<std::uint64_t> s) noexcept { seed_ = s; }

  /// Count at x. Outside the window: 0 for Complete, WindowTooSmall otherwise.
  std::uint32_t at(Site x) const;
  void set(Site x, std::uint32_t count);

  std::span<const std::uint32_t> counts() const noexcept { return counts_; }
  std::span<std::uint32_t> counts() noexcept { return counts_; }

  std::uint64_t total() const noexcept;
  std::uint64_t total(SiteRange r) const;
  std::size_t occupied() const noexcept;

  /// Copy restricted to r, which must lie inside the window (or anywhere for
  /// Complete configurations). The copy is Restricted unless it still holds
  /// every particle.
  Configuration restricted_to(SiteRange r) const;

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  SiteRange window_{};
  Extent extent_ = Extent::Restricted;
  std::int64_t time_ = 0;
  std::optional<std::uint64_t> seed_;
  std::vector<std::uint32_t> counts_;
};

struct DeterministicConstant {
  std::uint32_t count = 1;
};

struct PoissonConstant {
  double mean = 1.0;
};

/// Poisson(alpha * f(theta^x omega)) at site x.
struct StationaryPoisson {
  double alpha = 1.0;
  double f_tolerance = 1e-10;
};

struct QuantileEntry {
  double omega = 0.0;
  std::vector<double> pmf;
};

/// Site law chosen by the local environment value from a finite table.
/// Pmfs are truncated to `support_cap` points and renormalised by make().
struct QuantileProduct {
  std::vector<QuantileEntry> table;
  std::size_t support_cap = 64;

  static QuantileProduct make(std::vector<QuantileEntry> table, std::size_t support_cap = 64);
  const std::vector<double>& pmf_for(double omega) const;
};

using InitialLaw = std::variant<DeterministicConstant, PoissonConstant, StationaryPoisson, QuantileProduct>;

/// Averaged mean E[eta_0(0)] of the law under the environment law.
double initial_law_mean(const InitialLaw& law, const EnvironmentSpec& spec);

/// Product configuration on `window` with site x distributed as the law at
/// theta^x omega, drawn as F(Q, U_x) from one stream keyed on (config_seed, x).
Configuration sample_initial(const Environment& env, const InitialLaw& law, SiteRange window,
                             std::uint64_t config_seed);

/// Seeds for one step's binomial splits: site x at time t uses the stream
/// (step_seed(dyn_seed, t), domain, x).
std::uint64_t step_seed(std::uint64_t dyn_seed, Domain domain, std::int64_t time) noexcept;

/// Number of the `count` particles at x that jump right.
inline std::uint32_t right_movers(std::uint64_t step_seed, Domain domain, Site x, std::uint32_t count,
                                  std::uint32_t threshold) noexcept {
  Stream s(step_seed, domain, static_cast<std::uint64_t>(x));
  return sample_binomial(s, count, threshold);
}

/// Steps a configuration in place, one binomial split per occupied site.
/// Restricted windows shrink by one site per side per step; Complete ones
/// follow the occupied hull.
class Evolver {
 public:
  Evolver(const Environment& env, Configuration initial, std::uint64_t dyn_seed);

  void step();
  void advance(std::int64_t steps);
  const Configuration& current() const noexcept { return current_; }
  /// Site-steps processed so far.
  std::uint64_t work() const noexcept { return work_; }

 private:
  EnvironmentWindow env_window_;
  Configuration current_;
  std::uint64_t dyn_seed_;
  std::uint64_t work_ = 0;
};

Configuration evolve(const Environment& env, const Configuration& config, std::int64_t steps,
                     std::uint64_t dyn_seed);

/// Evolves and returns the configuration on `observe`; throws WindowTooSmall
/// unless observe lies in the dependence cone of the input window.
Configuration evolve(const Environment& env, const Configuration& config, std::int64_t steps,
                     std::uint64_t dyn_seed, SiteRange observe);

/// Input window needed to observe `observe` exactly after `steps` steps.
constexpr SiteRange cone_window(SiteRange observe, std::int64_t steps) noexcept { return observe.padded(steps); }

/// Sites floor(N a) + 1 .. floor(N b).
SiteRange scaled_range(double N, double a, double b) noexcept;

/// (1/N) sum_{x = floor(Na)+1}^{floor(Nb)} eta(x) g(x/N).
double empirical_pairing(const Configuration& config, double N, const TestFunction& g, double a, double b);
/// Pairing over the support of g.
double empirical_pairing(const Configuration& config, double N, const TestFunction& g);

enum class SynthesisMode { Poisson, Floor };

/// Configuration whose scaled empirical measure approximates prof(y) dy:
/// counts(x) ~ Poisson(prof(x/N)) independently, or floor(prof(x/N)).
/// The default window covers N * support(prof), giving a Complete configuration.
Configuration synthesize_profile_config(const Profile& profile, double N, std::uint64_t seed,
                                        SynthesisMode mode = SynthesisMode::Poisson,
                                        std::optional<SiteRange> window = std::nullopt);

/// Sparse text form: '#'-prefixed header (window, time, extent, seed) then
/// one "site count" line per occupied site in increasing site order.
void write_configuration(std::ostream& os, const Configuration& config);
Configuration read_configuration(std::istream& is);

}  // namespace rwre
