#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rwre/site.hpp"

namespace rwre {

/// P(omega_0 = low) = prob_low, otherwise high.
struct TwoPointLaw {
  double low = 0.0;
  double high = 0.0;
  double prob_low = 0.0;
};

struct Atom {
  double omega = 0.0;
  double prob = 0.0;
};

struct DiscreteLaw {
  std::vector<Atom> atoms;
};

enum class BaseDensity { Uniform, Beta };

/// Base density restricted (and renormalised) to [c, 1 - c].
/// Uniform uses (a, b) as the interval, Beta uses (a, b) as shape parameters.
struct TruncatedLaw {
  BaseDensity base = BaseDensity::Uniform;
  double a = 0.0;
  double b = 1.0;
};

using EnvironmentLaw = std::variant<TwoPointLaw, DiscreteLaw, TruncatedLaw>;

/// Law of a single site omega_0 together with the ellipticity constant c.
class EnvironmentSpec {
 public:
  /// When `ellipticity` is absent it defaults to the largest c compatible
  /// with the support. Throws InvalidSpec on malformed laws.
  explicit EnvironmentSpec(EnvironmentLaw law, std::optional<double> ellipticity = std::nullopt);

  static EnvironmentSpec two_point(double low, double high, double prob_low,
                                   std::optional<double> c = std::nullopt);
  static EnvironmentSpec constant(double omega, std::optional<double> c = std::nullopt);
  static EnvironmentSpec discrete(std::vector<Atom> atoms, std::optional<double> c = std::nullopt);
  static EnvironmentSpec truncated(BaseDensity base, double a, double b, double c);

  const EnvironmentLaw& law() const noexcept { return law_; }
  double ellipticity() const noexcept { return c_; }
  bool is_discrete() const noexcept { return !std::holds_alternative<TruncatedLaw>(law_); }

  /// Support points with their masses; empty for continuous laws.
  std::vector<Atom> atoms() const;

  /// Maps a uniform u in [0, 1) to a site value with the law of omega_0.
  double quantile(double u) const;

  /// E_P[rho_0^s], rho = (1 - omega) / omega.
  double rho_moment(double s) const;

  double prob_below_half() const;

  std::string describe() const;

 private:
  EnvironmentLaw law_;
  double c_ = 0.0;
  // Cached for truncated laws: base CDF at c and 1 - c.
  double cdf_lo_ = 0.0;
  double cdf_hi_ = 1.0;
};

double mean_rho(const EnvironmentSpec& spec);

struct ModelInvariants {
  double mean_rho = 0.0;
  double speed = 0.0;
  std::optional<double> s_exponent;
  /// |E rho^s - 1| at the returned exponent.
  std::optional<double> s_residual;
  bool nestling = false;
};

/// Speed, slowdown exponent and nestling flag. Throws AssumptionViolation
/// unless E rho < 1.
ModelInvariants compute_invariants(const EnvironmentSpec& spec);

/// Root of E rho^s = 1 on s > 1, or nullopt when P(rho > 1) = 0.
std::optional<double> solve_s_exponent(const EnvironmentSpec& spec);

/// A doubly infinite i.i.d. environment, evaluated lazily: omega_at(x) is a
/// pure function of (spec, seed, x). Immutable and safe to share.
class Environment {
 public:
  Environment(EnvironmentSpec spec, std::uint64_t seed);

  const EnvironmentSpec& spec() const noexcept { return spec_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double omega_at(Site x) const;

 private:
  EnvironmentSpec spec_;
  std::uint64_t seed_;
};

/// Materialised slice of an environment: site values, odds ratios and the
/// 32-bit Bernoulli thresholds used by the walk and particle kernels.
/// Grows on demand; not thread-safe, one per worker.
class EnvironmentWindow {
 public:
  explicit EnvironmentWindow(const Environment& env);
  EnvironmentWindow(const Environment& env, SiteRange range);

  const Environment& environment() const noexcept { return *env_; }
  SiteRange range() const noexcept { return {lo_, lo_ + static_cast<Site>(omega_.size()) - 1}; }

  /// Extends the materialised range to cover r (in chunks).
  void ensure(SiteRange r);

  double omega(Site x) {
    ensure_site(x);
    return omega_[static_cast<std::size_t>(x - lo_)];
  }
  double rho(Site x) {
    const double w = omega(x);
    return (1.0 - w) / w;
  }
  std::uint32_t threshold(Site x) {
    ensure_site(x);
    return threshold_[static_cast<std::size_t>(x - lo_)];
  }

  /// Unchecked access; x must lie in range().
  const std::uint32_t* threshold_data(Site x) const noexcept {
    return threshold_.data() + (x - lo_);
  }

 private:
  void ensure_site(Site x) {
    if (x < lo_ || x >= lo_ + static_cast<Site>(omega_.size())) ensure({x, x});
  }

  const Environment* env_;
  Site lo_ = 0;
  std::vector<double> omega_;
  std::vector<std::uint32_t> threshold_;
};

/// f(theta^x omega) over a window, truncated per site.
struct PotentialWindow {
  SiteRange range;
  std::vector<double> values;
  double tolerance = 0.0;
  /// Terms summed at range.lo (the deepest site).
  std::int64_t max_depth = 0;

  double at(Site x) const { return values.at(static_cast<std::size_t>(x - range.lo)); }
};

inline constexpr std::int64_t kDefaultPotentialDepthCap = 1'000'000;

/// f(theta^x omega) = (1/omega_x)(1 + sum_i prod_{j<=i} rho_{x+j}), every
/// sum cut at one common site D, the first past the window where
/// prod_{j=x+1}^{D} rho_j * m/(1-m) / c < tol holds for all x in the window
/// (m = E rho), i.e. the expected omitted tail is below tol at each site.
/// Values then satisfy the three-term identity up to rounding. Throws
/// AssumptionViolation when m >= 1 and DepthExceeded when D would lie more
/// than `depth_cap` sites past the window.
PotentialWindow compute_f(const Environment& env, SiteRange window, double tol,
                          std::int64_t depth_cap = kDefaultPotentialDepthCap);

/// |f_x - omega_{x-1} f_{x-1} - (1 - omega_{x+1}) f_{x+1}| at interior sites
/// of the window, in site order starting at range.lo + 1.
std::vector<double> potential_identity_residuals(const Environment& env, const PotentialWindow& f);

}  // namespace rwre
