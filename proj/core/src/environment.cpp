#include "rwre/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rwre/errors.hpp"
#include "rwre/random.hpp"

namespace rwre {

namespace {

constexpr double kProbSumTolerance = 1e-12;

double base_cdf(const TruncatedLaw& law, double w) {
  if (law.base == BaseDensity::Uniform) {
    return std::clamp((w - law.a) / (law.b - law.a), 0.0, 1.0);
  }
  return boost::math::cdf(boost::math::beta_distribution<double>(law.a, law.b), w);
}

double base_pdf(const TruncatedLaw& law, double w) {
  if (law.base == BaseDensity::Uniform) {
    return (w >= law.a && w <= law.b) ? 1.0 / (law.b - law.a) : 0.0;
  }
  return boost::math::pdf(boost::math::beta_distribution<double>(law.a, law.b), w);
}

double base_quantile(const TruncatedLaw& law, double p) {
  if (law.base == BaseDensity::Uniform) return law.a + p * (law.b - law.a);
  return boost::math::quantile(boost::math::beta_distribution<double>(law.a, law.b), p);
}

// Integral of h(w) * density over [lo, hi] with relative error ~1e-10 or better.
template <class F>
double integrate(F&& h, double lo, double hi) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(h, lo, hi, 20, 1e-13);
}

std::vector<Atom> normalised_atoms(const EnvironmentLaw& law) {
  if (const auto* tp = std::get_if<TwoPointLaw>(&law)) {
    if (tp->low == tp->high) return {{tp->low, 1.0}};
    return {{tp->low, tp->prob_low}, {tp->high, 1.0 - tp->prob_low}};
  }
  if (const auto* d = std::get_if<DiscreteLaw>(&law)) return d->atoms;
  return {};
}

}  // namespace

EnvironmentSpec::EnvironmentSpec(EnvironmentLaw law, std::optional<double> ellipticity)
    : law_(std::move(law)) {
  if (const auto* tp = std::get_if<TwoPointLaw>(&law_)) {
    if (!(tp->prob_low >= 0.0 && tp->prob_low <= 1.0)) {
      throw InvalidSpec("two_point: prob must lie in [0, 1]");
    }
  }
  if (const auto* t = std::get_if<TruncatedLaw>(&law_)) {
    if (!ellipticity) throw InvalidSpec("truncated law requires an explicit ellipticity constant c");
    if (t->base == BaseDensity::Uniform && !(t->a < t->b)) {
      throw InvalidSpec("truncated uniform: need a < b");
    }
    if (t->base == BaseDensity::Beta && !(t->a > 0.0 && t->b > 0.0)) {
      throw InvalidSpec("truncated beta: shape parameters must be positive");
    }
  }

  const auto atoms = normalised_atoms(law_);
  if (is_discrete()) {
    if (atoms.empty()) throw InvalidSpec("discrete law has no atoms");
    double total = 0.0;
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& a : atoms) {
      if (!(a.omega > 0.0 && a.omega < 1.0)) throw InvalidSpec("support points must lie in (0, 1)");
      if (!(a.prob >= 0.0)) throw InvalidSpec("atom probabilities must be non-negative");
      total += a.prob;
      if (a.prob > 0.0) {
        lo = std::min(lo, a.omega);
        hi = std::max(hi, a.omega);
      }
    }
    if (std::fabs(total - 1.0) > kProbSumTolerance) {
      throw InvalidSpec("atom probabilities sum to " + std::to_string(total) + ", not 1");
    }
    c_ = ellipticity.value_or(std::min(lo, 1.0 - hi));
    if (!(c_ > 0.0 && c_ <= 0.5)) throw InvalidSpec("ellipticity constant must lie in (0, 1/2]");
    if (lo < c_ || hi > 1.0 - c_) {
      throw InvalidSpec("support point outside [c, 1-c] with c = " + std::to_string(c_));
    }
    return;
  }

  c_ = *ellipticity;
  if (!(c_ > 0.0 && c_ < 0.5)) throw InvalidSpec("truncated law needs c in (0, 1/2)");
  const auto& t = std::get<TruncatedLaw>(law_);
  cdf_lo_ = base_cdf(t, c_);
  cdf_hi_ = base_cdf(t, 1.0 - c_);
  if (!(cdf_hi_ - cdf_lo_ > 0.0)) throw InvalidSpec("base density has no mass on [c, 1-c]");
}

EnvironmentSpec EnvironmentSpec::two_point(double low, double high, double prob_low,
                                           std::optional<double> c) {
  return EnvironmentSpec(TwoPointLaw{low, high, prob_low}, c);
}

EnvironmentSpec EnvironmentSpec::constant(double omega, std::optional<double> c) {
  return EnvironmentSpec(DiscreteLaw{{{omega, 1.0}}}, c);
}

EnvironmentSpec EnvironmentSpec::discrete(std::vector<Atom> atoms, std::optional<double> c) {
  return EnvironmentSpec(DiscreteLaw{std::move(atoms)}, c);
}

EnvironmentSpec EnvironmentSpec::truncated(BaseDensity base, double a, double b, double c) {
  return EnvironmentSpec(TruncatedLaw{base, a, b}, c);
}

std::vector<Atom> EnvironmentSpec::atoms() const { return normalised_atoms(law_); }

double EnvironmentSpec::quantile(double u) const {
  if (const auto* tp = std::get_if<TwoPointLaw>(&law_)) {
    return u < tp->prob_low ? tp->low : tp->high;
  }
  if (const auto* d = std::get_if<DiscreteLaw>(&law_)) {
    double cdf = 0.0;
    for (const auto& a : d->atoms) {
      cdf += a.prob;
      if (u < cdf) return a.omega;
    }
    for (auto it = d->atoms.rbegin(); it != d->atoms.rend(); ++it) {
      if (it->prob > 0.0) return it->omega;
    }
    return d->atoms.back().omega;
  }
  const auto& t = std::get<TruncatedLaw>(law_);
  const double w = base_quantile(t, cdf_lo_ + u * (cdf_hi_ - cdf_lo_));
  return std::clamp(w, c_, 1.0 - c_);
}

double EnvironmentSpec::rho_moment(double s) const {
  if (is_discrete()) {
    // Sum small terms first so the result is independent of atom order.
    std::vector<double> terms;
    for (const auto& a : atoms()) {
      if (a.prob > 0.0) terms.push_back(a.prob * std::pow((1.0 - a.omega) / a.omega, s));
    }
    std::sort(terms.begin(), terms.end());
    return std::accumulate(terms.begin(), terms.end(), 0.0);
  }
  const auto& t = std::get<TruncatedLaw>(law_);
  const double mass = cdf_hi_ - cdf_lo_;
  auto h = [&](double w) { return std::pow((1.0 - w) / w, s) * base_pdf(t, w); };
  // Split at 1/2 where rho crosses 1; both halves are smooth.
  double total = 0.0;
  if (c_ < 0.5) total += integrate(h, c_, 0.5) + integrate(h, 0.5, 1.0 - c_);
  return total / mass;
}

double EnvironmentSpec::prob_below_half() const {
  if (is_discrete()) {
    double p = 0.0;
    for (const auto& a : atoms()) {
      if (a.omega < 0.5) p += a.prob;
    }
    return p;
  }
  const auto& t = std::get<TruncatedLaw>(law_);
  return (base_cdf(t, 0.5) - cdf_lo_) / (cdf_hi_ - cdf_lo_);
}

std::string EnvironmentSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (const auto* tp = std::get_if<TwoPointLaw>(&law_)) {
    os << "two_point(" << tp->low << ", " << tp->high << "; q=" << tp->prob_low << ")";
  } else if (const auto* d = std::get_if<DiscreteLaw>(&law_)) {
    os << "discrete(";
    for (std::size_t i = 0; i < d->atoms.size(); ++i) {
      os << (i ? ", " : "") << d->atoms[i].omega << ":" << d->atoms[i].prob;
    }
    os << ")";
  } else {
    const auto& t = std::get<TruncatedLaw>(law_);
    os << (t.base == BaseDensity::Uniform ? "truncated_uniform(" : "truncated_beta(") << t.a << ", "
       << t.b << ")";
  }
  os << " c=" << c_;
  return os.str();
}

double mean_rho(const EnvironmentSpec& spec) { return spec.rho_moment(1.0); }

std::optional<double> solve_s_exponent(const EnvironmentSpec& spec) {
  if (!(spec.prob_below_half() > 0.0)) return std::nullopt;
  if (!(mean_rho(spec) < 1.0)) return std::nullopt;

  constexpr double kResidual = 1e-10;
  auto g = [&](double s) { return spec.rho_moment(s) - 1.0; };
  double lo = 1.0 + 1e-6;
  double hi = 64.0;
  // P(rho > 1) > 0 forces E rho^s -> infinity, so doubling terminates; it
  // only triggers for laws with very little mass below 1/2.
  while (g(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return std::nullopt;
  }
  double best = hi;
  double best_res = std::fabs(g(hi));
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (std::fabs(gm) < best_res) {
      best = mid;
      best_res = std::fabs(gm);
    }
    if (best_res <= kResidual * 1e-3) break;
    (gm < 0.0 ? lo : hi) = mid;
  }
  return best;
}

ModelInvariants compute_invariants(const EnvironmentSpec& spec) {
  ModelInvariants inv;
  inv.mean_rho = mean_rho(spec);
  if (!(inv.mean_rho < 1.0)) {
    throw AssumptionViolation("E[rho] = " + std::to_string(inv.mean_rho) +
                              " >= 1: walks are not transient to the right");
  }
  inv.speed = (1.0 - inv.mean_rho) / (1.0 + inv.mean_rho);
  inv.nestling = spec.prob_below_half() > 0.0;
  inv.s_exponent = solve_s_exponent(spec);
  if (inv.s_exponent) inv.s_residual = std::fabs(spec.rho_moment(*inv.s_exponent) - 1.0);
  return inv;
}

Environment::Environment(EnvironmentSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {}

double Environment::omega_at(Site x) const {
  return spec_.quantile(uniform_at(seed_, Domain::Environment, static_cast<std::uint64_t>(x)));
}

EnvironmentWindow::EnvironmentWindow(const Environment& env) : env_(&env) {}

EnvironmentWindow::EnvironmentWindow(const Environment& env, SiteRange range) : env_(&env) {
  ensure(range);
}

void EnvironmentWindow::ensure(SiteRange r) {
  if (r.empty()) return;
  constexpr Site kChunk = 256;
  const Site cur_hi = lo_ + static_cast<Site>(omega_.size()) - 1;
  if (!omega_.empty() && r.lo >= lo_ && r.hi <= cur_hi) return;

  Site new_lo = r.lo;
  Site new_hi = r.hi;
  if (!omega_.empty()) {
    if (r.lo < lo_) new_lo = std::min(r.lo, lo_ - std::max<Site>(kChunk, static_cast<Site>(omega_.size()) / 2));
    else new_lo = lo_;
    if (r.hi > cur_hi) new_hi = std::max(r.hi, cur_hi + std::max<Site>(kChunk, static_cast<Site>(omega_.size()) / 2));
    else new_hi = cur_hi;
  }

  std::vector<double> omega(static_cast<std::size_t>(new_hi - new_lo + 1));
  std::vector<std::uint32_t> thr(omega.size());
  for (Site x = new_lo; x <= new_hi; ++x) {
    const auto i = static_cast<std::size_t>(x - new_lo);
    if (!omega_.empty() && x >= lo_ && x <= cur_hi) {
      omega[i] = omega_[static_cast<std::size_t>(x - lo_)];
      thr[i] = threshold_[static_cast<std::size_t>(x - lo_)];
    } else {
      omega[i] = env_->omega_at(x);
      thr[i] = bernoulli_threshold(omega[i]);
    }
  }
  lo_ = new_lo;
  omega_ = std::move(omega);
  threshold_ = std::move(thr);
}

PotentialWindow compute_f(const Environment& env, SiteRange window, double tol, std::int64_t depth_cap) {
  if (!(tol > 0.0)) throw InvalidSpec("compute_f: tolerance must be positive");
  const double m = mean_rho(env.spec());
  if (!(m < 1.0)) {
    throw AssumptionViolation("compute_f requires E[rho] < 1, got " + std::to_string(m));
  }
  const double tail_factor = m / (1.0 - m) / env.spec().ellipticity();

  PotentialWindow out;
  out.range = window;
  out.tolerance = tol;
  if (window.empty()) return out;

  // One right endpoint D serves the whole window: it is pushed out until the
  // tail criterion holds for every x in the window at depth D - x. The sums
  // then follow from omega_x f_x = 1 + rho_{x+1} omega_{x+1} f_{x+1}, so
  // neighbouring values share their truncation. Products are kept as logs.
  EnvironmentWindow w(env, {window.lo, window.hi + 64});
  double suffix = 0.0;  // log prod_{j=x+1}^{hi} rho_j
  double worst = 0.0;
  for (Site x = window.hi - 1; x >= window.lo; --x) {
    suffix += std::log(w.rho(x + 1));
    worst = std::max(worst, suffix);
  }
  const double log_limit = std::log(tol / tail_factor);
  Site end = window.hi;
  double beyond = 0.0;  // log prod_{j=hi+1}^{end} rho_j
  while (worst + beyond >= log_limit) {
    if (end - window.hi >= depth_cap) {
      throw DepthExceeded("potential series past site " + std::to_string(window.hi) + " exceeded " +
                          std::to_string(depth_cap) + " terms");
    }
    ++end;
    beyond += std::log(w.rho(end));
  }
  out.max_depth = end - window.lo;

  out.values.assign(static_cast<std::size_t>(window.size()), 0.0);
  double sum = 1.0;  // 1 + sum_{i>=1} prod_{j<=i} rho_{x+j}, truncated at end
  for (Site x = end; x >= window.lo; --x) {
    if (x < end) sum = 1.0 + w.rho(x + 1) * sum;
    if (x <= window.hi) out.values[static_cast<std::size_t>(x - window.lo)] = sum / w.omega(x);
  }
  return out;
}

std::vector<double> potential_identity_residuals(const Environment& env, const PotentialWindow& f) {
  std::vector<double> res;
  if (f.range.size() < 3) return res;
  EnvironmentWindow w(env, f.range);
  res.reserve(static_cast<std::size_t>(f.range.size() - 2));
  for (Site x = f.range.lo + 1; x < f.range.hi; ++x) {
    const double rhs = w.omega(x - 1) * f.at(x - 1) + (1.0 - w.omega(x + 1)) * f.at(x + 1);
    res.push_back(std::fabs(f.at(x) - rhs));
  }
  return res;
}

}  // namespace rwre
