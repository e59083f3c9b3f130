#include "rwre/particle_system.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "rwre/errors.hpp"

namespace rwre {

Configuration::Configuration(SiteRange window, Extent extent, std::int64_t time)
    : window_(window), extent_(extent), time_(time), counts_(static_cast<std::size_t>(window.size()), 0) {}

std::uint32_t Configuration::at(Site x) const {
  if (!window_.contains(x)) {
    if (extent_ == Extent::Complete) return 0;
    throw WindowTooSmall("site " + std::to_string(x) + " outside configuration window " + window_.str());
  }
  return counts_[static_cast<std::size_t>(x - window_.lo)];
}

void Configuration::set(Site x, std::uint32_t count) {
  if (!window_.contains(x)) {
    throw WindowTooSmall("site " + std::to_string(x) + " outside configuration window " + window_.str());
  }
  counts_[static_cast<std::size_t>(x - window_.lo)] = count;
}

std::uint64_t Configuration::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t Configuration::total(SiteRange r) const {
  if (extent_ == Extent::Restricted && !window_.contains(r)) {
    throw WindowTooSmall("range " + r.str() + " not inside window " + window_.str());
  }
  const SiteRange in = window_.intersect(r);
  std::uint64_t sum = 0;
  for (Site x = in.lo; x <= in.hi; ++x) sum += counts_[static_cast<std::size_t>(x - window_.lo)];
  return sum;
}

std::size_t Configuration::occupied() const noexcept {
  return static_cast<std::size_t>(std::count_if(counts_.begin(), counts_.end(), [](auto c) { return c > 0; }));
}

Configuration Configuration::restricted_to(SiteRange r) const {
  if (extent_ == Extent::Restricted && !window_.contains(r)) {
    throw WindowTooSmall("range " + r.str() + " not inside window " + window_.str());
  }
  const bool keeps_all = extent_ == Extent::Complete && total(r) == total();
  Configuration out(r, keeps_all ? Extent::Complete : Extent::Restricted, time_);
  out.seed_ = seed_;
  const SiteRange in = window_.intersect(r);
  for (Site x = in.lo; x <= in.hi; ++x) out.set(x, counts_[static_cast<std::size_t>(x - window_.lo)]);
  return out;
}

QuantileProduct QuantileProduct::make(std::vector<QuantileEntry> table, std::size_t support_cap) {
  if (table.empty()) throw InvalidSpec("quantile product: empty table");
  if (support_cap == 0) throw InvalidSpec("quantile product: support cap must be positive");
  for (auto& e : table) {
    if (e.pmf.size() > support_cap) e.pmf.resize(support_cap);
    double total = 0.0;
    for (double p : e.pmf) {
      if (!(p >= 0.0)) throw InvalidSpec("quantile product: negative probability");
      total += p;
    }
    if (!(total > 0.0)) throw InvalidSpec("quantile product: pmf has no mass");
    for (double& p : e.pmf) p /= total;
  }
  return QuantileProduct{std::move(table), support_cap};
}

const std::vector<double>& QuantileProduct::pmf_for(double omega) const {
  for (const auto& e : table) {
    if (std::fabs(e.omega - omega) <= 1e-12) return e.pmf;
  }
  throw InvalidSpec("quantile product: no table entry for omega = " + std::to_string(omega));
}

double initial_law_mean(const InitialLaw& law, const EnvironmentSpec& spec) {
  if (const auto* d = std::get_if<DeterministicConstant>(&law)) return d->count;
  if (const auto* p = std::get_if<PoissonConstant>(&law)) return p->mean;
  if (const auto* s = std::get_if<StationaryPoisson>(&law)) {
    return s->alpha / compute_invariants(spec).speed;
  }
  const auto& q = std::get<QuantileProduct>(law);
  if (!spec.is_discrete()) throw InvalidSpec("quantile product needs a discrete environment law");
  double mean = 0.0;
  for (const auto& a : spec.atoms()) {
    if (a.prob <= 0.0) continue;
    const auto& pmf = q.pmf_for(a.omega);
    double m = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) m += static_cast<double>(k) * pmf[k];
    mean += a.prob * m;
  }
  return mean;
}

Configuration sample_initial(const Environment& env, const InitialLaw& law, SiteRange window,
                             std::uint64_t config_seed) {
  Configuration out(window, Extent::Restricted, 0);
  out.set_seed(config_seed);
  auto counts = out.counts();

  if (const auto* d = std::get_if<DeterministicConstant>(&law)) {
    std::fill(counts.begin(), counts.end(), d->count);
    return out;
  }
  if (const auto* p = std::get_if<PoissonConstant>(&law)) {
    for (Site x = window.lo; x <= window.hi; ++x) {
      Stream s(config_seed, Domain::Config, static_cast<std::uint64_t>(x));
      counts[static_cast<std::size_t>(x - window.lo)] = sample_poisson(s, p->mean);
    }
    return out;
  }
  if (const auto* sp = std::get_if<StationaryPoisson>(&law)) {
    const auto f = compute_f(env, window, sp->f_tolerance);
    for (Site x = window.lo; x <= window.hi; ++x) {
      Stream s(config_seed, Domain::Config, static_cast<std::uint64_t>(x));
      counts[static_cast<std::size_t>(x - window.lo)] = sample_poisson(s, sp->alpha * f.at(x));
    }
    return out;
  }
  const auto& q = std::get<QuantileProduct>(law);
  EnvironmentWindow w(env, window);
  for (Site x = window.lo; x <= window.hi; ++x) {
    const double u = uniform_at(config_seed, Domain::Config, static_cast<std::uint64_t>(x));
    counts[static_cast<std::size_t>(x - window.lo)] = quantile_index(q.pmf_for(w.omega(x)), u);
  }
  return out;
}

std::uint64_t step_seed(std::uint64_t dyn_seed, Domain domain, std::int64_t time) noexcept {
  return derive_seed(dyn_seed, domain, static_cast<std::uint64_t>(time));
}

Evolver::Evolver(const Environment& env, Configuration initial, std::uint64_t dyn_seed)
    : env_window_(env, initial.window().padded(1)), current_(std::move(initial)), dyn_seed_(dyn_seed) {}

void Evolver::step() {
  const SiteRange from = current_.window();
  const std::uint64_t seed = step_seed(dyn_seed_, Domain::Dynamics, current_.time());
  const auto src = current_.counts();

  if (current_.extent() == Extent::Restricted) {
    const SiteRange to = from.shrunk(1);
    Configuration next(to.empty() ? SiteRange{} : to, Extent::Restricted, current_.time() + 1);
    next.set_seed(current_.seed());
    if (!to.empty()) {
      env_window_.ensure(from);
      auto dst = next.counts();
      for (Site x = from.lo; x <= from.hi; ++x) {
        const std::uint32_t k = src[static_cast<std::size_t>(x - from.lo)];
        if (k == 0) continue;
        ++work_;
        const std::uint32_t right = right_movers(seed, Domain::Dynamics, x, k, *env_window_.threshold_data(x));
        if (x + 1 <= to.hi && x + 1 >= to.lo) dst[static_cast<std::size_t>(x + 1 - to.lo)] += right;
        if (x - 1 >= to.lo && x - 1 <= to.hi) dst[static_cast<std::size_t>(x - 1 - to.lo)] += k - right;
      }
    }
    current_ = std::move(next);
    return;
  }

  // Complete: the new configuration lives on the occupied hull padded by one.
  Site first = from.hi + 1;
  Site last = from.lo - 1;
  for (Site x = from.lo; x <= from.hi; ++x) {
    if (src[static_cast<std::size_t>(x - from.lo)] > 0) {
      first = std::min(first, x);
      last = x;
    }
  }
  if (first > last) {
    current_.set_time(current_.time() + 1);
    return;
  }
  const SiteRange to{first - 1, last + 1};
  env_window_.ensure({first, last});
  Configuration next(to, Extent::Complete, current_.time() + 1);
  next.set_seed(current_.seed());
  auto dst = next.counts();
  for (Site x = first; x <= last; ++x) {
    const std::uint32_t k = src[static_cast<std::size_t>(x - from.lo)];
    if (k == 0) continue;
    ++work_;
    const std::uint32_t right = right_movers(seed, Domain::Dynamics, x, k, *env_window_.threshold_data(x));
    dst[static_cast<std::size_t>(x + 1 - to.lo)] += right;
    dst[static_cast<std::size_t>(x - 1 - to.lo)] += k - right;
  }
  current_ = std::move(next);
}

void Evolver::advance(std::int64_t steps) {
  for (std::int64_t t = 0; t < steps; ++t) step();
}

Configuration evolve(const Environment& env, const Configuration& config, std::int64_t steps,
                     std::uint64_t dyn_seed) {
  if (steps < 0) throw std::invalid_argument("evolve: negative step count");
  if (config.extent() == Extent::Restricted && config.window().size() <= 2 * steps) {
    throw WindowTooSmall("window " + config.window().str() + " is exhausted after " + std::to_string(steps) +
                         " steps");
  }
  Evolver ev(env, config, dyn_seed);
  ev.advance(steps);
  return ev.current();
}

Configuration evolve(const Environment& env, const Configuration& config, std::int64_t steps,
                     std::uint64_t dyn_seed, SiteRange observe) {
  if (config.extent() == Extent::Restricted && !config.window().shrunk(steps).contains(observe)) {
    throw WindowTooSmall("observation window " + observe.str() + " is not covered by the " +
                         std::to_string(steps) + "-step cone of " + config.window().str());
  }
  if (config.extent() == Extent::Restricted) {
    // Only the cone of the observation window matters.
    Evolver ev(env, config.restricted_to(cone_window(observe, steps)), dyn_seed);
    ev.advance(steps);
    return ev.current().restricted_to(observe);
  }
  Evolver ev(env, config, dyn_seed);
  ev.advance(steps);
  return ev.current().restricted_to(observe);
}

SiteRange scaled_range(double N, double a, double b) noexcept {
  return {static_cast<Site>(std::floor(N * a)) + 1, static_cast<Site>(std::floor(N * b))};
}

double empirical_pairing(const Configuration& config, double N, const TestFunction& g, double a, double b) {
  const SiteRange sites = scaled_range(N, a, b);
  if (config.extent() == Extent::Restricted && !config.window().contains(sites)) {
    throw WindowTooSmall("pairing range " + sites.str() + " not inside window " + config.window().str());
  }
  const SiteRange in = config.window().intersect(sites);
  const auto counts = config.counts();
  double sum = 0.0;
  for (Site x = in.lo; x <= in.hi; ++x) {
    const std::uint32_t k = counts[static_cast<std::size_t>(x - config.window().lo)];
    if (k != 0) sum += static_cast<double>(k) * g(static_cast<double>(x) / N);
  }
  return sum / N;
}

double empirical_pairing(const Configuration& config, double N, const TestFunction& g) {
  const auto [lo, hi] = g.support();
  return empirical_pairing(config, N, g, lo, hi);
}

Configuration synthesize_profile_config(const Profile& profile, double N, std::uint64_t seed, SynthesisMode mode,
                                        std::optional<SiteRange> window) {
  const auto [lo, hi] = profile.support();
  const SiteRange cover{static_cast<Site>(std::floor(N * lo)), static_cast<Site>(std::ceil(N * hi))};
  const SiteRange w = window.value_or(cover);
  Configuration out(w, w.contains(cover) ? Extent::Complete : Extent::Restricted, 0);
  out.set_seed(seed);
  auto counts = out.counts();
  for (Site x = w.lo; x <= w.hi; ++x) {
    const double mean = profile(static_cast<double>(x) / N);
    if (!(mean > 0.0)) continue;
    std::uint32_t k = 0;
    if (mode == SynthesisMode::Floor) {
      k = static_cast<std::uint32_t>(std::floor(mean));
    } else {
      Stream s(seed, Domain::Config, static_cast<std::uint64_t>(x));
      k = sample_poisson(s, mean);
    }
    counts[static_cast<std::size_t>(x - w.lo)] = k;
  }
  return out;
}

void write_configuration(std::ostream& os, const Configuration& config) {
  os << "# rwre configuration v1\n";
  os << "# window " << config.window().lo << ' ' << config.window().hi << '\n';
  os << "# time " << config.time() << '\n';
  os << "# extent " << (config.extent() == Extent::Complete ? "complete" : "restricted") << '\n';
  if (config.seed()) {
    os << "# seed " << *config.seed() << '\n';
  } else {
    os << "# seed none\n";
  }
  const auto counts = config.counts();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] != 0) os << config.window().lo + static_cast<Site>(i) << ' ' << counts[i] << '\n';
  }
}

Configuration read_configuration(std::istream& is) {
  std::string line;
  std::optional<SiteRange> window;
  std::int64_t time = 0;
  Extent extent = Extent::Restricted;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<Site, std::uint32_t>> entries;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw IOError("configuration line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "window") {
        SiteRange r;
        if (!(ls >> r.lo >> r.hi)) fail("bad window");
        window = r;
      } else if (key == "time") {
        if (!(ls >> time)) fail("bad time");
      } else if (key == "extent") {
        std::string e;
        ls >> e;
        if (e == "complete") extent = Extent::Complete;
        else if (e == "restricted") extent = Extent::Restricted;
        else fail("bad extent '" + e + "'");
      } else if (key == "seed") {
        std::string v;
        ls >> v;
        if (v != "none") {
          try {
            seed = std::stoull(v);
          } catch (const std::exception&) {
            fail("bad seed");
          }
        }
      }
      continue;
    }
    Site x = 0;
    long long c = 0;
    if (!(ls >> x >> c) || c < 0) fail("expected 'site count'");
    entries.emplace_back(x, static_cast<std::uint32_t>(c));
  }
  if (!window) throw IOError("configuration: missing '# window' header");
  Configuration out(*window, extent, time);
  out.set_seed(seed);
  for (const auto& [x, c] : entries) {
    if (!window->contains(x)) throw IOError("configuration: site " + std::to_string(x) + " outside window");
    out.set(x, c);
  }
  return out;
}

}  // namespace rwre
