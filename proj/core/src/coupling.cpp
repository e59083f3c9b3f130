#include "rwre/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rwre/errors.hpp"
#include "rwre/parallel.hpp"
#include "rwre/random.hpp"

namespace rwre {

CoupledConfiguration::CoupledConfiguration(SiteRange window, Extent extent, std::int64_t time)
    : window_(window),
      extent_(extent),
      time_(time),
      xi_(static_cast<std::size_t>(window.size()), 0),
      plus_(xi_.size(), 0),
      minus_(xi_.size(), 0) {}

Configuration CoupledConfiguration::eta() const {
  Configuration c(window_, extent_, time_);
  auto out = c.counts();
  for (std::size_t i = 0; i < xi_.size(); ++i) out[i] = xi_[i] + plus_[i];
  return c;
}

Configuration CoupledConfiguration::zeta() const {
  Configuration c(window_, extent_, time_);
  auto out = c.counts();
  for (std::size_t i = 0; i < xi_.size(); ++i) out[i] = xi_[i] + minus_[i];
  return c;
}

namespace {

std::uint64_t range_sum(const std::vector<std::uint32_t>& v, SiteRange window, SiteRange r) {
  if (!window.contains(r)) throw WindowTooSmall("range " + r.str() + " not inside window " + window.str());
  std::uint64_t s = 0;
  for (Site x = r.lo; x <= r.hi; ++x) s += v[static_cast<std::size_t>(x - window.lo)];
  return s;
}

}  // namespace

std::uint64_t CoupledConfiguration::plus_count(SiteRange r) const { return range_sum(plus_, window_, r); }
std::uint64_t CoupledConfiguration::minus_count(SiteRange r) const { return range_sum(minus_, window_, r); }

std::uint64_t CoupledConfiguration::total_particles() const noexcept {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < xi_.size(); ++i) s += 2ull * xi_[i] + plus_[i] + minus_[i];
  return s;
}

bool CoupledConfiguration::complementary() const noexcept {
  for (std::size_t i = 0; i < xi_.size(); ++i) {
    if (plus_[i] != 0 && minus_[i] != 0) return false;
  }
  return true;
}

CoupledConfiguration couple_initial(const Configuration& eta, const Configuration& zeta) {
  if (eta.window() != zeta.window()) {
    throw WindowMismatch("cannot couple configurations on " + eta.window().str() + " and " +
                         zeta.window().str());
  }
  const Extent extent =
      eta.extent() == Extent::Complete && zeta.extent() == Extent::Complete ? Extent::Complete : Extent::Restricted;
  CoupledConfiguration cc(eta.window(), extent, std::max(eta.time(), zeta.time()));
  const auto a = eta.counts();
  const auto b = zeta.counts();
  for (std::size_t i = 0; i < a.size(); ++i) {
    cc.xi()[i] = std::min(a[i], b[i]);
    cc.beta_plus()[i] = a[i] > b[i] ? a[i] - b[i] : 0;
    cc.beta_minus()[i] = b[i] > a[i] ? b[i] - a[i] : 0;
  }
  return cc;
}

CoupledEvolver::CoupledEvolver(const Environment& env, CoupledConfiguration initial, std::uint64_t dyn_seed)
    : env_window_(env, initial.window().padded(1)), current_(std::move(initial)), dyn_seed_(dyn_seed) {}

void CoupledEvolver::step() {
  const SiteRange from = current_.window();
  const std::int64_t t = current_.time();
  const std::uint64_t seed0 = step_seed(dyn_seed_, Domain::Dynamics, t);
  const std::uint64_t seed_plus = step_seed(dyn_seed_, Domain::DynamicsPlus, t);
  const std::uint64_t seed_minus = step_seed(dyn_seed_, Domain::DynamicsMinus, t);

  SiteRange to = from.shrunk(1);
  SiteRange source = from;
  if (current_.extent() == Extent::Complete) {
    Site first = from.hi + 1;
    Site last = from.lo - 1;
    for (Site x = from.lo; x <= from.hi; ++x) {
      const auto i = static_cast<std::size_t>(x - from.lo);
      if (current_.xi()[i] + current_.beta_plus()[i] + current_.beta_minus()[i] > 0) {
        first = std::min(first, x);
        last = x;
      }
    }
    if (first > last) {
      current_ = CoupledConfiguration(from, Extent::Complete, t + 1);
      return;
    }
    source = {first, last};
    to = source.padded(1);
  }
  if (to.empty()) {
    current_ = CoupledConfiguration(SiteRange{}, current_.extent(), t + 1);
    return;
  }
  env_window_.ensure(source);

  const std::size_t n = static_cast<std::size_t>(to.size());
  std::vector<std::uint32_t> xi_arr(n, 0), plus_arr(n, 0), minus_arr(n, 0);
  auto deposit = [&](std::vector<std::uint32_t>& arr, Site x, std::uint32_t count) {
    if (count != 0 && to.contains(x)) arr[static_cast<std::size_t>(x - to.lo)] += count;
  };
  for (Site x = source.lo; x <= source.hi; ++x) {
    const auto i = static_cast<std::size_t>(x - from.lo);
    const std::uint32_t thr = *env_window_.threshold_data(x);
    if (const std::uint32_t k = current_.xi()[i]) {
      const std::uint32_t r = right_movers(seed0, Domain::Dynamics, x, k, thr);
      deposit(xi_arr, x + 1, r);
      deposit(xi_arr, x - 1, k - r);
    }
    if (const std::uint32_t k = current_.beta_plus()[i]) {
      const std::uint32_t r = right_movers(seed_plus, Domain::DynamicsPlus, x, k, thr);
      deposit(plus_arr, x + 1, r);
      deposit(plus_arr, x - 1, k - r);
    }
    if (const std::uint32_t k = current_.beta_minus()[i]) {
      const std::uint32_t r = right_movers(seed_minus, Domain::DynamicsMinus, x, k, thr);
      deposit(minus_arr, x + 1, r);
      deposit(minus_arr, x - 1, k - r);
    }
  }

  CoupledConfiguration next(to, current_.extent(), t + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t p = plus_arr[i];
    const std::uint32_t m = minus_arr[i];
    next.xi()[i] = xi_arr[i] + std::min(p, m);
    next.beta_plus()[i] = p > m ? p - m : 0;
    next.beta_minus()[i] = m > p ? m - p : 0;
  }
  current_ = std::move(next);
}

CoupledConfiguration coupled_step(const Environment& env, const CoupledConfiguration& cc, std::uint64_t dyn_seed) {
  if (cc.extent() == Extent::Restricted && cc.window().size() < 3) {
    throw WindowTooSmall("coupled window " + cc.window().str() + " too small for a step");
  }
  CoupledEvolver ev(env, cc, dyn_seed);
  ev.step();
  return ev.current();
}

DiscrepancySeries discrepancy_decay(const EnvironmentSpec& spec, const SeedPolicy& policy,
                                    const InitialLaw& law_eta, const InitialLaw& law_zeta, SiteRange observe,
                                    std::int64_t steps, DiscrepancyOptions options) {
  if (steps < 0) throw std::invalid_argument("discrepancy_decay: negative step count");
  if (observe.empty()) throw std::invalid_argument("discrepancy_decay: empty observation window");
  if (policy.replicas < 2) throw std::invalid_argument("discrepancy_decay: need at least two replicas");
  const double mean_eta = initial_law_mean(law_eta, spec);
  const double mean_zeta = initial_law_mean(law_zeta, spec);
  if (mean_eta < mean_zeta * (1.0 - 1e-9)) {
    throw std::invalid_argument("discrepancy_decay: requires E[eta_0(0)] >= E[zeta_0(0)]");
  }

  const auto T = static_cast<std::size_t>(steps);
  const double width = static_cast<double>(observe.size());
  struct Track {
    std::vector<double> plus, minus;
  };
  auto tracks = map_replicas(policy.replicas, [&](std::size_t r) {
    Environment env(spec, policy.env_seed(r));
    const SiteRange window = cone_window(observe, steps);
    const auto eta0 = sample_initial(env, law_eta, window, policy.config_seed(r));
    const auto zeta0 = sample_initial(env, law_zeta, window,
                                      options.share_config_seed ? policy.config_seed(r) : policy.alt_config_seed(r));
    CoupledEvolver ev(env, couple_initial(eta0, zeta0), policy.dyn_seed(r));
    Track tr;
    tr.plus.reserve(T + 1);
    tr.minus.reserve(T + 1);
    for (std::size_t t = 0;; ++t) {
      tr.plus.push_back(static_cast<double>(ev.current().plus_count(observe)) / width);
      tr.minus.push_back(static_cast<double>(ev.current().minus_count(observe)) / width);
      if (t == T) break;
      ev.step();
    }
    return tr;
  });

  DiscrepancySeries s;
  s.observe = observe;
  s.replicas = policy.replicas;
  const double R = static_cast<double>(policy.replicas);
  auto mean_se = [&](auto&& value, std::size_t t) {
    double sum = 0.0;
    for (const auto& tr : tracks) sum += value(tr, t);
    const double mean = sum / R;
    double ss = 0.0;
    for (const auto& tr : tracks) ss += (value(tr, t) - mean) * (value(tr, t) - mean);
    return std::pair{mean, std::sqrt(ss / (R - 1.0) / R)};
  };
  for (std::size_t t = 0; t <= T; ++t) {
    auto [pm, ps] = mean_se([](const Track& tr, std::size_t k) { return tr.plus[k]; }, t);
    auto [mm, ms] = mean_se([](const Track& tr, std::size_t k) { return tr.minus[k]; }, t);
    auto [dm, ds] = mean_se([](const Track& tr, std::size_t k) { return tr.plus[k] - tr.minus[k]; }, t);
    s.plus_density.push_back(pm);
    s.plus_stderr.push_back(ps);
    s.minus_density.push_back(mm);
    s.minus_stderr.push_back(ms);
    s.difference.push_back(dm);
    s.difference_stderr.push_back(ds);
  }
  s.minus_by_replica.reserve(tracks.size() * (T + 1));
  for (const auto& tr : tracks) s.minus_by_replica.insert(s.minus_by_replica.end(), tr.minus.begin(), tr.minus.end());
  return s;
}

void write_discrepancy_csv(std::ostream& os, const DiscrepancySeries& series) {
  os << "step,beta_plus_density,beta_minus_density,beta_plus_stderr,beta_minus_stderr\n";
  os.precision(10);
  for (std::size_t t = 0; t < series.plus_density.size(); ++t) {
    os << t << ',' << series.plus_density[t] << ',' << series.minus_density[t] << ',' << series.plus_stderr[t] << ','
       << series.minus_stderr[t] << '\n';
  }
}

double MeetingSummary::fraction_met_by(std::int64_t h) const {
  if (outcomes.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& o : outcomes) {
    if (o.met && *o.meeting_time <= h) ++n;
  }
  return static_cast<double>(n) / static_cast<double>(outcomes.size());
}

MeetingOutcome meet_once(EnvironmentWindow& window, Site y, Site z, std::int64_t horizon, std::uint64_t seed_y,
                         std::uint64_t seed_z) {
  if ((z - y) % 2 != 0) {
    throw ParityError("walks from " + std::to_string(y) + " and " + std::to_string(z) +
                      " have odd separation and can never meet");
  }
  MeetingOutcome out{y, z, false, std::nullopt, horizon};
  if (y == z) {
    out.met = true;
    out.meeting_time = 0;
    return out;
  }
  Stream sy(seed_y, Domain::Walk, 0);
  Stream sz(seed_z, Domain::Walk, 0);
  Site a = y;
  Site b = z;
  std::int64_t t = 0;
  for (std::uint32_t block = 0; t < horizon; ++block) {
    window.ensure({std::min(a, b) - 4, std::max(a, b) + 4});
    const auto wa = sy.block_at(block);
    const auto wb = sz.block_at(block);
    for (int k = 0; k < 4 && t < horizon; ++k) {
      a += wa[k] < *window.threshold_data(a) ? 1 : -1;
      b += wb[k] < *window.threshold_data(b) ? 1 : -1;
      ++t;
      if (a == b) {
        out.met = true;
        out.meeting_time = t;
        return out;
      }
    }
  }
  return out;
}

MeetingSummary meeting_experiment(const Environment& env, Site y, Site z, std::int64_t horizon,
                                  std::size_t replicas, std::uint64_t seed) {
  if ((z - y) % 2 != 0) {
    throw ParityError("walks from " + std::to_string(y) + " and " + std::to_string(z) +
                      " have odd separation and can never meet");
  }
  MeetingSummary s{y, z, horizon, {}, 0, 0.0, {}};
  s.outcomes = map_replicas(replicas, [&](std::size_t r) {
    EnvironmentWindow window(env, {std::min(y, z) - 64, std::max(y, z) + 64});
    const std::uint64_t rs = derive_seed(seed, Domain::Replica, r);
    return meet_once(window, y, z, horizon, derive_seed(rs, Domain::Walk, 0), derive_seed(rs, Domain::Walk, 1));
  });
  for (const auto& o : s.outcomes) {
    if (!o.met) continue;
    ++s.met;
    const auto bin = static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(*o.meeting_time) + 1.0)));
    if (s.histogram.size() <= bin) s.histogram.resize(bin + 1, 0);
    ++s.histogram[bin];
  }
  s.fraction_met = replicas ? static_cast<double>(s.met) / static_cast<double>(replicas) : 0.0;
  return s;
}

}  // namespace rwre
