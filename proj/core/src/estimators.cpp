#include "rwre/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "rwre/errors.hpp"
#include "rwre/parallel.hpp"
#include "rwre/random.hpp"
#include "rwre/walker.hpp"

namespace rwre {

ProportionEstimate wilson_interval(std::size_t successes, std::size_t trials, double z) {
  ProportionEstimate e;
  e.successes = successes;
  e.trials = trials;
  if (trials == 0) {
    e.upper = 1.0;
    e.degenerate = true;
    return e;
  }
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  e.estimate = p;
  if (successes == 0) {
    e.degenerate = true;
    e.lower = 0.0;
    e.upper = std::min(1.0, 3.0 / n);
    return e;
  }
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  e.lower = std::max(0.0, center - half);
  e.upper = std::min(1.0, center + half);
  return e;
}

MeanEstimate mean_estimate(std::span<const double> values) {
  MeanEstimate m;
  m.samples = values.size();
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return m;
}

namespace {

// Runs fn(r, window) per replica. In quenched mode one window covering
// `reach` is materialised up front and shared read-only; callers must keep
// every walk inside `reach`.
template <class Fn>
auto map_replica_windows(const EnvironmentSpec& spec, const SeedPolicy& policy, SiteRange reach, Fn&& fn) {
  if (policy.mode == SeedMode::Quenched) {
    Environment env(spec, policy.env_seed(0));
    EnvironmentWindow shared(env, reach);
    return map_replicas(policy.replicas, [&](std::size_t r) { return fn(r, shared); });
  }
  return map_replicas(policy.replicas, [&](std::size_t r) {
    Environment env(spec, policy.env_seed(r));
    EnvironmentWindow window(env, {reach.lo, std::min(reach.hi, reach.lo + 512)});
    return fn(r, window);
  });
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  LinearFit f;
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return f;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace

SpeedEstimate empirical_speed(const EnvironmentSpec& spec, std::int64_t n, const SeedPolicy& policy) {
  if (n < 1) throw std::invalid_argument("empirical_speed: n must be >= 1");
  SpeedEstimate out;
  out.analytic = compute_invariants(spec).speed;
  const auto speeds = map_replica_windows(spec, policy, {-n - 8, n + 8}, [&](std::size_t r, EnvironmentWindow& w) {
    return static_cast<double>(run_walk(w, 0, n, policy.walk_seed(r)).final_position) / static_cast<double>(n);
  });
  out.speed = mean_estimate(speeds);
  out.z_score = out.speed.std_error > 0.0 ? (out.speed.mean - out.analytic) / out.speed.std_error : 0.0;
  return out;
}

std::uint64_t family_walk_seed(std::uint64_t seed, Site y, std::uint64_t i) noexcept {
  return derive_seed(derive_seed(seed, Domain::Walk, static_cast<std::uint64_t>(y)), Domain::Walk, i);
}

LlnDeviation uniform_lln_deviation(const Environment& env, double A, double B, std::int64_t n, std::int64_t m,
                                   std::uint64_t seed) {
  if (!(A < B)) throw std::invalid_argument("uniform_lln_deviation: need A < B");
  if (n < 1 || m < 1) throw std::invalid_argument("uniform_lln_deviation: need n >= 1 and m >= 1");
  const double v = compute_invariants(env.spec()).speed;
  const SiteRange ys = scaled_range(static_cast<double>(n), A, B);

  LlnDeviation out;
  out.starts = ys;
  out.implied_gamma = n > 1 ? std::log(static_cast<double>(m)) / std::log(static_cast<double>(n)) : 0.0;
  if (ys.empty()) return out;

  EnvironmentWindow window(env, ys.padded(n + 8));
  // Chunked by start site so memory stays bounded for large families.
  const std::size_t per_chunk = 4096;
  const auto sites = static_cast<std::size_t>(ys.size());
  const std::size_t chunks = (sites + per_chunk - 1) / per_chunk;
  const auto maxima = map_replicas(chunks, [&](std::size_t c) {
    const Site first = ys.lo + static_cast<Site>(c * per_chunk);
    const Site last = std::min(ys.hi, first + static_cast<Site>(per_chunk) - 1);
    std::vector<Site> starts;
    std::vector<std::uint64_t> seeds;
    for (Site y = first; y <= last; ++y) {
      for (std::int64_t i = 0; i < m; ++i) {
        starts.push_back(y);
        seeds.push_back(family_walk_seed(seed, y, static_cast<std::uint64_t>(i)));
      }
    }
    std::vector<Site> finals(starts.size());
    final_positions(window, starts, seeds, n, finals);
    double worst = 0.0;
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const double d = std::fabs(static_cast<double>(finals[k] - starts[k]) / static_cast<double>(n) - v);
      worst = std::max(worst, d);
    }
    return worst;
  });
  out.walks = sites * static_cast<std::size_t>(m);
  out.max_deviation = *std::max_element(maxima.begin(), maxima.end());
  return out;
}

std::vector<ProportionEstimate> slowdown_curve(const EnvironmentSpec& spec, double v,
                                               std::span<const std::int64_t> ns, const SeedPolicy& policy) {
  if (ns.empty()) return {};
  for (auto n : ns) {
    if (n < 1) throw std::invalid_argument("slowdown_curve: n must be >= 1");
  }
  std::vector<std::int64_t> order(ns.begin(), ns.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  const std::int64_t horizon = order.back();

  // Bitmask of slowed-down checkpoints per replica.
  if (order.size() > 64) throw std::invalid_argument("slowdown_curve: at most 64 distinct n");
  const auto masks = map_replica_windows(
      spec, policy, {-horizon - 8, horizon + 8}, [&](std::size_t r, EnvironmentWindow& w) {
        Stream stream(policy.walk_seed(r), Domain::Walk, 0);
        Site pos = 0;
        std::uint64_t mask = 0;
        std::size_t next = 0;
        std::int64_t t = 0;
        for (std::uint32_t block = 0; t < horizon; ++block) {
          w.ensure({pos - 4, pos + 4});
          const auto words = stream.block_at(block);
          for (int k = 0; k < 4 && t < horizon; ++k) {
            pos += words[k] < *w.threshold_data(pos) ? 1 : -1;
            ++t;
            if (t == order[next]) {
              if (static_cast<double>(pos) <= static_cast<double>(t) * v) mask |= std::uint64_t{1} << next;
              ++next;
            }
          }
        }
        return mask;
      });

  std::vector<ProportionEstimate> out;
  for (auto n : ns) {
    const auto idx = static_cast<std::size_t>(std::lower_bound(order.begin(), order.end(), n) - order.begin());
    std::size_t hits = 0;
    for (auto m : masks) hits += (m >> idx) & 1u;
    out.push_back(wilson_interval(hits, policy.replicas));
  }
  return out;
}

ProportionEstimate slowdown_probability(const EnvironmentSpec& spec, double v, std::int64_t n,
                                        const SeedPolicy& policy) {
  if (policy.replicas < 1000) {
    throw InsufficientSamples("slowdown_probability: need at least 1000 replicas, got " +
                              std::to_string(policy.replicas));
  }
  const std::int64_t ns[] = {n};
  return slowdown_curve(spec, v, ns, policy).front();
}

ScalingDiagnostic fit_slowdown_scaling(std::span<const std::int64_t> ns, std::span<const ProportionEstimate> estimates,
                                       SeedMode mode, double s_exponent, bool free_fit) {
  ScalingDiagnostic d;
  d.mode = mode;
  d.ns.assign(ns.begin(), ns.end());
  d.estimates.assign(estimates.begin(), estimates.end());
  d.free_fit = free_fit;
  d.reference_exponent = mode == SeedMode::Quenched ? 1.0 - 1.0 / s_exponent : 1.0 - s_exponent;

  std::vector<double> x, y;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto& e = estimates[i];
    if (e.degenerate || !(e.lower > 0.0) || !(e.upper < 1.0) || e.successes == e.trials) continue;
    d.used_ns.push_back(ns[i]);
    const double n = static_cast<double>(ns[i]);
    if (mode == SeedMode::Averaged) {
      x.push_back(std::log(n));
      y.push_back(std::log(e.estimate));
    } else if (free_fit) {
      x.push_back(std::log(n));
      y.push_back(std::log(-std::log(e.estimate)));
    } else {
      x.push_back(std::pow(n, d.reference_exponent));
      y.push_back(-std::log(e.estimate));
    }
  }
  if (x.size() < 2) return d;
  const auto fit = least_squares(x, y);
  d.slope = fit.slope;
  d.intercept = fit.intercept;
  d.r_squared = fit.r_squared;
  if (mode == SeedMode::Averaged || free_fit) d.fitted_exponent = fit.slope;
  return d;
}

ProportionEstimate hitting_tail(const Environment& env, SiteRange ys, std::int64_t n, double mu,
                                std::size_t replicas, std::uint64_t seed) {
  if (ys.empty()) throw std::invalid_argument("hitting_tail: empty start range");
  if (n < 1) throw std::invalid_argument("hitting_tail: n must be >= 1");
  const double v = compute_invariants(env.spec()).speed;
  if (!(mu > 1.0 / v)) throw std::invalid_argument("hitting_tail: need mu > 1/v_P");
  const double budget = static_cast<double>(n) * mu;
  const auto cap = static_cast<std::int64_t>(std::ceil(budget));

  EnvironmentWindow window(env, {ys.lo - cap - 8, ys.hi + n + 8});
  const auto exceeded = map_replicas(replicas, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(seed, Domain::Replica, r);
    for (Site y = ys.lo; y <= ys.hi; ++y) {
      const auto h = hitting_time(window, y, n, cap, derive_seed(rs, Domain::Walk, static_cast<std::uint64_t>(y)));
      if (!h.hit() || static_cast<double>(h.time) >= budget) return 1;
    }
    return 0;
  });
  return wilson_interval(static_cast<std::size_t>(std::accumulate(exceeded.begin(), exceeded.end(), 0)), replicas);
}

double poisson_pmf(std::uint32_t k, double lambda) {
  if (lambda <= 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(k) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0));
}

namespace {

// P(X >= k) for X ~ Poisson(lambda).
double poisson_upper(std::uint32_t k, double lambda) {
  if (k == 0) return 1.0;
  return boost::math::gamma_p(static_cast<double>(k), lambda);
}

}  // namespace

GofResult poisson_gof(std::span<const std::uint32_t> samples, double lambda) {
  if (samples.size() < 1000) {
    throw InsufficientSamples("poisson_gof needs at least 1000 samples, got " + std::to_string(samples.size()));
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson_gof: lambda must be positive");
  constexpr double kMinExpected = 5.0;
  const double N = static_cast<double>(samples.size());

  GofResult res;
  res.samples = samples.size();
  std::uint32_t lo = 0;
  double acc = 0.0;
  for (std::uint32_t k = 0;; ++k) {
    acc += N * poisson_pmf(k, lambda);
    const double rest = N * poisson_upper(k + 1, lambda);
    if (rest < kMinExpected) {
      res.bins.push_back({lo, std::numeric_limits<std::uint32_t>::max(), 0.0, acc + rest});
      break;
    }
    if (acc >= kMinExpected) {
      res.bins.push_back({lo, k, 0.0, acc});
      lo = k + 1;
      acc = 0.0;
    }
  }
  if (res.bins.size() >= 2 && res.bins.back().expected < kMinExpected) {
    const auto last = res.bins.back();
    res.bins.pop_back();
    res.bins.back().hi = last.hi;
    res.bins.back().expected += last.expected;
  }
  for (auto s : samples) {
    auto it = std::lower_bound(res.bins.begin(), res.bins.end(), s,
                               [](const GofBin& b, std::uint32_t v) { return b.hi < v; });
    it->observed += 1.0;
  }
  for (const auto& b : res.bins) res.statistic += (b.observed - b.expected) * (b.observed - b.expected) / b.expected;
  res.dof = static_cast<int>(res.bins.size()) - 1;
  res.p_value = res.dof >= 1 ? boost::math::gamma_q(0.5 * res.dof, 0.5 * res.statistic) : 1.0;
  return res;
}

namespace {

constexpr double kTvTailCut = 1e-9;

std::uint32_t poisson_cutoff(double lambda) {
  std::uint32_t k = static_cast<std::uint32_t>(lambda);
  while (poisson_upper(k + 1, lambda) >= kTvTailCut) ++k;
  return k;
}

double tv_against(std::span<const double> empirical, const std::function<double(std::uint32_t)>& ref,
                  double ref_tail_beyond) {
  double sum = 0.0;
  for (std::size_t k = 0; k < empirical.size(); ++k) {
    sum += std::fabs(empirical[k] - ref(static_cast<std::uint32_t>(k)));
  }
  return 0.5 * (sum + ref_tail_beyond);
}

std::vector<double> empirical_pmf(std::span<const std::uint32_t> samples, std::uint32_t min_support) {
  std::uint32_t top = min_support;
  for (auto s : samples) top = std::max(top, s);
  std::vector<double> pmf(static_cast<std::size_t>(top) + 1, 0.0);
  for (auto s : samples) pmf[s] += 1.0;
  for (double& p : pmf) p /= static_cast<double>(samples.size());
  return pmf;
}

}  // namespace

double tv_distance_to_poisson(std::span<const std::uint32_t> samples, double lambda) {
  if (samples.empty()) throw InsufficientSamples("tv_distance_to_poisson: no samples");
  const auto pmf = empirical_pmf(samples, poisson_cutoff(lambda));
  return tv_distance_to_poisson(std::span<const double>(pmf), lambda);
}

double tv_distance_to_poisson(std::span<const double> pmf, double lambda) {
  std::vector<double> table(pmf.begin(), pmf.end());
  const std::uint32_t cut = poisson_cutoff(lambda);
  if (table.size() < static_cast<std::size_t>(cut) + 1) table.resize(static_cast<std::size_t>(cut) + 1, 0.0);
  // Reference mass is kept on [0, cut]; its tail beyond cut (< 1e-9) is dropped.
  auto ref = [&](std::uint32_t k) { return k <= cut ? poisson_pmf(k, lambda) : 0.0; };
  return tv_against(table, ref, 0.0);
}

double tv_distance_to_poisson_mixture(std::span<const std::uint32_t> samples, std::span<const double> lambdas) {
  if (samples.empty() || lambdas.empty()) throw InsufficientSamples("tv_distance_to_poisson_mixture: no samples");
  std::uint32_t cut = 0;
  for (double l : lambdas) cut = std::max(cut, poisson_cutoff(l));
  const auto pmf = empirical_pmf(samples, cut);
  std::vector<double> mix(pmf.size(), 0.0);
  for (double l : lambdas) {
    for (std::uint32_t k = 0; k <= cut; ++k) mix[k] += poisson_pmf(k, l);
  }
  for (double& p : mix) p /= static_cast<double>(lambdas.size());
  return tv_against(pmf, [&](std::uint32_t k) { return mix[k]; }, 0.0);
}

ProbeSamples sample_probe_counts(const EnvironmentSpec& spec, const SeedPolicy& policy, const InitialLaw& law,
                                 std::span<const Site> probes, std::span<const std::int64_t> times,
                                 double f_tolerance) {
  if (probes.empty() || times.empty()) throw std::invalid_argument("sample_probe_counts: need probes and times");
  ProbeSamples out;
  out.probes.assign(probes.begin(), probes.end());
  out.times.assign(times.begin(), times.end());
  out.replicas = policy.replicas;
  for (auto t : times) {
    if (t < 0) throw std::invalid_argument("sample_probe_counts: negative time");
  }
  const std::int64_t horizon = *std::max_element(times.begin(), times.end());
  const SiteRange observe{*std::min_element(probes.begin(), probes.end()),
                          *std::max_element(probes.begin(), probes.end())};
  const std::size_t P = probes.size();
  const std::size_t Tn = times.size();

  struct Row {
    std::vector<std::uint32_t> counts;  // [t * P + p]
    std::vector<double> f;              // [p]
  };
  auto rows = map_replicas(policy.replicas, [&](std::size_t r) {
    Environment env(spec, policy.env_seed(r));
    Row row;
    row.counts.resize(Tn * P);
    row.f.resize(P);
    const auto pw = compute_f(env, observe, f_tolerance);
    for (std::size_t p = 0; p < P; ++p) row.f[p] = pw.at(probes[p]);
    Evolver ev(env, sample_initial(env, law, cone_window(observe, horizon), policy.config_seed(r)),
               policy.dyn_seed(r));
    for (std::int64_t t = 0; t <= horizon; ++t) {
      for (std::size_t ti = 0; ti < Tn; ++ti) {
        if (times[ti] != t) continue;
        for (std::size_t p = 0; p < P; ++p) row.counts[ti * P + p] = ev.current().at(probes[p]);
      }
      if (t < horizon) ev.step();
    }
    return row;
  });

  out.counts.resize(Tn * P * policy.replicas);
  out.potential.resize(policy.replicas * P);
  for (std::size_t r = 0; r < policy.replicas; ++r) {
    for (std::size_t ti = 0; ti < Tn; ++ti) {
      for (std::size_t p = 0; p < P; ++p) {
        out.counts[(ti * P + p) * policy.replicas + r] = rows[r].counts[ti * P + p];
      }
    }
    for (std::size_t p = 0; p < P; ++p) out.potential[r * P + p] = rows[r].f[p];
  }
  return out;
}

double probe_sampling_work(std::span<const Site> probes, std::int64_t horizon, std::size_t replicas) {
  if (probes.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(probes.begin(), probes.end());
  const double width = static_cast<double>(*hi - *lo + 1);
  const double T = static_cast<double>(horizon);
  return static_cast<double>(replicas) * (width * T + T * T);
}

double transported_profile_integral(const Profile& profile, double shift, const TestFunction& g) {
  const auto [lo, hi] = g.support();
  auto bps = g.breakpoints();
  for (double b : profile.breakpoints()) bps.push_back(b + shift);
  return integrate_piecewise([&](double y) { return profile(y - shift) * g(y); }, lo, hi, std::move(bps), 1e-10);
}

HydroTransport hydro_transport_error(const EnvironmentSpec& spec, const Profile& profile, double N, double t,
                                     std::span<const TestFunction> gs, const SeedPolicy& policy,
                                     SynthesisMode mode) {
  if (!(N > 0.0) || !(t >= 0.0)) throw std::invalid_argument("hydro_transport_error: need N > 0 and t >= 0");
  if (gs.empty()) throw std::invalid_argument("hydro_transport_error: empty test-function set");
  HydroTransport out;
  out.N = N;
  out.t = t;
  out.steps = static_cast<std::int64_t>(std::floor(N * t));
  out.speed = compute_invariants(spec).speed;
  for (const auto& g : gs) out.targets.push_back(transported_profile_integral(profile, out.speed * t, g));

  const auto per_replica = map_replicas(policy.replicas, [&](std::size_t r) {
    Environment env(spec, policy.env_seed(r));
    auto eta0 = synthesize_profile_config(profile, N, policy.config_seed(r), mode);
    if (eta0.extent() != Extent::Complete) {
      throw WindowTooSmall("hydro_transport_error: synthesised configuration does not hold every particle");
    }
    Evolver ev(env, std::move(eta0), policy.dyn_seed(r));
    ev.advance(out.steps);
    std::vector<double> err(gs.size());
    for (std::size_t k = 0; k < gs.size(); ++k) {
      err[k] = std::fabs(empirical_pairing(ev.current(), N, gs[k]) - out.targets[k]);
    }
    return err;
  });
  out.errors.assign(gs.size(), std::vector<double>(policy.replicas));
  for (std::size_t r = 0; r < policy.replicas; ++r) {
    for (std::size_t k = 0; k < gs.size(); ++k) out.errors[k][r] = per_replica[r][k];
  }
  for (const auto& e : out.errors) out.mean_error.push_back(mean_estimate(e));
  return out;
}

}  // namespace rwre
