#include "rwre/random.hpp"

#include <cmath>
#include <limits>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace rwre {

namespace {

#if defined(__x86_64__) || defined(__i386__)
#define RWRE_HAVE_AVX2_PATH 1

// 32x32 -> 64 products of all eight lanes with m, as (hi, lo) halves.
__attribute__((target("avx2"))) inline void mulhilo8(__m256i x, __m256i m, __m256i& hi, __m256i& lo) {
  const __m256i even = _mm256_mul_epu32(x, m);
  const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(x, 32), m);
  const __m256i low_mask = _mm256_set1_epi64x(0xFFFFFFFFll);
  lo = _mm256_or_si256(_mm256_and_si256(even, low_mask), _mm256_slli_epi64(odd, 32));
  hi = _mm256_or_si256(_mm256_srli_epi64(even, 32), _mm256_andnot_si256(low_mask, odd));
}

__attribute__((target("avx2"))) inline __m256i load8(const std::array<std::uint32_t, 8>& a) {
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a.data()));
}

__attribute__((target("avx2"))) inline void store8(std::array<std::uint32_t, 8>& a, __m256i v) {
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(a.data()), v);
}

// Two counter sets under the same keys; interleaving the two independent
// round chains hides the multiply latency.
__attribute__((target("avx2"))) void philox_x8x2_avx2(PhiloxLanes& a, PhiloxLanes& b,
                                                      const PhiloxKeys& key) noexcept {
  __m256i a0 = load8(a[0]), a1 = load8(a[1]), a2 = load8(a[2]), a3 = load8(a[3]);
  __m256i b0 = load8(b[0]), b1 = load8(b[1]), b2 = load8(b[2]), b3 = load8(b[3]);
  __m256i k0 = load8(key[0]), k1 = load8(key[1]);
  const __m256i m0 = _mm256_set1_epi32(static_cast<int>(0xD2511F53u));
  const __m256i m1 = _mm256_set1_epi32(static_cast<int>(0xCD9E8D57u));
  const __m256i w0 = _mm256_set1_epi32(static_cast<int>(0x9E3779B9u));
  const __m256i w1 = _mm256_set1_epi32(static_cast<int>(0xBB67AE85u));
  for (int r = 0; r < Philox4x32::kRounds; ++r) {
    if (r > 0) {
      k0 = _mm256_add_epi32(k0, w0);
      k1 = _mm256_add_epi32(k1, w1);
    }
    __m256i ah0, al0, ah1, al1, bh0, bl0, bh1, bl1;
    mulhilo8(a0, m0, ah0, al0);
    mulhilo8(a2, m1, ah1, al1);
    mulhilo8(b0, m0, bh0, bl0);
    mulhilo8(b2, m1, bh1, bl1);
    a0 = _mm256_xor_si256(_mm256_xor_si256(ah1, a1), k0);
    a1 = al1;
    a2 = _mm256_xor_si256(_mm256_xor_si256(ah0, a3), k1);
    a3 = al0;
    b0 = _mm256_xor_si256(_mm256_xor_si256(bh1, b1), k0);
    b1 = bl1;
    b2 = _mm256_xor_si256(_mm256_xor_si256(bh0, b3), k1);
    b3 = bl0;
  }
  store8(a[0], a0);
  store8(a[1], a1);
  store8(a[2], a2);
  store8(a[3], a3);
  store8(b[0], b0);
  store8(b[1], b1);
  store8(b[2], b2);
  store8(b[3], b3);
}

const bool kHasAvx2 = __builtin_cpu_supports("avx2");
#endif

}  // namespace

void philox_x8x2(PhiloxLanes& a, PhiloxLanes& b, const PhiloxKeys& key) noexcept {
#ifdef RWRE_HAVE_AVX2_PATH
  if (kHasAvx2) {
    philox_x8x2_avx2(a, b, key);
    return;
  }
#endif
  for (PhiloxLanes* ctr : {&a, &b}) {
    for (std::size_t l = 0; l < 8; ++l) {
      auto& c = *ctr;
      const auto out = Philox4x32::apply({c[0][l], c[1][l], c[2][l], c[3][l]}, {key[0][l], key[1][l]});
      for (std::size_t j = 0; j < 4; ++j) c[j][l] = out[j];
    }
  }
}

std::uint64_t derive_seed(std::uint64_t seed, Domain purpose, std::uint64_t index) noexcept {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(purpose),
                                static_cast<std::uint32_t>(Domain::Derive),
                                static_cast<std::uint32_t>(index),
                                static_cast<std::uint32_t>(index >> 32)};
  const auto out = Philox4x32::apply(ctr, key_of(seed));
  return (std::uint64_t{out[1]} << 32) | out[0];
}

std::uint32_t bernoulli_threshold(double p) noexcept {
  if (!(p > 0.0)) return 0;
  if (p >= 1.0) return std::numeric_limits<std::uint32_t>::max();
  const double scaled = std::round(std::ldexp(p, 32));
  if (scaled >= 4294967295.0) return std::numeric_limits<std::uint32_t>::max();
  return static_cast<std::uint32_t>(scaled);
}

double uniform_at(std::uint64_t seed, Domain domain, std::uint64_t id) noexcept {
  Stream s(seed, domain, id);
  const auto b = s.block_at(0);
  return to_unit(b[0], b[1]);
}

std::uint32_t sample_binomial(Stream& stream, std::uint32_t trials, std::uint32_t threshold) noexcept {
  std::uint32_t hits = 0;
  for (std::uint32_t i = 0; i < trials; ++i) hits += stream.next_u32() < threshold ? 1u : 0u;
  return hits;
}

namespace {

std::uint32_t poisson_inversion(double u, double mean) {
  double p = std::exp(-mean);
  double cdf = p;
  std::uint32_t k = 0;
  // Round-off can leave cdf a few ulps below 1; the cap stops the search
  // far in the tail where the pmf has underflowed anyway.
  const std::uint32_t cap = static_cast<std::uint32_t>(mean + 40.0 * std::sqrt(mean) + 60.0);
  while (u > cdf && k < cap) {
    ++k;
    p *= mean / k;
    cdf += p;
  }
  return k;
}

std::uint32_t poisson_ptrs(Stream& stream, double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = stream.next_unit() - 0.5;
    const double v = stream.next_unit();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint32_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint32_t>(k);
    }
  }
}

}  // namespace

std::uint32_t sample_poisson(Stream& stream, double mean) {
  if (!(mean > 0.0)) return 0;
  if (mean < 30.0) return poisson_inversion(stream.next_unit(), mean);
  return poisson_ptrs(stream, mean);
}

std::uint32_t quantile_index(std::span<const double> pmf, double u) noexcept {
  double cdf = 0.0;
  for (std::size_t n = 0; n < pmf.size(); ++n) {
    cdf += pmf[n];
    if (cdf >= u) return static_cast<std::uint32_t>(n);
  }
  return pmf.empty() ? 0u : static_cast<std::uint32_t>(pmf.size() - 1);
}

}  // namespace rwre
