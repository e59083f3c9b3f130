#pragma once

// Counter-based random numbers.
//
// Every variate in the library is a pure function of (seed, domain, id,
// position) evaluated through Philox4x32-10 (Salmon, Moraes, Dror, Shaw;
// "Parallel random numbers: as easy as 1, 2, 3", SC 2011). There is no
// hidden generator state shared between sites, walks or replicas, which is
// what makes lazy environments and order-independent parallel replicas
// reproducible bit for bit.

#include <array>
#include <cstdint>
#include <span>

namespace rwre {

struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr int kRounds = 10;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    for (int r = 0; r < kRounds; ++r) {
      if (r > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// Sixteen Philox blocks at once, two counter sets of eight lanes: lane l
/// of each set maps (ctr[0..3][l], key[0..1][l]) exactly as
/// Philox4x32::apply does. Vectorised where the CPU allows.
using PhiloxLanes = std::array<std::array<std::uint32_t, 8>, 4>;
using PhiloxKeys = std::array<std::array<std::uint32_t, 8>, 2>;
void philox_x8x2(PhiloxLanes& a, PhiloxLanes& b, const PhiloxKeys& key) noexcept;

/// Separates the variate families drawn under one seed.
enum class Domain : std::uint32_t {
  Environment = 1,
  Walk = 2,
  Config = 3,
  ConfigAlt = 4,
  Dynamics = 5,
  DynamicsPlus = 6,
  DynamicsMinus = 7,
  Replica = 8,
  Derive = 0xD5EEDu,
};

constexpr Philox4x32::Key key_of(std::uint64_t seed) noexcept {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Deterministic child seed of (seed, purpose, index).
std::uint64_t derive_seed(std::uint64_t seed, Domain purpose, std::uint64_t index) noexcept;

/// Uniform in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (std::uint64_t{hi} << 21) ^ (std::uint64_t{lo} >> 11);
  return static_cast<double>(bits) * 0x1.0p-53;
}

/// Threshold t with P(u32 < t) = p, used for Bernoulli draws from one 32-bit word.
std::uint32_t bernoulli_threshold(double p) noexcept;

/// Variate stream identified by (seed, domain, id). The k-th 32-bit word is
/// word (k mod 4) of Philox block floor(k/4), so the stream may be consumed
/// in any chunking and always yields the same sequence.
class Stream {
 public:
  Stream(std::uint64_t seed, Domain domain, std::uint64_t id) noexcept
      : key_(key_of(seed)),
        ctr_{0u, static_cast<std::uint32_t>(domain), static_cast<std::uint32_t>(id),
             static_cast<std::uint32_t>(id >> 32)} {}

  std::uint32_t next_u32() noexcept {
    if (used_ == 4) refill();
    return block_[used_++];
  }

  double next_unit() noexcept {
    const std::uint32_t hi = next_u32();
    return to_unit(hi, next_u32());
  }

  /// Position of the next word in the stream.
  std::uint64_t position() const noexcept { return 4 * std::uint64_t{ctr_[0]} - (4 - used_); }

  /// Block `index` of the stream without touching the running position.
  Philox4x32::Counter block_at(std::uint32_t index) const noexcept {
    auto c = ctr_;
    c[0] = index;
    return Philox4x32::apply(c, key_);
  }

 private:
  void refill() noexcept {
    block_ = Philox4x32::apply(ctr_, key_);
    ++ctr_[0];
    used_ = 0;
  }

  Philox4x32::Key key_;
  Philox4x32::Counter ctr_;
  Philox4x32::Counter block_{};
  int used_ = 4;
};

/// First uniform of the stream (seed, domain, id).
double uniform_at(std::uint64_t seed, Domain domain, std::uint64_t id) noexcept;

/// Number of successes among `trials` Bernoulli draws with the given 32-bit
/// threshold, one stream word per trial.
std::uint32_t sample_binomial(Stream& stream, std::uint32_t trials, std::uint32_t threshold) noexcept;

/// Poisson variate: inversion from one uniform for mean < 30, PTRS
/// transformed rejection (Hormann 1993) above.
std::uint32_t sample_poisson(Stream& stream, double mean);

/// Generalised inverse F(Q, u) = inf{n : Q([0, n]) >= u} for a finite pmf.
std::uint32_t quantile_index(std::span<const double> pmf, double u) noexcept;

}  // namespace rwre
