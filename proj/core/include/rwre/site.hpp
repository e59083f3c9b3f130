#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

namespace rwre {

using Site = std::int64_t;

/// Closed integer interval [lo, hi] of lattice sites. Empty when hi < lo.
struct SiteRange {
  Site lo = 0;
  Site hi = -1;

  constexpr bool empty() const noexcept { return hi < lo; }
  constexpr std::int64_t size() const noexcept { return empty() ? 0 : hi - lo + 1; }
  constexpr bool contains(Site x) const noexcept { return lo <= x && x <= hi; }
  constexpr bool contains(SiteRange r) const noexcept {
    return r.empty() || (lo <= r.lo && r.hi <= hi);
  }
  constexpr SiteRange padded(std::int64_t by) const noexcept { return {lo - by, hi + by}; }
  constexpr SiteRange shrunk(std::int64_t by) const noexcept { return {lo + by, hi - by}; }
  constexpr SiteRange intersect(SiteRange r) const noexcept {
    return {std::max(lo, r.lo), std::min(hi, r.hi)};
  }

  friend constexpr bool operator==(SiteRange, SiteRange) = default;

  std::string str() const { return "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]"; }
};

}  // namespace rwre
