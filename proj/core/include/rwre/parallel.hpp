#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace rwre {

/// Worker count: RWRE_WORKERS when set, else the hardware concurrency.
std::size_t worker_count();

/// Calls body(i) for every i in [0, n) on up to worker_count() threads.
/// Bodies must only write to slots they own; callers reduce in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Runs fn for each replica and returns the results ordered by replica index.
template <class Fn>
auto map_replicas(std::size_t n, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  std::vector<decltype(fn(std::size_t{}))> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace rwre
