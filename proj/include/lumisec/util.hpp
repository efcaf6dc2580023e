// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace lumisec {

/// Worker cap for parallel sections: LUMISEC_THREADS when set (>= 1), else the
/// hardware concurrency.
int thread_budget();

/// Uniform draw in [0, n) by rejection; deterministic for a given engine
/// state on every platform.
inline int bounded_rand(std::mt19937_64& rng, int n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<int>(x % bound);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// FNV-1a 64-bit hash, used for config provenance lines.
std::uint64_t fnv1a(std::string_view text);

/// Runs fn(0..n-1) across at most thread_budget() workers. Each index runs
/// exactly once; the first exception is rethrown after all workers join.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace lumisec
