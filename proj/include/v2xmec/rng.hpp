// Seedable, portable random draws for scenario generation.
//
// All experiment randomness flows through this header so that a (seed,
// stream) pair fully determines every draw on every platform.  The engine is
// std::mt19937_64 (its output sequence is pinned by the standard); the
// distributions are hand-rolled because the standard library ones are not
// bit-portable across implementations.
//
// Streams: each entity type draws from its own substream, derived from the
// base seed with splitmix64, so adding draws to one entity type never shifts
// the draws of another.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace v2xmec::rng {

enum class Stream : std::uint64_t {
  vehicles = 1,
  tasks = 2,
  fading = 3,
  rsus = 4,
  baseline = 5,
  oracle = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Engine for one (seed, stream) substream.
inline std::mt19937_64 make_engine(std::uint64_t seed, Stream stream) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))));
}

/// Uniform in [0, 1), 53-bit resolution.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

/// Uniform integer in [0, n).
inline int uniform_int(std::mt19937_64& g, int n) {
  int v = static_cast<int>(uniform01(g) * n);
  return v < n ? v : n - 1;
}

/// Unit-mean exponential (used for channel fading draws).
inline double exponential(std::mt19937_64& g, double mean = 1.0) {
  return -mean * std::log1p(-uniform01(g));
}

/// Poisson count by Knuth's product method; large means are split in two so
/// the running product never underflows.  Evaluation order is explicit to
/// keep the draw sequence compiler-independent.
inline int poisson(std::mt19937_64& g, double mean) {
  if (mean <= 0.0) return 0;
  if (mean > 30.0) {
    const int first = poisson(g, mean / 2.0);
    const int second = poisson(g, mean / 2.0);
    return first + second;
  }
  const double limit = std::exp(-mean);
  double prod = uniform01(g);
  int n = 0;
  while (prod > limit) {
    prod *= uniform01(g);
    ++n;
  }
  return n;
}

}  // namespace v2xmec::rng
