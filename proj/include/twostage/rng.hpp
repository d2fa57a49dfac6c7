#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "twostage/stats.hpp"

namespace twostage {

// Named sub-stream tags. Every random quantity in the library is drawn from
// a stream keyed by (seed, tag, index...), so any piece of a run can be
// reproduced in isolation and results do not depend on evaluation order.
enum class Stream : std::uint64_t {
  design = 1,     // fixed design matrix of an experiment
  noise = 2,      // per-replicate observation noise
  test_set = 3,   // held-out prediction set
  folds = 4,      // cross-validation partition
  bootstrap = 5,  // bootstrap resampling
  subsample = 6,  // stability-selection subsamples
  weights = 7,    // randomized penalty weights
  trial = 8,      // sparse-eigenvalue subset trials
  generic = 9,
};

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ generator seeded through splitmix64 from a (seed, path...)
/// key. Distinct keys give independent-looking streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { init(seed, {}); }

  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) { init(seed, path); }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1); never returns an endpoint.
  double uniform_open() {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return u;
  }

  /// Standard normal via inverse CDF; consumes uniforms only, so sequences
  /// are identical on every platform.
  double normal() { return normal_quantile(uniform_open()); }

  /// Unbiased integer on [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw InvalidConfig("Rng::below: bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  void init(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t sm = seed;
    for (std::uint64_t part : path) {
      // Fold each path element in through one splitmix step so that
      // (seed, {a}) and (seed + a, {}) differ.
      sm = splitmix64_next(sm) ^ (part * 0x9e3779b97f4a7c15ULL);
    }
    for (int i = 0; i < 4; ++i) s_[i] = splitmix64_next(sm);
    // All-zero state is invalid for xoshiro; splitmix output makes this
    // practically impossible, but guard anyway.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t s_[4];
};

inline Rng make_stream(std::uint64_t seed, Stream tag, std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(seed, {static_cast<std::uint64_t>(tag), a, b});
}

/// Stable 64-bit sub-seed for passing to components that take a seed.
inline std::uint64_t derive_seed(std::uint64_t seed, Stream tag, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
  std::uint64_t sm = seed;
  sm = splitmix64_next(sm) ^ (static_cast<std::uint64_t>(tag) * 0x9e3779b97f4a7c15ULL);
  sm = splitmix64_next(sm) ^ (a * 0x9e3779b97f4a7c15ULL);
  sm = splitmix64_next(sm) ^ (b * 0x9e3779b97f4a7c15ULL);
  return splitmix64_next(sm);
}

}  // namespace twostage
