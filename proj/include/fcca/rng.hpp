// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cmath>
#include <cstdint>

namespace fcca {

// Deterministic random number generation.
//
// The standard library's distribution objects are implementation-defined, so
// sampling through them would make outputs differ between standard libraries.
// Everything random in this project flows through the generator below, which
// is fully specified: xoshiro256++ states seeded by splitmix64, normals via
// Box-Muller. Identical seeds give byte-identical streams everywhere.
//
// Stream splitting rule: stream k of master seed s is seeded by running
// splitmix64 from the state s XOR (k+1)*0x9E3779B97F4A7C15 (the 64-bit golden
// ratio). Path i of a simulation always uses stream i, so per-path draws do
// not depend on how paths are scheduled across threads.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Pure derivation of an independent sub-seed for indexed work items
// (replications, Monte Carlo draws). A pure function of (seed, index), so
// item i gets the same sub-seed no matter how items are scheduled.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed ^ ((index + 2) * 0xD1342543DE82EF95ULL);
  (void)splitmix64_next(s);
  return splitmix64_next(s);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed ^ ((stream + 1) * 0x9E3779B97F4A7C15ULL);
    for (auto& w : s_) w = splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
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

  // Uniform on (0,1]; never returns 0 so it is safe under log().
  double uniform01() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Standard normal, Box-Muller; generates in pairs and caches the second.
  double gaussian() {
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cache_ = r * std::sin(a);
    have_cache_ = true;
    return r * std::cos(a);
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
  double cache_ = 0.0;
  bool have_cache_ = false;
};

} // namespace fcca
