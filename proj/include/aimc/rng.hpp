/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

/**
 * Deterministic random number generation for the simulator.
 *
 * Everything stochastic in the simulator is driven by one master seed through
 * two mechanisms built on the splitmix64 mixer:
 *
 *  - RngStream: a sequential generator identified by a 64-bit key. Child
 *    streams are derived by folding labels into the key, so independent
 *    consumers (device sampling, input draws, characterization) never share
 *    a sequence no matter how many values each one pulls.
 *
 *  - keyed draws: gaussian_from_key() / uniform_from_key() map a key directly
 *    to a value with no sequential state at all. The MVM and pulse paths key
 *    each draw by (seed, invocation counter, indices), which makes results
 *    independent of evaluation order and of any internal parallelism.
 *
 * std::random is deliberately not used: distribution sequences there are
 * implementation-defined, and a shared sequential engine would make results
 * depend on loop order and thread count.
 */

namespace aimc {

inline constexpr std::uint64_t kSplitmixGamma = 0x9e3779b97f4a7c15ull;

/// splitmix64 finalizer: bijective 64-bit mix with good avalanche behavior.
inline std::uint64_t mix64(std::uint64_t z) {
  z += kSplitmixGamma;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Folds a label into a key (order-sensitive, so ("a","b") != ("b","a")).
inline std::uint64_t fold_key(std::uint64_t key, std::uint64_t label) {
  return mix64(key ^ (label + kSplitmixGamma + (key << 6) + (key >> 2)));
}

/// FNV-1a over a string, for readable stream labels.
inline std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Uniform double in [0, 1) from 53 random bits.
inline double u64_to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// One standard normal from a key (Box-Muller on two derived uniforms).
inline double gaussian_from_key(std::uint64_t key) {
  const double u1 = u64_to_unit(mix64(key)) + 0x1.0p-53;  // keep log() finite
  const double u2 = u64_to_unit(mix64(key ^ 0xda3e39cb94b95bdbull));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline double uniform_from_key(std::uint64_t key) { return u64_to_unit(mix64(key)); }

/**
 * Sequential generator over a derived key. Cheap to copy; copies continue
 * independently from the same point.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(mix64(seed)) {}

  /// Child stream; the parent is not advanced.
  RngStream derive(std::initializer_list<std::uint64_t> labels) const {
    std::uint64_t k = state_;
    for (std::uint64_t l : labels) k = fold_key(k, l);
    return RngStream(FromKey{}, k);
  }
  RngStream derive(std::string_view name) const { return derive({hash_label(name)}); }
  RngStream derive(std::string_view name, std::uint64_t a) const {
    return derive({hash_label(name), a});
  }
  RngStream derive(std::string_view name, std::uint64_t a, std::uint64_t b) const {
    return derive({hash_label(name), a, b});
  }

  std::uint64_t next_u64() {
    state_ += kSplitmixGamma;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// [0, 1)
  double uniform() { return u64_to_unit(next_u64()); }
  /// [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; no spare caching so draw count is exact.
  double normal() {
    const double u1 = uniform() + 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925287 * u2);
  }
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t key() const { return state_; }

 private:
  struct FromKey {};
  RngStream(FromKey, std::uint64_t key) : state_(key) {}
  std::uint64_t state_;
};

}  // namespace aimc
