#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace sspcm {

/// Counter-based deterministic RNG (SplitMix64 core).
///
/// Streams are derived from (seed, tags...) so that per-sample / per-epoch
/// substreams can be created independently of iteration order. All
/// distributions are implemented here rather than with <random> adaptors so
/// that sequences are reproducible across standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed + kGolden)) {}

  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) : Rng(seed) {
    for (std::uint64_t t : tags) absorb(t);
  }

  /// Derives an independent substream keyed by `tag`.
  Rng sub(std::uint64_t tag) const {
    Rng r(*this);
    r.absorb(tag);
    return r;
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  /// Gaussian sample via Box-Muller (consumes two uniforms per call).
  double normal(double mean = 0.0, double sigma = 1.0) {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  void absorb(std::uint64_t tag) { state_ = mix(state_ ^ mix(tag + kGolden)); }

  std::uint64_t state_;
};

/// FNV-1a 64-bit hash, used for config hashes and parameter checksums.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace sspcm
