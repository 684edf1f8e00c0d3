#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace acdkit {

/// Counter-based generator: every variate is a pure function of
/// (seed, stream, counter), so draws can be made in any order or in
/// parallel with identical results.
///
/// Mixing is the SplitMix64 finalizer (Steele, Lea & Flood):
///   z += 0x9e3779b97f4a7c15
///   z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
///   z = (z ^ (z >> 27)) * 0x94d049bb133111eb
///   z ^= z >> 31
/// A stream key is mix(seed ^ mix(stream)); draw k of a stream is
/// mix(key + 2k + j) for sub-draw j in {0, 1}.
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  explicit constexpr CounterRng(std::uint64_t seed) : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t stream_key(std::uint64_t stream) const {
    return mix(seed_ ^ mix(stream));
  }

  constexpr std::uint64_t bits(std::uint64_t stream, std::uint64_t counter,
                               std::uint64_t sub = 0) const {
    return mix(stream_key(stream) + 2 * counter + sub);
  }

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform(std::uint64_t stream, std::uint64_t counter, std::uint64_t sub = 0) const {
    return (static_cast<double>(bits(stream, counter, sub) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (cosine branch) on sub-draws 0 and 1.
  double normal(std::uint64_t stream, std::uint64_t counter) const {
    const double u1 = uniform(stream, counter, 0);
    const double u2 = uniform(stream, counter, 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Unit-mean exponential.
  double exponential(std::uint64_t stream, std::uint64_t counter) const {
    return -std::log(uniform(stream, counter, 0));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace acdkit
