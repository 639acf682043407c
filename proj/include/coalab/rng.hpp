#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace coalab {

/// xoshiro256** (Blackman and Vigna). Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  /// Stream for replicate `replicate` under master seed `seed`. Distinct
  /// (seed, replicate) pairs give distinct initial states: two state words
  /// are bijective images of seed and replicate.
  Rng(std::uint64_t seed, std::uint64_t replicate = 0) {
    s_[0] = mix(seed);
    s_[1] = mix(replicate ^ 0x6a09e667f3bcc909ULL);
    s_[2] = mix(s_[0] + 0x9e3779b97f4a7c15ULL);
    s_[3] = mix(s_[1] + 0xbb67ae8584caa73bULL);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1).
  double uniform_open() { return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52; }
  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  // SplitMix64 finalizer; a bijection on 64-bit words.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t s_[4];
};

}  // namespace coalab
