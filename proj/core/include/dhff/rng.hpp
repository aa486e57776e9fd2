#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dhff {

// Deterministic SplitMix64 stream. The state transition and output
// scramble use the published reference constants, so a given seed yields
// the same sequence on every platform. Not cryptographic.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform deviate from the high 53 bits, in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Box-Muller gaussian. Consumes exactly two u64 draws; u1 = 0 is
  // remapped to 2^-53 so the logarithm stays finite.
  double next_gaussian(double mean, double std) {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 == 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + std * (r * std::cos(2.0 * std::numbers::pi * u2));
  }

  // Uniform integer in [0, n). Rejection-free modulo; fine for the
  // non-cryptographic uses here.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Independent substream keyed by (seed, salt): each component goes
  // through one SplitMix64 scramble before combination, so streams for
  // distinct salts never share a prefix.
  static RngStream derive(std::uint64_t seed, std::uint64_t salt) {
    RngStream a(seed);
    RngStream b(salt ^ 0x6A09E667F3BCC909ULL);
    return RngStream(a.next_u64() ^ b.next_u64());
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace dhff
