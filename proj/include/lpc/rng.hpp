#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lpc {

/// Deterministic pseudorandom generator used wherever the toolkit needs
/// randomness. The stream is pinned by the recurrences below so that any
/// implementation, in any language, can reproduce fixtures byte for byte.
///
/// Seed scrambling (splitmix64 finalizer, applied once):
///   z = seed + 0x9E3779B97F4A7C15
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   state = z ^ (z >> 31); if state == 0 then state = 0x9E3779B97F4A7C15
///
/// next_u64 (xorshift64*):
///   state ^= state >> 12
///   state ^= state << 25
///   state ^= state >> 27
///   return state * 0x2545F4914F6CDD1D
///
/// next_unit: (next_u64() >> 11) * 2^-53, uniform in [0, 1).
/// next_gaussian: Box-Muller, consumes exactly two uniforms per call:
///   sqrt(-2 ln(1 - u1)) * cos(2 pi u2)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    state_ = z != 0 ? z : 0x9E3779B97F4A7C15ull;
  }

  std::uint64_t next_u64() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1Dull;
  }

  /// Uniform double in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal deviate. Always consumes two uniforms, so stream
  /// position is independent of how the value is used.
  double next_gaussian() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace lpc
