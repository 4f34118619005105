#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mtvf {

/// Counter-based SplitMix64 stream. stream(seed, k) gives the k-th sample
/// its own independent generator, so Monte Carlo sweeps produce the same
/// numbers regardless of thread count or iteration order. The standard
/// library distributions are implementation-defined, hence the hand-rolled
/// uniform and normal below.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    Rng r(seed ^ 0x5851f42d4c957f2dULL);
    r.state_ += mix(index + 0x9e3779b97f4a7c15ULL);
    return r;
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace mtvf
