#pragma once

#include <cstdint>

namespace mpcc {

/// Counter-based SplitMix64 generator.
///
/// The stream for seed s is out_i = mix64(s + (i+1) * 0x9E3779B97F4A7C15),
/// i.e. plain SplitMix64 with starting state s. Integer outputs are
/// bit-identical across platforms; Gaussian draws go through libm (log/sqrt)
/// and are identical up to last-ulp rounding of the C library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Standard normal via the Marsaglia polar method.
  double next_gaussian();

  /// Uniform integer in [0, n).
  std::uint64_t next_index(std::uint64_t n) { return next_u64() % n; }

  /// Derive an independent stream for job `id` from the same seed.
  static Rng fork(std::uint64_t seed, std::uint64_t id) {
    Rng r(seed ^ (0xD1B54A32D192ED03ULL * (id + 1)));
    r.next_u64();  // burn one output to decorrelate nearby ids
    return Rng(r.next_u64());
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mpcc
