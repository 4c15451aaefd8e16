#pragma once

#include <cstdint>
#include <random>

namespace anav {

/// Seeded random stream with platform-independent conversions.
///
/// The engine (mt19937_64) has a standardized output sequence; the uniform and
/// normal conversions are done here rather than through <random> distributions,
/// whose algorithms differ between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  /// Uniform integer in [0, n).
  int index(int n);

  /// Derives an independent stream seed from (base, stream) via splitmix64.
  static std::uint64_t derive(std::uint64_t base, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

}  // namespace anav
