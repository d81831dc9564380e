#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mbde {

// 64-bit finalizer (murmur3 style). Used to derive independent seed streams
// from a master seed so that concurrent work items stay reproducible.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xFF51AFD7ED558CCDULL;
  z ^= z >> 33;
  z *= 0xC4CEB9FE1A85EC53ULL;
  z ^= z >> 33;
  return z;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0) {
  std::uint64_t s = mix64(base + 0x9E3779B97F4A7C15ULL * (a + 1));
  return mix64(s + 0xC2B2AE3D27D4EB4FULL * (b + 1));
}

// Seeded random stream with hand-rolled distributions. std::normal_distribution
// is implementation-defined, so Box-Muller is used instead: the same seed gives
// the same draws on every platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the spare draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mbde
