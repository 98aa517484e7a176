#pragma once

#include <cstdint>
#include <random>

namespace boltzgen {

/// Deterministic uniform stream: mt19937_64 seeded through SplitMix64, with
/// per-session seed derivation so fanned-out sessions stay reproducible
/// regardless of scheduling. Uniforms are (u64 >> 11) * 2^-53 in [0, 1).
class RandomStream {
 public:
  static constexpr const char* kAlgorithmId = "mt19937_64+splitmix64";

  explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double next_uniform() {
    ++consumed_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n), n >= 1; rejection keeps it exactly uniform.
  std::uint64_t next_below(std::uint64_t n) {
    ++consumed_;
    if (n <= 1) return 0;
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    for (;;) {
      std::uint64_t v = engine_();
      if (v <= limit) return v % n;
    }
  }

  std::uint64_t uniforms_consumed() const { return consumed_; }

  static std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Seed for session `index` under master seed `base`.
  static std::uint64_t derive_session_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 0x51ed270b0a1ULL));
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t consumed_ = 0;
};

}  // namespace boltzgen
