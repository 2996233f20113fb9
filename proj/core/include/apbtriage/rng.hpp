#pragma once

#include <cstdint>

namespace apbtriage {

// SplitMix64 stream with substream derivation. Self-contained so that seeded
// runs produce identical bytes on every platform and standard library; the
// std distributions make no such promise.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed)) {}

  // Independent stream for (seed, stream); used to give every sample, tree
  // and fold its own generator so parallel work is schedule-independent.
  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ mix(stream + 0x9E3779B97F4A7C15ull));
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  std::uint32_t next_u32() { return static_cast<std::uint32_t>(next_u64() >> 32); }

  // Unbiased draw from [0, bound) by rejection. bound must be nonzero.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool next_bernoulli(double p) { return next_unit() < p; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace apbtriage
