#pragma once

// Deterministic RNG. uniform() is hand-rolled from raw 64-bit draws so the
// stream is identical across standard libraries (std::uniform_real_distribution
// is implementation-defined).

#include <cstdint>
#include <random>

#include "mvfuse/math.hpp"

namespace mvfuse {

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return engine_() % n; }

  Vec3 unit_vector() {
    // Rejection sample in the cube; deterministic and unbiased.
    for (;;) {
      Vec3 v{uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
      double l2 = length_squared(v);
      if (l2 > 1e-8 && l2 <= 1.0) return v / std::sqrt(l2);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mvfuse
