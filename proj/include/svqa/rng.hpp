#pragma once

#include <cmath>
#include <cstdint>

namespace svqa {

// Counter-based SplitMix64 generator. The integer stream and the
// uniform-double mapping use only exact integer/IEEE operations, so a seed
// reproduces the same stream everywhere. normal() goes through Box-Muller
// (libm log/cos), which is deterministic per platform/libm.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [lo, hi)
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo));
  }

  double normal(double mean, double stddev) {
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Independent stream derived from this generator's seed and a stream id.
  // Does not advance this generator.
  Rng split(uint64_t stream) const {
    return Rng(mix(mix(state_ + 0x9E3779B97F4A7C15ULL) ^
                   (0xBF58476D1CE4E5B9ULL * (stream + 1))));
  }

 private:
  uint64_t state_;

  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

}  // namespace svqa
