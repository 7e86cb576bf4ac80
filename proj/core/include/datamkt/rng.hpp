#pragma once

#include <cmath>
#include <cstdint>

namespace datamkt {

// SplitMix64. Used everywhere randomness is needed so that results depend
// only on the seed, never on the standard library or on thread scheduling.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one draw per call, the spare is discarded.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

 private:
  std::uint64_t state_;
};

// Derives an independent substream key from (seed, counters). Sampling code
// keyed this way gives the same draws no matter how work is sharded.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  SplitMix64 mix(seed ^ (a * 0xd1342543de82ef95ULL) ^ (b * 0xaf251af3b0f025b5ULL));
  return mix.next();
}

}  // namespace datamkt
