// Small deterministic RNG so datasets and experiments reproduce bit-exactly
// across platforms (std::normal_distribution is implementation-defined).
#pragma once

#include <cmath>
#include <cstdint>

namespace fss {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // splitmix64
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one value per call (no cached spare so the stream is
  // position-independent of consumer call patterns)
  double gaussian(double mean = 0.0, double sigma = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    return mean + sigma * g;
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

private:
  std::uint64_t state_;
};

// Derive independent sub-streams from a base seed (dataset per view, per
// experiment repetition, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  Rng r(base ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL));
  return r.next_u64();
}

}  // namespace fss
