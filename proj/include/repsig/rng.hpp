#pragma once

// Pinned random streams for simulation. Every trial (and every criterion
// within a trial) draws from its own engine keyed by (seed, trial, stream),
// so results do not depend on trial scheduling.

#include <cmath>
#include <cstdint>
#include <random>

namespace repsig {

inline constexpr const char* kRngAlgorithm = "mt19937_64 keyed by splitmix64(seed, trial, stream); polar normal";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t substream_key(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ stream);
}

class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream)
      : engine_(substream_key(seed, trial, stream)) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Marsaglia polar method; std::normal_distribution is not specified
  // bit-for-bit across standard libraries.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

  bool bernoulli(double q) { return uniform() < q; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace repsig
