#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace sectorfm {

/// Stream ids for seed-derived generators. Each sampled quantity owns a
/// stream, so changing how one quantity is drawn never shifts the draws of
/// the others.
enum class RngStream : std::uint32_t {
  kLoadings = 1,
  kUniqueVariances = 2,
  kFactors = 3,
  kNoise = 4,
  kFitInit = 5,
};

/// mt19937_64 plus explicit scalar transforms. Engine and seed_seq are fully
/// specified by the standard and no std::*_distribution is used, so a given
/// (seed, stream) pair produces bit-identical draws on every platform.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, RngStream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x9e3779b9u};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second deviate is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi_v<double> * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// -1 or +1 with equal probability.
  double sign() { return uniform() < 0.5 ? -1.0 : 1.0; }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sectorfm
