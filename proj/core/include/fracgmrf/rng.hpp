#ifndef FRACGMRF_RNG_HPP
#define FRACGMRF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "fracgmrf/types.hpp"

namespace fracgmrf {

/// Deterministic standard-normal stream. Uniform draws are mapped from the
/// top 53 bits of mt19937_64 output and paired through Box-Muller, so the
/// sequence depends only on the seed, not on any library distribution
/// implementation.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  Vec vector(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = next();
    return v;
  }

 private:
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fracgmrf

#endif
