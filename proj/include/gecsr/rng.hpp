#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace gecsr {

// Deterministic random stream.  All draws are derived from raw mt19937_64
// output with fixed arithmetic (no std::*_distribution, whose sequences are
// implementation-defined), so a seed reproduces bytes across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on (0, 1]: top 53 bits, shifted away from zero so logs are safe.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard real normal via Box-Muller; second member of each pair cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform01()));
    const double t = 2.0 * M_PI * uniform01();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Circular complex normal with E|z|^2 = 1.
  std::complex<double> complex_gaussian() {
    const double r = std::sqrt(-std::log(uniform01()));
    const double t = 2.0 * M_PI * uniform01();
    return {r * std::cos(t), r * std::sin(t)};
  }

  // Uniform integer in [0, bound), unbiased via rejection.
  std::uint64_t index(std::uint64_t bound) {
    for (;;) {
      const std::uint64_t x = gen_();
      const std::uint64_t r = x % bound;
      if (x - r <= UINT64_MAX - (bound - 1)) return r;
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gecsr
