#pragma once

#include <cstdint>
#include <random>

namespace g0reg {

// Derives an independent stream seed from a base seed (splitmix64 step).
// Used wherever replications/pixels need their own generator.
inline std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// mt19937_64 with our own distributions on top. The engine output is pinned
// by the standard, so sequences are reproducible across platforms; the
// std:: distributions are not, which is why uniform/normal/gamma live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform on (0,1); never returns 0 or 1
  double uniform() {
    // 53-bit mantissa, shifted into (0,1)
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal (Marsaglia polar, one spare cached)
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  // Gamma(shape, rate) by Marsaglia-Tsang, with the u^(1/shape) boost for
  // shape < 1 (roughness -alpha and looks L both range below and above 1).
  double gamma(double shape, double rate) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace g0reg
