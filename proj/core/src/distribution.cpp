#include "g0reg/distribution.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "g0reg/errors.hpp"
#include "g0reg/special.hpp"

namespace g0reg {

using special::log_beta;
using special::log_gamma;

G0Params::G0Params(double alpha, double gamma, double looks)
    : alpha_(alpha), gamma_(gamma), looks_(looks) {
  if (!(alpha < 0.0))
    throw DomainError("G0Params: alpha must be < 0, got " + std::to_string(alpha));
  if (!(gamma > 0.0))
    throw DomainError("G0Params: gamma must be > 0, got " + std::to_string(gamma));
  if (!(looks > 0.0))
    throw DomainError("G0Params: looks must be > 0, got " + std::to_string(looks));
  if (!std::isfinite(alpha) || !std::isfinite(gamma) || !std::isfinite(looks))
    throw DomainError("G0Params: parameters must be finite");
}

double log_pdf(const G0Params& p, double z) {
  if (!(z >= 0.0)) throw DomainError("log_pdf: z must be >= 0, got " + std::to_string(z));
  const double a = p.alpha(), g = p.gamma(), L = p.looks();
  // log of L^L Gamma(L-a) z^{L-1} (g+Lz)^{a-L} / (g^a Gamma(-a) Gamma(L));
  // all gamma terms stay in log space so |alpha| ~ 50 cannot overflow
  if (z == 0.0 && L < 1.0) return std::numeric_limits<double>::infinity();
  const double lz = (L == 1.0) ? 0.0 : (L - 1.0) * std::log(z);
  return L * std::log(L) + log_gamma(L - a) - a * std::log(g) - log_gamma(-a) -
         log_gamma(L) + lz + (a - L) * std::log(g + L * z);
}

double pdf(const G0Params& p, double z) {
  if (!(z >= 0.0)) throw DomainError("pdf: z must be >= 0, got " + std::to_string(z));
  if (z == 0.0) {
    const double L = p.looks();
    if (L > 1.0) return 0.0;
    if (L < 1.0) return std::numeric_limits<double>::infinity();
  }
  return std::exp(log_pdf(p, z));
}

double cdf(const G0Params& p, double z) {
  if (!(z >= 0.0)) throw DomainError("cdf: z must be >= 0, got " + std::to_string(z));
  const double s = p.gamma() / (p.gamma() + p.looks() * z);
  return 1.0 - special::reg_inc_beta(s, -p.alpha(), p.looks());
}

double quantile(const G0Params& p, double u) {
  if (!(u > 0.0 && u < 1.0))
    throw DomainError("quantile: u must be in (0,1), got " + std::to_string(u));
  const double s = special::inv_reg_inc_beta(1.0 - u, -p.alpha(), p.looks());
  return p.gamma() * (1.0 - s) / (p.looks() * s);
}

double sample_one(const G0Params& p, Rng& rng) {
  const double g = rng.gamma(-p.alpha(), p.gamma());       // X = 1/g ~ inverse-gamma
  const double y = rng.gamma(p.looks(), p.looks());        // speckle
  return y / g;
}

std::vector<double> sample(const G0Params& p, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample: n must be >= 1");
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& z : out) z = sample_one(p, rng);
  return out;
}

double moment(const G0Params& p, int h) {
  if (h < 1) throw DomainError("moment: h must be >= 1");
  const double a = p.alpha(), g = p.gamma(), L = p.looks();
  if (!(a < -h))
    throw MomentDiverges("moment of order " + std::to_string(h) +
                         " diverges for alpha = " + std::to_string(a));
  const double lr = log_beta(L + h, -a - h) - log_beta(L, -a);
  return std::pow(g / L, h) * std::exp(lr);
}

double variance(const G0Params& p) {
  const double a = p.alpha(), L = p.looks();
  if (!(a < -2.0))
    throw MomentDiverges("variance diverges for alpha = " + std::to_string(a));
  const double mu = moment(p, 1);
  return mu * mu * (((a + 1.0) / (a + 2.0)) * (L + 1.0) / L - 1.0);
}

double reciprocal_t_moment(const G0Params& p, int h) {
  if (h < 1) throw DomainError("reciprocal_t_moment: h must be >= 1");
  const double a = p.alpha(), L = p.looks();
  double prod = 1.0;
  for (int k = 0; k < h; ++k) prod *= (-a + k) / (-a + L + k);
  return prod / std::pow(p.gamma(), h);
}

G0Params scale(const G0Params& p, double c) {
  if (!(c > 0.0)) throw DomainError("scale: c must be > 0, got " + std::to_string(c));
  return {p.alpha(), c * p.gamma(), p.looks()};
}

}  // namespace g0reg
