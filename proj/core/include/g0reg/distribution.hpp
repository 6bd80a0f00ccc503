#pragma once

#include <cstdint>
#include <vector>

#include "g0reg/rng.hpp"

// The G0_I intensity law: Z = X * Y with X ~ inverse-gamma(-alpha, gamma)
// and Y ~ Gamma(L, L). Heavy right tail; moments of order h exist only for
// alpha < -h. T = gamma + L Z shows up throughout the regression calculus.

namespace g0reg {

class G0Params {
 public:
  // alpha < 0 (roughness), gamma > 0 (brightness), looks > 0
  G0Params(double alpha, double gamma, double looks);

  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  double looks() const { return looks_; }

  bool mean_defined() const { return alpha_ < -1.0; }
  bool variance_defined() const { return alpha_ < -2.0; }

 private:
  double alpha_, gamma_, looks_;
};

double log_pdf(const G0Params& p, double z);
double pdf(const G0Params& p, double z);

// F(z) = 1 - I_s(-alpha, L) with s = gamma/(gamma + L z), since gamma/T is
// Beta(-alpha, L) distributed.
double cdf(const G0Params& p, double z);

// inverse cdf on (0,1); cdf(quantile(u)) = u to ~1e-12
double quantile(const G0Params& p, double u);

double sample_one(const G0Params& p, Rng& rng);
std::vector<double> sample(const G0Params& p, std::size_t n, std::uint64_t seed);

// E[Z^h] = (gamma/L)^h B(L+h, -alpha-h)/B(L, -alpha); requires alpha < -h
double moment(const G0Params& p, int h);

// requires alpha < -2
double variance(const G0Params& p);

// E[(gamma + L Z)^{-h}] = gamma^{-h} prod_{k<h} (-alpha+k)/(-alpha+L+k)
double reciprocal_t_moment(const G0Params& p, int h);

// scale family: c Z ~ G0(alpha, c gamma, L)
G0Params scale(const G0Params& p, double c);

}  // namespace g0reg
