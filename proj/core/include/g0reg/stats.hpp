#pragma once

#include <cstddef>
#include <vector>

// Reference distributions used for p-values and sampling checks: standard
// normal, Kolmogorov tail, and the limiting Cramer-von Mises W^2 law.

namespace g0reg::stats {

double norm_cdf(double x);

// Phi^{-1}(p), p in (0,1).
double norm_quantile(double p);

// two-sided normal p-value for a t statistic
double norm_two_sided_p(double t);

// Kolmogorov tail Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2)
double kolmogorov_tail(double lambda);

// one-sample KS p-value (asymptotic), d = sup |F_n - F|
double ks_pvalue(double d, std::size_t n);

// two-sample KS p-value (asymptotic)
double ks_pvalue_two_sample(double d, std::size_t n1, std::size_t n2);

// sup-norm distance between the empirical cdf of `sorted` and uniform PIT,
// i.e. the KS statistic of probability-integral-transformed data in [0,1]
double ks_statistic_uniform(const std::vector<double>& sorted_pit);

// two-sample KS statistic; both inputs must be sorted
double ks_statistic_two_sample(const std::vector<double>& a, const std::vector<double>& b);

// limiting cdf of the Cramer-von Mises statistic W^2
double cvm_asymptotic_cdf(double x);

// W^2 = 1/(12n) + sum (u_(k) - (2k-1)/(2n))^2 from sorted PIT values,
// with the asymptotic p-value
struct CvmOutcome {
  double statistic;
  double p_value;
};
CvmOutcome cvm_from_pit(const std::vector<double>& sorted_pit);

}  // namespace g0reg::stats
