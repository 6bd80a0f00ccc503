#pragma once

// Special functions backing every likelihood evaluation: log-gamma, digamma,
// polygamma of order 1 and 2, (log) beta, and the regularized incomplete
// beta with its inverse. All routines are stateless and reentrant.

namespace g0reg::special {

// ln Gamma(x), x > 0. Relative error <= 1e-12 on [1e-6, 1e6].
double log_gamma(double x);

// psi(x) = d ln Gamma / dx, x > 0.
double digamma(double x);

// psi^(k)(x) for k in {1, 2}, x > 0.
double polygamma(int k, double x);

double log_beta(double a, double b);

// I_x(a, b), 0 <= x <= 1, a > 0, b > 0. Absolute error <= 1e-12.
double reg_inc_beta(double x, double a, double b);

// x with I_x(a, b) = p, for p in (0, 1).
double inv_reg_inc_beta(double p, double a, double b);

}  // namespace g0reg::special
