#pragma once

// Test-only oracles: adaptive quadrature, finite differences, and small
// sample-statistics helpers. Nothing here calls the code path it is used to
// check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracles {

// adaptive Simpson on [a, b]
inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// integral of f over (0, inf) via z = u/(1-u); the unit interval is panelled
// before the adaptive pass so sharply peaked densities cannot slip between
// the initial quadrature nodes
inline double integrate_0_inf(const std::function<double(double)>& f, double tol = 1e-10) {
  auto g = [&](double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double z = u / (1.0 - u);
    return f(z) / ((1.0 - u) * (1.0 - u));
  };
  const int panels = 128;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double a = static_cast<double>(i) / panels;
    const double b = static_cast<double>(i + 1) / panels;
    total += integrate(g, a, b, tol / panels);
  }
  return total;
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h_rel = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = h_rel * std::max(1.0, std::fabs(x(i)));
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x, double h_rel = 1e-4) {
  const Eigen::Index d = x.size();
  Eigen::MatrixXd hess(d, d);
  Eigen::VectorXd h(d);
  for (Eigen::Index i = 0; i < d; ++i) h(i) = h_rel * std::max(1.0, std::fabs(x(i)));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp(i) += h(i);
      xpp(j) += h(j);
      xpm(i) += h(i);
      xpm(j) -= h(j);
      xmp(i) -= h(i);
      xmp(j) += h(j);
      xmm(i) -= h(i);
      xmm(j) -= h(j);
      hess(i, j) = hess(j, i) =
          (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h(i) * h(j));
    }
  }
  return hess;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double idx = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

inline double median(std::vector<double> v) { return percentile(std::move(v), 0.5); }

// golden-section maximizer on [lo, hi]
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         int iters = 200) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracles
