#include "optim_internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace g0reg::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijoC1 = 1e-4;

// Backtracking Armijo with quadratic interpolation and greedy expansion of
// immediately-acceptable steps; returns the accepted step (0 on failure).
// The expansion matters on the near-flat ridge the roughness coordinate
// produces when a sample is effectively gamma distributed.
double armijo(const ObjFn& f, const Eigen::VectorXd& x, double fx,
              const Eigen::VectorXd& d, double slope, double step0,
              Eigen::VectorXd& x_new, double& f_new) {
  double step = step0;
  for (int i = 0; i < 60; ++i) {
    x_new = x + step * d;
    f_new = f(x_new);
    if (std::isfinite(f_new) && f_new <= fx + kArmijoC1 * step * slope) {
      if (i == 0) {
        // keep doubling while it helps
        for (int j = 0; j < 30; ++j) {
          const Eigen::VectorXd x_try = x + 2.0 * step * d;
          const double f_try = f(x_try);
          if (!std::isfinite(f_try) || f_try >= f_new) break;
          step *= 2.0;
          x_new = x_try;
          f_new = f_try;
        }
      }
      return step;
    }
    double next = 0.5 * step;
    if (std::isfinite(f_new)) {
      // minimizer of the quadratic through (0, fx), slope, (step, f_new)
      const double denom = 2.0 * (f_new - fx - slope * step);
      if (denom > 0.0) next = std::clamp(-slope * step * step / denom, 0.1 * step, 0.5 * step);
    }
    step = next;
  }
  return 0.0;
}

}  // namespace

MinResult minimize_cg(const ObjFn& f, const GradFn& g, Eigen::VectorXd x0,
                      int max_iter, const StopFn& stop) {
  MinResult res;
  Eigen::VectorXd x = std::move(x0);
  double fx = f(x);
  Eigen::VectorXd grad = g(x);
  Eigen::VectorXd d = -grad;
  double slope_prev = 0.0, step_prev = 0.0;
  int stagnant = 0;

  int it = 0;
  for (; it < max_iter; ++it) {
    if (stop(x, fx, grad)) {
      res.stopped = true;
      break;
    }
    double slope = grad.dot(d);
    if (!(slope < -1e-12 * d.norm() * grad.norm())) {
      d = -grad;
      slope = grad.dot(d);
      if (!(slope < 0.0)) break;  // gradient numerically zero
    }
    // slope-ratio step seeding (fresh 1/|g| after restarts)
    double step0 = (step_prev > 0.0 && slope < 0.0)
                       ? step_prev * std::min(10.0, slope_prev / slope)
                       : 1.0 / std::max(1.0, grad.norm());
    step0 = std::clamp(step0, 1e-12, 1e4);
    Eigen::VectorXd x_new;
    double f_new;
    double step = armijo(f, x, fx, d, slope, step0, x_new, f_new);
    if (step == 0.0) {
      d = -grad;
      slope = grad.dot(d);
      step = armijo(f, x, fx, d, slope, 1.0 / std::max(1.0, grad.norm()), x_new, f_new);
      if (step == 0.0) break;
    }
    if (fx - f_new < 1e-14 * (1.0 + std::fabs(fx))) {
      if (++stagnant >= 50) break;  // no measurable progress, stop honestly
    } else {
      stagnant = 0;
    }
    Eigen::VectorXd grad_new = g(x_new);
    // Powell restart once successive gradients lose orthogonality; otherwise
    // the Armijo (inexact) searches erode conjugacy and the method zigzags
    const double gg = grad.squaredNorm();
    double beta_pr = 0.0;
    if (std::fabs(grad_new.dot(grad)) < 0.2 * grad_new.squaredNorm())
      beta_pr = std::max(0.0, grad_new.dot(grad_new - grad) / std::max(gg, 1e-300));
    d = -grad_new + beta_pr * d;
    x = std::move(x_new);
    fx = f_new;
    grad = std::move(grad_new);
    step_prev = step;
    slope_prev = slope;
  }
  res.x = std::move(x);
  res.f = fx;
  res.iterations = it;
  return res;
}

MinResult minimize_bfgs(const ObjFn& f, const GradFn& g, Eigen::VectorXd x0,
                        int max_iter, const StopFn& stop) {
  MinResult res;
  const Eigen::Index n = x0.size();
  Eigen::VectorXd x = std::move(x0);
  double fx = f(x);
  Eigen::VectorXd grad = g(x);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, grad.norm());

  int it = 0;
  for (; it < max_iter; ++it) {
    if (stop(x, fx, grad)) {
      res.stopped = true;
      break;
    }
    Eigen::VectorXd d = -(hinv * grad);
    double slope = grad.dot(d);
    if (!(slope < 0.0)) {
      hinv = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, grad.norm());
      d = -grad / std::max(1.0, grad.norm());
      slope = grad.dot(d);
      if (!(slope < 0.0)) break;
    }
    Eigen::VectorXd x_new;
    double f_new;
    const double step = armijo(f, x, fx, d, slope, 1.0, x_new, f_new);
    if (step == 0.0) break;
    Eigen::VectorXd grad_new = g(x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd vs = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      hinv = vs * hinv * vs.transpose() + rho * s * s.transpose();
    }
    x = std::move(x_new);
    fx = f_new;
    grad = std::move(grad_new);
  }
  res.x = std::move(x);
  res.f = fx;
  res.iterations = it;
  return res;
}

MinResult minimize_nelder_mead(const ObjFn& f, Eigen::VectorXd x0, int max_iter,
                               const StopFn& stop) {
  MinResult res;
  const Eigen::Index n = x0.size();
  const int max_eval = std::max(200, max_iter) * 40 * static_cast<int>(n);

  auto run_simplex = [&](Eigen::VectorXd center, double scale, int eval_budget,
                         Eigen::VectorXd& best_x, double& best_f) {
    std::vector<Eigen::VectorXd> v(n + 1, center);
    std::vector<double> fv(n + 1);
    for (Eigen::Index i = 0; i < n; ++i)
      v[i + 1](i) += scale * std::max(0.1, std::fabs(center(i)));
    for (Eigen::Index i = 0; i <= n; ++i) fv[i] = f(v[i]);
    int evals = static_cast<int>(n) + 1;
    while (evals < eval_budget) {
      // order
      std::vector<int> idx(n + 1);
      for (int i = 0; i <= n; ++i) idx[i] = i;
      std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
      std::vector<Eigen::VectorXd> vs(n + 1);
      std::vector<double> fs(n + 1);
      for (int i = 0; i <= n; ++i) {
        vs[i] = v[idx[i]];
        fs[i] = fv[idx[i]];
      }
      v = vs;
      fv = fs;
      if (std::isfinite(fv[n]) &&
          fv[n] - fv[0] < 1e-13 * (1.0 + std::fabs(fv[0])))
        break;
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) centroid += v[i];
      centroid /= static_cast<double>(n);
      const Eigen::VectorXd xr = centroid + (centroid - v[n]);
      const double fr = f(xr);
      ++evals;
      if (fr < fv[0]) {
        const Eigen::VectorXd xe = centroid + 2.0 * (centroid - v[n]);
        const double fe = f(xe);
        ++evals;
        if (fe < fr) {
          v[n] = xe;
          fv[n] = fe;
        } else {
          v[n] = xr;
          fv[n] = fr;
        }
      } else if (fr < fv[n - 1]) {
        v[n] = xr;
        fv[n] = fr;
      } else {
        const Eigen::VectorXd xc = centroid + 0.5 * (v[n] - centroid);
        const double fc = f(xc);
        ++evals;
        if (fc < fv[n]) {
          v[n] = xc;
          fv[n] = fc;
        } else {
          for (Eigen::Index i = 1; i <= n; ++i) {
            v[i] = v[0] + 0.5 * (v[i] - v[0]);
            fv[i] = f(v[i]);
          }
          evals += static_cast<int>(n);
        }
      }
    }
    int bi = 0;
    for (int i = 1; i <= n; ++i)
      if (fv[i] < fv[bi]) bi = i;
    best_x = v[bi];
    best_f = fv[bi];
    return evals;
  };

  Eigen::VectorXd best = std::move(x0);
  double fbest = kInf;
  int used = 0;
  // restarts with a shrinking simplex sharpen the endpoint enough for the
  // score-based convergence check; the wide early rounds let the simplex
  // walk flat ridges before the polish rounds
  const double scales[] = {0.25, 0.1, 0.02, 0.004, 0.0008};
  const int rounds = 5;
  for (int round = 0; round < rounds && used < max_eval; ++round) {
    Eigen::VectorXd bx;
    double bf;
    used += run_simplex(best, scales[round], (max_eval - used) / (rounds - round), bx, bf);
    if (bf < fbest) {
      fbest = bf;
      best = bx;
    }
  }
  res.x = best;
  res.f = fbest;
  res.iterations = used;
  res.stopped = stop(best, fbest, Eigen::VectorXd());
  return res;
}

}  // namespace g0reg::detail
