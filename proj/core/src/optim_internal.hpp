#pragma once

#include <Eigen/Dense>
#include <functional>

// Minimizers used by the fit module. All work on smooth objectives that may
// return +inf outside the feasible region (the line searches just back off).

namespace g0reg::detail {

using ObjFn = std::function<double(const Eigen::VectorXd&)>;
using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
// Called once per accepted iterate with (x, f, g); returning true stops the
// loop (used for the score-based convergence rule).
using StopFn = std::function<bool(const Eigen::VectorXd&, double, const Eigen::VectorXd&)>;

struct MinResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool stopped = false;  // the stop callback fired
};

// Polak-Ribiere+ nonlinear CG with Armijo backtracking and steepest-descent
// restarts.
MinResult minimize_cg(const ObjFn& f, const GradFn& g, Eigen::VectorXd x0,
                      int max_iter, const StopFn& stop);

// BFGS on the dense inverse Hessian, curvature-guarded updates.
MinResult minimize_bfgs(const ObjFn& f, const GradFn& g, Eigen::VectorXd x0,
                        int max_iter, const StopFn& stop);

// Nelder-Mead simplex with restarts; derivative-free, `stop` is checked on
// the running best vertex.
MinResult minimize_nelder_mead(const ObjFn& f, Eigen::VectorXd x0, int max_iter,
                               const StopFn& stop);

}  // namespace g0reg::detail
