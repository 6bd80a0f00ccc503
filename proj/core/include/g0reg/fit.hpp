#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "g0reg/model.hpp"

namespace g0reg {

enum class OptimizerKind { CG, BFGS, NelderMead };

const char* optimizer_name(OptimizerKind k);

struct FitOptions {
  OptimizerKind optimizer = OptimizerKind::CG;
  int max_iter = 500;
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;  // reserved for stochastic extensions; fits are deterministic
  std::optional<Theta> start;  // warm start (raster neighbors); init_theta otherwise
  // skip the covariance step (replication harnesses and pixel fits); avoids
  // SingularInformation/DegenerateTheta throws at boundary optima
  bool compute_cov = true;
};

enum class FitFamily { G0, Gamma, Exponential };

struct FitResult {
  FitFamily family = FitFamily::G0;
  Theta theta;                      // for baselines: alpha = -inf, looks = shape
  std::vector<std::string> names;   // free-parameter labels
  Eigen::VectorXd estimates;        // free parameters in layout order
  Eigen::MatrixXd cov;              // inverse information at theta-hat
  double loglik = 0.0;
  double aic = 0.0, aicc = 0.0, bic = 0.0;
  bool converged = false;
  int iterations = 0;
  OptimizerKind optimizer = OptimizerKind::CG;
  double grad_norm = 0.0;           // sup-norm of the natural-parameter score
  Eigen::Index n_obs = 0;
  Eigen::Index n_free = 0;
  bool init_fallback = false;       // initial-alpha root solve failed, used -3
  std::string warning;
};

// OLS start for beta on g(z); alpha from the intercept-only score equations
// solved on OLS-normalized responses; L from the spec (or 1 when free).
Theta init_theta(const RegressionSpec& spec, bool* used_fallback = nullptr);

// Maximum likelihood over the unconstrained reparameterization
// (beta, ln(-alpha-1), ln L) using the analytic score.
// Convergence: ||score||_inf < grad_tol * max(1, |loglik|).
// Never throws on nonconvergence: the result carries converged = false and
// the best theta found. Throws SingularInformation/DegenerateTheta only if
// the covariance cannot be formed at a converged optimum.
FitResult fit_mle(const RegressionSpec& spec, const FitOptions& opts = {});

// theta_k -+ z_{eps/2} sqrt(cov_kk), one pair per free parameter
std::vector<std::pair<double, double>> confidence_intervals(const FitResult& fr, double eps);

struct WaldRow {
  std::string name;
  double estimate;
  double std_error;
  double t_stat;
  double p_value;
};
std::vector<WaldRow> wald_table(const FitResult& fr);

enum class BaselineFamily { Exponential, Gamma };

// Same linear predictor and link, exponential/gamma response; the gamma shape
// plays the role L plays in the speckle model and is reported as "shape".
FitResult fit_baseline(const RegressionSpec& spec, BaselineFamily family,
                       const FitOptions& opts = {});

}  // namespace g0reg
