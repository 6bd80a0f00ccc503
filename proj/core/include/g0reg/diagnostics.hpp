#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "g0reg/fit.hpp"

// Residuals, simulated envelopes, influence measures and the adequacy test
// for a fitted G0 regression. Everything is evaluated at theta-hat; ops that
// need Var(Z) require alpha-hat < -2 and throw VarianceUndefined otherwise.

namespace g0reg {

struct EnvelopeBands {
  std::vector<double> lower, median, upper;  // over sorted |SR| positions
  std::vector<double> observed;              // sorted |SR| of the data fit
  int requested = 0;
  int dropped = 0;  // replicates whose refit did not converge
};

struct DiagnosticsReport {
  Eigen::VectorXd mu_hat;
  Eigen::VectorXd std_resid;      // r_k; empty when variance undefined
  Eigen::VectorXd dev_resid;      // raw D_dk
  Eigen::VectorXd std_dev_resid;  // SR_k
  Eigen::VectorXd leverage;       // h_kk
  Eigen::VectorXd gl_diag;        // diag GL(beta), observed-information form
  Eigen::VectorXd cook;           // empty when variance undefined
  Eigen::VectorXd dffits;         // empty when variance undefined
  EnvelopeBands envelope;
  std::vector<std::vector<std::string>> flags;  // per-obs tokens: cook/leverage/dffits
  double mab = 0.0, rmse = 0.0;
  bool variance_defined = true;
  double cook_threshold = 0.0, leverage_threshold = 0.0, dffits_threshold = 0.0;
};

Eigen::VectorXd standardized_residuals(const RegressionSpec& spec, const FitResult& fr);

// raw: sign(z - mu-hat) sqrt(2 [l_k(mu_sat) - l_k(mu-hat)]) with the
// per-observation saturated mean mu_sat = z(-alpha)/(-alpha-1) at fixed
// (alpha-hat, L-hat); standardized: D / (S sqrt(1-h)), S = sum D^2/(n-p)
std::pair<Eigen::VectorXd, Eigen::VectorXd> deviance_residuals(const RegressionSpec& spec,
                                                               const FitResult& fr);

// per-observation saturated log-likelihood (closed form); the tests verify
// it against numeric 1-D maximization
double saturated_loglik(const RegressionSpec& spec, const FitResult& fr);

EnvelopeBands simulated_envelope(const RegressionSpec& spec, const FitResult& fr,
                                 int nu = 19, std::uint64_t seed = 1,
                                 const FitOptions& refit_opts = {});

// diagonal of the weighted hat matrix W^{1/2} X (X'WX)^{-1} X' W^{1/2}
Eigen::VectorXd leverage(const RegressionSpec& spec, const FitResult& fr);

enum class GlMode { BetaOnly, Full };

// Wei's generalized leverage d z-hat / d z' as an n x n matrix. BetaOnly
// treats (alpha, L) as fixed nuisance; Full differentiates through the whole
// parameter vector via the partitioned observed-information inverse.
Eigen::MatrixXd generalized_leverage(const RegressionSpec& spec, const FitResult& fr,
                                     GlMode mode);

// expected-information variant of the GL diagonal, omega_k x'(X'WX)^{-1}x
Eigen::VectorXd gl_expected_diag(const RegressionSpec& spec, const FitResult& fr);

// one-pass deletion approximations
Eigen::VectorXd cook_distance(const RegressionSpec& spec, const FitResult& fr);
Eigen::VectorXd dffits(const RegressionSpec& spec, const FitResult& fr);

double cook_flag_threshold(Eigen::Index n, Eigen::Index n_coef);      // 8/(n-2p)
double leverage_flag_threshold(Eigen::Index n, Eigen::Index n_coef);  // 3p/n
double dffits_flag_threshold(Eigen::Index n, Eigen::Index n_coef);    // 2 sqrt(p/(n-p))

// (MAB, RMSE) of mu-hat against z
std::pair<double, double> fit_metrics(const RegressionSpec& spec, const FitResult& fr);

// Cramer-von Mises test of ratios ~ G0(alpha0, -alpha0-1, looks); returns
// (W^2, asymptotic p-value)
std::pair<double, double> cvm_adequacy(const std::vector<double>& ratios, double alpha0,
                                       double looks);

// minimum mean-square-error alpha0: minimizes the mean squared distance
// between the empirical cdf and the G0(alpha, -alpha-1, looks) cdf
double mmse_alpha0(const std::vector<double>& ratios, double looks);

DiagnosticsReport diagnose(const RegressionSpec& spec, const FitResult& fr, int nu = 19,
                           std::uint64_t seed = 1);

}  // namespace g0reg
