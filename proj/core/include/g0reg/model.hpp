#pragma once

#include <Eigen/Dense>
#include <optional>

// Regression structure for G0_I responses: Z_k ~ G0(alpha, gamma_k, L) with
// gamma_k = mu_k (-alpha-1), mu_k = g^{-1}(x_k' beta). Provides the
// log-likelihood, its analytic gradient, the expected (Fisher) information
// with a closed-form blockwise inverse, and the observed information.
//
// Free-parameter layout everywhere: (beta_0..beta_p, alpha[, looks]); the
// looks coordinate is dropped when the spec fixes L.

namespace g0reg {

enum class Link { Log, ExtendedLogit, CompLogLog };

double link_eval(Link link, double mu);     // g(mu)
double link_inv(Link link, double eta);     // g^{-1}(eta)
double link_deriv(Link link, double mu);    // g'(mu)
double link_deriv2(Link link, double mu);   // g''(mu)

class RegressionSpec {
 public:
  // X: n x (p+1) with a leading all-ones column; z: n positive responses.
  RegressionSpec(Eigen::MatrixXd design, Eigen::VectorXd response,
                 Link link = Link::Log, std::optional<double> fix_looks = {});

  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& response() const { return response_; }
  Link link() const { return link_; }

  Eigen::Index n() const { return design_.rows(); }
  Eigen::Index n_coef() const { return design_.cols(); }  // p+1
  bool looks_fixed() const { return fix_looks_.has_value(); }
  double fixed_looks() const { return *fix_looks_; }

  // number of free parameters: (p+1) + 1 for alpha (+1 for L when free)
  Eigen::Index n_free() const { return n_coef() + (looks_fixed() ? 1 : 2); }

 private:
  Eigen::MatrixXd design_;
  Eigen::VectorXd response_;
  Link link_;
  std::optional<double> fix_looks_;
};

struct Theta {
  Eigen::VectorXd beta;
  double alpha;   // < -1 so that gamma_k = mu_k(-alpha-1) > 0
  double looks;   // > 0

  void validate(const RegressionSpec& spec) const;
};

// Per-observation quantities shared by every likelihood formula.
struct Workspace {
  Eigen::VectorXd eta;      // x_k' beta
  Eigen::VectorXd mu;       // g^{-1}(eta_k)
  Eigen::VectorXd gamma_k;  // mu_k (-alpha-1)
  Eigen::VectorXd t;        // gamma_k + L z_k
  Eigen::VectorXd e_diag;   // 1/g'(mu_k)
  Eigen::VectorXd w_diag;   // Fisher weights omega_k
  bool finite = true;
};

Workspace make_workspace(const RegressionSpec& spec, const Theta& th);

// Constants of the information blocks, all functions of (alpha, L). Every
// entry is the exact expectation; the quadrature and Monte Carlo oracles in
// the tests pin each one.
struct FimConstants {
  double c1;   // (L-alpha)(-alpha-1)
  double c2;   // beta-alpha coupling per observation (times 1/(mu g'))
  double c3;   // E[d2 l / d alpha2] per observation
  double c4x;  // E[d2 l / d L2] per observation, exact
  double c5;   // beta-L coupling per observation (times 1/(mu g'))
  double c6;   // E[d2 l / d alpha dL] per observation
};
FimConstants fim_constants(double alpha, double looks);

// sum_k l_k(theta); throws NonFiniteError when the likelihood cannot be
// evaluated (overflowed predictor, nonpositive T_k)
double loglik(const RegressionSpec& spec, const Theta& th);

// -inf instead of throwing; the optimizers route through this
double loglik_or_neg_inf(const RegressionSpec& spec, const Theta& th);

// analytic gradient in natural parameters, free layout
Eigen::VectorXd score(const RegressionSpec& spec, const Theta& th);

// expected information K = E[-Hessian], free layout; positive definite at
// interior theta. Throws SingularInformation when X'WX is not PD.
Eigen::MatrixXd fisher_information(const RegressionSpec& spec, const Theta& th);

// closed-form blockwise inverse of fisher_information (no dense inversion):
// the (beta,alpha) block goes through the rank-one Schur identities, then a
// scalar Schur complement removes the L row. Throws DegenerateTheta when a
// Schur complement is nonpositive.
Eigen::MatrixXd fisher_information_inverse(const RegressionSpec& spec, const Theta& th);

// -Hessian of loglik at (spec, th), free layout
Eigen::MatrixXd observed_information(const RegressionSpec& spec, const Theta& th);

}  // namespace g0reg
