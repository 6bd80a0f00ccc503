#include "g0reg/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "g0reg/errors.hpp"
#include "g0reg/special.hpp"

namespace g0reg {

using special::digamma;
using special::log_gamma;
using special::polygamma;

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

// The extended-logit and cloglog links need a positive-support cdf F; we use
// F(mu) = 1 - e^{-mu} for the former and F(mu) = mu/(1+mu) for the latter so
// the two stay distinct (with the exponential F, cloglog collapses to log).
double link_eval(Link link, double mu) {
  if (!(mu > 0.0)) throw DomainError("link_eval: mu must be > 0, got " + std::to_string(mu));
  switch (link) {
    case Link::Log:
      return std::log(mu);
    case Link::ExtendedLogit:
      return mu + std::log(-std::expm1(-mu));  // ln(e^mu - 1), stable for small mu
    case Link::CompLogLog:
      return std::log(std::log1p(mu));
  }
  throw DomainError("link_eval: bad link");
}

double link_inv(Link link, double eta) {
  switch (link) {
    case Link::Log:
      return std::exp(eta);
    case Link::ExtendedLogit:
      return eta > 30.0 ? eta : std::log1p(std::exp(eta));
    case Link::CompLogLog:
      return std::expm1(std::exp(eta));
  }
  throw DomainError("link_inv: bad link");
}

double link_deriv(Link link, double mu) {
  if (!(mu > 0.0)) throw DomainError("link_deriv: mu must be > 0");
  switch (link) {
    case Link::Log:
      return 1.0 / mu;
    case Link::ExtendedLogit:
      return 1.0 / -std::expm1(-mu);
    case Link::CompLogLog:
      return 1.0 / ((1.0 + mu) * std::log1p(mu));
  }
  throw DomainError("link_deriv: bad link");
}

double link_deriv2(Link link, double mu) {
  if (!(mu > 0.0)) throw DomainError("link_deriv2: mu must be > 0");
  switch (link) {
    case Link::Log:
      return -1.0 / (mu * mu);
    case Link::ExtendedLogit: {
      const double em = std::exp(-mu);
      const double de = -std::expm1(-mu);  // 1 - e^-mu
      return -em / (de * de);
    }
    case Link::CompLogLog: {
      const double l1 = std::log1p(mu);
      const double b = (1.0 + mu) * l1;
      return -(l1 + 1.0) / (b * b);
    }
  }
  throw DomainError("link_deriv2: bad link");
}

RegressionSpec::RegressionSpec(Eigen::MatrixXd design, Eigen::VectorXd response,
                               Link link, std::optional<double> fix_looks)
    : design_(std::move(design)), response_(std::move(response)), link_(link),
      fix_looks_(fix_looks) {
  const Eigen::Index n = design_.rows(), q = design_.cols();
  if (response_.size() != n)
    throw DomainError("RegressionSpec: design rows and response length differ");
  if (q < 1 || n <= q)
    throw DomainError("RegressionSpec: need n > p+1 observations, got n = " +
                      std::to_string(n) + ", p+1 = " + std::to_string(q));
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::fabs(design_(k, 0) - 1.0) > 1e-12)
      throw DomainError("RegressionSpec: first design column must be all ones");
    if (!(response_(k) > 0.0) || !std::isfinite(response_(k)))
      throw DomainError("RegressionSpec: responses must be strictly positive (row " +
                        std::to_string(k) + ")");
    if (!design_.row(k).allFinite())
      throw DomainError("RegressionSpec: design must be finite (row " + std::to_string(k) + ")");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design_);
  qr.setThreshold(1e-10);
  if (qr.rank() < q)
    throw DomainError("RegressionSpec: design matrix is rank deficient (rank " +
                      std::to_string(qr.rank()) + " < " + std::to_string(q) + ")");
  if (fix_looks_ && !(*fix_looks_ > 0.0))
    throw DomainError("RegressionSpec: fixed looks must be > 0");
}

void Theta::validate(const RegressionSpec& spec) const {
  if (beta.size() != spec.n_coef())
    throw DomainError("Theta: beta has length " + std::to_string(beta.size()) +
                      ", expected " + std::to_string(spec.n_coef()));
  if (!(alpha < -1.0))
    throw DomainError("Theta: alpha must be < -1, got " + std::to_string(alpha));
  if (!(looks > 0.0))
    throw DomainError("Theta: looks must be > 0, got " + std::to_string(looks));
  if (spec.looks_fixed() && std::fabs(looks - spec.fixed_looks()) > 1e-12)
    throw DomainError("Theta: looks must equal the spec's fixed value");
}

Workspace make_workspace(const RegressionSpec& spec, const Theta& th) {
  th.validate(spec);
  const Eigen::Index n = spec.n();
  const double a = th.alpha, L = th.looks;
  Workspace ws;
  // beyond |alpha|, L ~ 1e8 the gamma-term cancellations in the likelihood
  // exceed double precision and can fabricate spurious maxima; the model is
  // indistinguishable from its gamma boundary long before that
  if (a < -1e8 || L > 1e8) {
    ws.finite = false;
    return ws;
  }
  ws.eta = spec.design() * th.beta;
  ws.mu.resize(n);
  ws.gamma_k.resize(n);
  ws.t.resize(n);
  ws.e_diag.resize(n);
  ws.w_diag.resize(n);
  const double wconst = L / (L - a + 1.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::fabs(ws.eta(k)) > 690.0) {  // exp overflow under the log link
      ws.finite = false;
      return ws;
    }
    const double mu = link_inv(spec.link(), ws.eta(k));
    if (!(mu > 0.0) || !std::isfinite(mu)) {
      ws.finite = false;
      return ws;
    }
    const double gp = link_deriv(spec.link(), mu);
    ws.mu(k) = mu;
    ws.gamma_k(k) = mu * (-a - 1.0);
    ws.t(k) = ws.gamma_k(k) + L * spec.response()(k);
    ws.e_diag(k) = 1.0 / gp;
    ws.w_diag(k) = wconst / (mu * mu * gp * gp);
    if (!(ws.t(k) > 0.0) || !std::isfinite(ws.t(k))) {
      ws.finite = false;
      return ws;
    }
  }
  return ws;
}

FimConstants fim_constants(double a, double L) {
  FimConstants c;
  const double am1 = -a - 1.0;           // -alpha-1 > 0
  const double la = L - a;               // L - alpha > 0
  c.c1 = la * am1;
  c.c2 = -(1.0 + (2.0 * a + 1.0 - L) * a / (am1 * (a - L)) +
           a * (a - 1.0) / (am1 * (la + 1.0)));
  const double u1p = polygamma(1, la) - polygamma(1, -a) + 1.0 / am1 - 1.0 / (am1 * am1);
  c.c3 = u1p + 2.0 * a / (la * am1) + a * (a - 1.0) / (am1 * am1 * (la + 1.0));
  c.c4x = polygamma(1, la) - polygamma(1, L) + 1.0 / L - 2.0 / la +
          (L + 1.0) / (L * (la + 1.0));
  c.c5 = a / (la * (la + 1.0));
  c.c6 = -polygamma(1, la) + 1.0 / la + (-a) / (am1 * la * (la + 1.0));
  return c;
}

namespace {

double loglik_ws(const RegressionSpec& spec, const Theta& th, const Workspace& ws) {
  if (!ws.finite) return kNegInf;
  const Eigen::Index n = spec.n();
  const double a = th.alpha, L = th.looks;
  const double per_obs_const = L * std::log(L) + log_gamma(L - a) -
                               a * std::log(-a - 1.0) - log_gamma(-a) - log_gamma(L);
  double s = n * per_obs_const;
  for (Eigen::Index k = 0; k < n; ++k) {
    s += -a * std::log(ws.mu(k)) + (L - 1.0) * std::log(spec.response()(k)) +
         (a - L) * std::log(ws.t(k));
  }
  return std::isfinite(s) ? s : kNegInf;
}

}  // namespace

double loglik_or_neg_inf(const RegressionSpec& spec, const Theta& th) {
  return loglik_ws(spec, th, make_workspace(spec, th));
}

double loglik(const RegressionSpec& spec, const Theta& th) {
  const double v = loglik_or_neg_inf(spec, th);
  if (!std::isfinite(v))
    throw NonFiniteError("loglik: likelihood not finite at the given theta");
  return v;
}

Eigen::VectorXd score(const RegressionSpec& spec, const Theta& th) {
  const Workspace ws = make_workspace(spec, th);
  if (!ws.finite) throw NonFiniteError("score: workspace not finite");
  const Eigen::Index n = spec.n(), q = spec.n_coef();
  const double a = th.alpha, L = th.looks;
  const double c1 = (L - a) * (-a - 1.0);
  const double u1 = -digamma(L - a) + digamma(-a) - std::log(-a - 1.0) + a / (-a - 1.0);

  Eigen::VectorXd out(spec.n_free());
  Eigen::VectorXd ub = Eigen::VectorXd::Zero(q);
  double ua = n * u1;
  double ul = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mu = ws.mu(k), t = ws.t(k), z = spec.response()(k);
    // d l_k / d mu_k = -a/mu - c1/T; the FD oracle pins this form
    const double v = -a / mu - c1 / t;
    ub += v * ws.e_diag(k) * spec.design().row(k).transpose();
    ua += std::log(t / mu) - (a - L) * mu / t;
    ul += std::log(z / t) + (a - L) * z / t;
  }
  out.head(q) = ub;
  out(q) = ua;
  if (!spec.looks_fixed()) {
    const double u2 = 1.0 + std::log(L) + digamma(L - a) - digamma(L);
    out(q + 1) = n * u2 + ul;
  }
  return out;
}

Eigen::MatrixXd fisher_information(const RegressionSpec& spec, const Theta& th) {
  const Workspace ws = make_workspace(spec, th);
  if (!ws.finite) throw NonFiniteError("fisher_information: workspace not finite");
  const Eigen::Index n = spec.n(), q = spec.n_coef(), d = spec.n_free();
  const double a = th.alpha, L = th.looks;
  const FimConstants c = fim_constants(a, L);

  const Eigen::MatrixXd& X = spec.design();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d, d);
  // K_bb = -alpha X'WX
  K.topLeftCorner(q, q) = (-a) * (X.transpose() * ws.w_diag.asDiagonal() * X);
  // u = X'E mu^*  (entries e_k/mu_k x_k)
  Eigen::VectorXd u = Eigen::VectorXd::Zero(q);
  for (Eigen::Index k = 0; k < n; ++k)
    u += (ws.e_diag(k) / ws.mu(k)) * X.row(k).transpose();
  K.block(0, q, q, 1) = -c.c2 * u;
  K.block(q, 0, 1, q) = (-c.c2 * u).transpose();
  K(q, q) = -static_cast<double>(n) * c.c3;
  if (!spec.looks_fixed()) {
    K.block(0, q + 1, q, 1) = -c.c5 * u;
    K.block(q + 1, 0, 1, q) = (-c.c5 * u).transpose();
    K(q, q + 1) = K(q + 1, q) = -static_cast<double>(n) * c.c6;
    K(q + 1, q + 1) = -static_cast<double>(n) * c.c4x;
  }
  return K;
}

Eigen::MatrixXd fisher_information_inverse(const RegressionSpec& spec, const Theta& th) {
  const Workspace ws = make_workspace(spec, th);
  if (!ws.finite)
    throw NonFiniteError("fisher_information_inverse: workspace not finite");
  const Eigen::Index n = spec.n(), q = spec.n_coef(), d = spec.n_free();
  const double a = th.alpha, L = th.looks;
  const FimConstants c = fim_constants(a, L);
  const Eigen::MatrixXd& X = spec.design();

  const Eigen::MatrixXd kbb = (-a) * (X.transpose() * ws.w_diag.asDiagonal() * X);
  Eigen::LLT<Eigen::MatrixXd> llt(kbb);
  if (llt.info() != Eigen::Success)
    throw SingularInformation("fisher_information_inverse: X'WX not positive definite");

  Eigen::VectorXd u = Eigen::VectorXd::Zero(q);
  for (Eigen::Index k = 0; k < n; ++k)
    u += (ws.e_diag(k) / ws.mu(k)) * X.row(k).transpose();

  // (beta, alpha) block by the rank-one Schur identities:
  //   vartheta = K_aa - K_ba' K_bb^{-1} K_ba,  zeta = K_bb^{-1} K_ba
  const Eigen::VectorXd kba = -c.c2 * u;
  const Eigen::VectorXd zeta = llt.solve(kba);
  const double kaa = -static_cast<double>(n) * c.c3;
  const double vartheta = kaa - kba.dot(zeta);
  if (!(vartheta > 0.0))
    throw DegenerateTheta("fisher_information_inverse: alpha Schur complement <= 0");

  const Eigen::MatrixXd kbb_inv = llt.solve(Eigen::MatrixXd::Identity(q, q));
  Eigen::MatrixXd ainv(q + 1, q + 1);
  ainv.topLeftCorner(q, q) = kbb_inv + zeta * zeta.transpose() / vartheta;
  ainv.block(0, q, q, 1) = -zeta / vartheta;
  ainv.block(q, 0, 1, q) = (-zeta / vartheta).transpose();
  ainv(q, q) = 1.0 / vartheta;

  if (spec.looks_fixed()) return ainv;

  // scalar Schur complement for the L row; m carries the exact (nonzero)
  // beta-L and alpha-L couplings
  Eigen::VectorXd m(q + 1);
  m.head(q) = -c.c5 * u;
  m(q) = -static_cast<double>(n) * c.c6;
  const double kll = -static_cast<double>(n) * c.c4x;
  const Eigen::VectorXd am = ainv * m;
  const double phi = kll - m.dot(am);
  if (!(phi > 0.0))
    throw DegenerateTheta("fisher_information_inverse: L Schur complement <= 0");

  Eigen::MatrixXd out(d, d);
  out.topLeftCorner(q + 1, q + 1) = ainv + am * am.transpose() / phi;
  out.block(0, q + 1, q + 1, 1) = -am / phi;
  out.block(q + 1, 0, 1, q + 1) = (-am / phi).transpose();
  out(q + 1, q + 1) = 1.0 / phi;
  return out;
}

Eigen::MatrixXd observed_information(const RegressionSpec& spec, const Theta& th) {
  const Workspace ws = make_workspace(spec, th);
  if (!ws.finite) throw NonFiniteError("observed_information: workspace not finite");
  const Eigen::Index n = spec.n(), q = spec.n_coef(), d = spec.n_free();
  const double a = th.alpha, L = th.looks;
  const double c1 = (L - a) * (-a - 1.0);
  const double u1p = polygamma(1, L - a) - polygamma(1, -a) + 1.0 / (-a - 1.0) -
                     1.0 / ((-a - 1.0) * (-a - 1.0));
  const double psi1_la = polygamma(1, L - a);
  const Eigen::MatrixXd& X = spec.design();

  Eigen::MatrixXd obs = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd bb_w(n), ba_w(n), bl_w(n);
  double r_sum = 0.0, p_sum = 0.0, s_sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mu = ws.mu(k), t = ws.t(k), z = spec.response()(k);
    const double gp = link_deriv(spec.link(), mu);
    const double gpp = link_deriv2(spec.link(), mu);
    const double v = -a / mu - c1 / t;                      // d l / d mu
    const double lmm = a / (mu * mu) + c1 * (-a - 1.0) / (t * t);  // d2 l / d mu2
    // chain through eta: d2l/deta2 = lmm/g'^2 - v g''/g'^3
    bb_w(k) = -(lmm / (gp * gp) - v * gpp / (gp * gp * gp));
    ba_w(k) = (1.0 / mu + (2.0 * a - L + 1.0) / t + mu * c1 / (t * t)) * ws.e_diag(k);
    bl_w(k) = ((-a - 1.0) / t) * (1.0 + (a - L) * z / t) * ws.e_diag(k);
    r_sum += -u1p + (mu / t) * (2.0 + (a - L) * mu / t);
    p_sum += psi1_la - (z + mu) / t - (a - L) * mu * z / (t * t);
    s_sum += -psi1_la + polygamma(1, L) - 1.0 / L + (z / t) * (2.0 + (a - L) * z / t);
  }
  obs.topLeftCorner(q, q) = X.transpose() * bb_w.asDiagonal() * X;
  const Eigen::VectorXd ba = X.transpose() * ba_w;
  obs.block(0, q, q, 1) = ba;
  obs.block(q, 0, 1, q) = ba.transpose();
  obs(q, q) = r_sum;
  if (!spec.looks_fixed()) {
    const Eigen::VectorXd bl = X.transpose() * bl_w;
    obs.block(0, q + 1, q, 1) = bl;
    obs.block(q + 1, 0, 1, q) = bl.transpose();
    obs(q, q + 1) = obs(q + 1, q) = p_sum;
    obs(q + 1, q + 1) = s_sum;
  }
  if (!obs.allFinite()) throw NonFiniteError("observed_information: non-finite entries");
  return obs;
}

}  // namespace g0reg
