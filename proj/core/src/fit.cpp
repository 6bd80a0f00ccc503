#include "g0reg/fit.hpp"

#include <cmath>
#include <limits>

#include "g0reg/errors.hpp"
#include "g0reg/special.hpp"
#include "g0reg/stats.hpp"
#include "optim_internal.hpp"

namespace g0reg {

using special::digamma;
using special::log_gamma;
using special::polygamma;

const char* optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::CG: return "cg";
    case OptimizerKind::BFGS: return "bfgs";
    case OptimizerKind::NelderMead: return "neldermead";
  }
  return "?";
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Internal standardization of the covariate columns; narrow-range predictors
// otherwise leave the intercept/slope directions nearly collinear and stall
// the first-order optimizers. The mapping is exact and invisible outside.
struct Standardizer {
  Eigen::VectorXd mean, scale;

  static Standardizer from(const Eigen::MatrixXd& X) {
    Standardizer s;
    const Eigen::Index q = X.cols();
    s.mean = Eigen::VectorXd::Zero(q);
    s.scale = Eigen::VectorXd::Ones(q);
    for (Eigen::Index j = 1; j < q; ++j) {
      s.mean(j) = X.col(j).mean();
      const double sd = std::sqrt(
          (X.col(j).array() - s.mean(j)).square().sum() / std::max<double>(1, X.rows() - 1));
      if (sd > 1e-12) s.scale(j) = sd;
    }
    return s;
  }

  // optimizer coordinates -> natural coefficients
  Eigen::VectorXd to_natural(const Eigen::VectorXd& bt) const {
    Eigen::VectorXd b = bt;
    for (Eigen::Index j = 1; j < bt.size(); ++j) {
      b(j) = bt(j) / scale(j);
      b(0) -= bt(j) * mean(j) / scale(j);
    }
    return b;
  }

  Eigen::VectorXd from_natural(const Eigen::VectorXd& b) const {
    Eigen::VectorXd bt = b;
    for (Eigen::Index j = 1; j < b.size(); ++j) {
      bt(j) = b(j) * scale(j);
      bt(0) += b(j) * mean(j);
    }
    return bt;
  }

  // natural-coefficient gradient -> optimizer-coordinate gradient
  Eigen::VectorXd grad_to_opt(const Eigen::VectorXd& g) const {
    Eigen::VectorXd gt = g;
    for (Eigen::Index j = 1; j < g.size(); ++j) gt(j) = (g(j) - mean(j) * g(0)) / scale(j);
    return gt;
  }

  // optimizer-coordinate gradient -> natural gradient
  Eigen::VectorXd grad_to_natural(const Eigen::VectorXd& gt) const {
    Eigen::VectorXd g = gt;
    for (Eigen::Index j = 1; j < gt.size(); ++j) g(j) = gt(j) * scale(j) + mean(j) * gt(0);
    return g;
  }
};

// free vector <-> (std beta, a = ln(-alpha-1)[, l = ln L])
Eigen::VectorXd pack(const RegressionSpec& spec, const Standardizer& st, const Theta& th) {
  Eigen::VectorXd x(spec.n_free());
  x.head(spec.n_coef()) = st.from_natural(th.beta);
  x(spec.n_coef()) = std::log(-th.alpha - 1.0);
  if (!spec.looks_fixed()) x(spec.n_coef() + 1) = std::log(th.looks);
  return x;
}

Theta unpack(const RegressionSpec& spec, const Standardizer& st, const Eigen::VectorXd& x) {
  Theta th;
  th.beta = st.to_natural(x.head(spec.n_coef()));
  th.alpha = -1.0 - std::exp(x(spec.n_coef()));
  th.looks = spec.looks_fixed() ? spec.fixed_looks() : std::exp(x(spec.n_coef() + 1));
  return th;
}

bool theta_in_domain(const Theta& th) {
  return std::isfinite(th.alpha) && th.alpha < -1.0 && std::isfinite(th.looks) &&
         th.looks > 0.0 && th.beta.allFinite();
}

// chain rule into the unconstrained optimizer coordinates
Eigen::VectorXd transform_grad(const RegressionSpec& spec, const Standardizer& st,
                               const Theta& th, const Eigen::VectorXd& u) {
  Eigen::VectorXd g = u;
  g.head(spec.n_coef()) = st.grad_to_opt(u.head(spec.n_coef()));
  g(spec.n_coef()) *= (th.alpha + 1.0);  // d alpha / d a
  if (!spec.looks_fixed()) g(spec.n_coef() + 1) *= th.looks;
  return g;
}

struct SolveOutcome {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
};

SolveOutcome run_optimizer(const detail::ObjFn& f, const detail::GradFn& g,
                           const Eigen::VectorXd& x0, const FitOptions& opts,
                           const detail::StopFn& stop) {
  detail::MinResult mr;
  switch (opts.optimizer) {
    case OptimizerKind::CG:
      mr = detail::minimize_cg(f, g, x0, opts.max_iter, stop);
      break;
    case OptimizerKind::BFGS:
      mr = detail::minimize_bfgs(f, g, x0, opts.max_iter, stop);
      break;
    case OptimizerKind::NelderMead:
      mr = detail::minimize_nelder_mead(f, x0, opts.max_iter, stop);
      break;
  }
  return {mr.x, mr.iterations, mr.stopped};
}

void fill_criteria(FitResult& fr) {
  const double q = static_cast<double>(fr.n_free);
  const double n = static_cast<double>(fr.n_obs);
  fr.aic = -2.0 * fr.loglik + 2.0 * q;
  fr.bic = -2.0 * fr.loglik + q * std::log(n);
  fr.aicc = fr.aic + 2.0 * q * (q + 1.0) / (n - q - 1.0);
}

}  // namespace

Theta init_theta(const RegressionSpec& spec, bool* used_fallback) {
  const Eigen::Index n = spec.n();
  // OLS on the linked responses
  Eigen::VectorXd gz(n);
  for (Eigen::Index k = 0; k < n; ++k) gz(k) = link_eval(spec.link(), spec.response()(k));
  const Eigen::VectorXd beta0 = spec.design().colPivHouseholderQr().solve(gz);

  const double L0 = spec.looks_fixed() ? spec.fixed_looks() : 1.0;

  // normalize by the OLS-fitted means; the intercept-only score equations in
  // (alpha, gamma) are then well posed
  Eigen::VectorXd w(n);
  const Eigen::VectorXd eta = spec.design() * beta0;
  for (Eigen::Index k = 0; k < n; ++k)
    w(k) = spec.response()(k) / link_inv(spec.link(), eta(k));

  auto alpha_of = [&](double gamma) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) s += 1.0 / (gamma + L0 * w(k));
    return L0 * s / (s - n / gamma);  // always < 0 since T_k > gamma
  };
  auto score_gap = [&](double gamma) {
    const double a = alpha_of(gamma);
    if (!(a < 0.0) || !std::isfinite(a)) return std::numeric_limits<double>::quiet_NaN();
    double mean_log = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) mean_log += std::log1p(L0 * w(k) / gamma);
    mean_log /= static_cast<double>(n);
    return mean_log - (digamma(L0 - a) - digamma(-a));
  };

  bool fallback = true;
  double alpha_init = -3.0;
  // bracket the root of the gamma equation on a log grid
  double lo = 0.0, hi = 0.0, flo = 0.0;
  bool have_lo = false;
  for (int i = 0; i <= 120; ++i) {
    const double gamma = std::pow(10.0, -4.0 + 8.0 * i / 120.0);
    const double v = score_gap(gamma);
    if (!std::isfinite(v)) continue;
    if (have_lo && flo * v < 0.0) {
      hi = gamma;
      double a = lo, b = hi, fa = flo;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = score_gap(mid);
        if (!std::isfinite(fm)) break;
        if (fa * fm <= 0.0)
          b = mid;
        else {
          a = mid;
          fa = fm;
        }
        if ((b - a) < 1e-12 * b) break;
      }
      const double a_hat = alpha_of(0.5 * (a + b));
      if (std::isfinite(a_hat) && a_hat < 0.0) {
        alpha_init = std::clamp(a_hat, -60.0, -1.5);
        fallback = false;
      }
      break;
    }
    lo = gamma;
    flo = v;
    have_lo = true;
  }
  if (used_fallback) *used_fallback = fallback;
  return Theta{beta0, alpha_init, L0};
}

FitResult fit_mle(const RegressionSpec& spec, const FitOptions& opts) {
  FitResult fr;
  fr.family = FitFamily::G0;
  fr.optimizer = opts.optimizer;
  fr.n_obs = spec.n();
  fr.n_free = spec.n_free();

  bool fb = false;
  Theta th0;
  if (opts.start && opts.start->beta.size() == spec.n_coef() && opts.start->alpha < -1.0 &&
      opts.start->looks > 0.0) {
    th0 = *opts.start;
    if (spec.looks_fixed()) th0.looks = spec.fixed_looks();
  } else {
    th0 = init_theta(spec, &fb);
  }
  fr.init_fallback = fb;

  const Standardizer st = Standardizer::from(spec.design());
  const detail::ObjFn f = [&](const Eigen::VectorXd& x) {
    const Theta th = unpack(spec, st, x);
    if (!theta_in_domain(th)) return -kNegInf;
    return -loglik_or_neg_inf(spec, th);
  };
  const detail::GradFn g = [&](const Eigen::VectorXd& x) {
    const Theta th = unpack(spec, st, x);
    return Eigen::VectorXd(-transform_grad(spec, st, th, score(spec, th)));
  };
  double last_sup = std::numeric_limits<double>::quiet_NaN();
  const detail::StopFn stop = [&](const Eigen::VectorXd& x, double fx,
                                  const Eigen::VectorXd& gx) {
    const Theta th = unpack(spec, st, x);
    if (!theta_in_domain(th) || !std::isfinite(fx)) return false;
    Eigen::VectorXd u;
    if (gx.size() == x.size()) {
      u = -gx;
      u.head(spec.n_coef()) = st.grad_to_natural(u.head(spec.n_coef()));
      u(spec.n_coef()) /= (th.alpha + 1.0);
      if (!spec.looks_fixed()) u(spec.n_coef() + 1) /= th.looks;
    } else {
      u = score(spec, th);
    }
    last_sup = u.template lpNorm<Eigen::Infinity>();
    return last_sup < opts.grad_tol * std::max(1.0, std::fabs(fx));
  };

  const SolveOutcome so = run_optimizer(f, g, pack(spec, st, th0), opts, stop);
  fr.theta = unpack(spec, st, so.x);
  fr.iterations = so.iterations;
  fr.loglik = -f(so.x);
  fr.converged = so.converged && std::isfinite(fr.loglik);
  fr.grad_norm = std::isfinite(last_sup)
                     ? last_sup
                     : (std::isfinite(fr.loglik)
                            ? score(spec, fr.theta).template lpNorm<Eigen::Infinity>()
                            : std::numeric_limits<double>::quiet_NaN());

  const Eigen::Index q = spec.n_coef();
  fr.names.clear();
  for (Eigen::Index j = 0; j < q; ++j) fr.names.push_back("beta" + std::to_string(j));
  fr.names.push_back("alpha");
  if (!spec.looks_fixed()) fr.names.push_back("looks");
  fr.estimates.resize(fr.n_free);
  fr.estimates.head(q) = fr.theta.beta;
  fr.estimates(q) = fr.theta.alpha;
  if (!spec.looks_fixed()) fr.estimates(q + 1) = fr.theta.looks;

  if (std::isfinite(fr.loglik)) fill_criteria(fr);
  if (!spec.looks_fixed() && fr.theta.looks > 50.0)
    fr.warning = "fitted looks > 50: near-Gaussian speckle, the L block is weakly identified";

  if (fr.converged && opts.compute_cov)
    fr.cov = fisher_information_inverse(spec, fr.theta);
  return fr;
}

std::vector<std::pair<double, double>> confidence_intervals(const FitResult& fr, double eps) {
  if (!(eps > 0.0 && eps < 1.0))
    throw DomainError("confidence_intervals: eps must be in (0,1)");
  if (fr.cov.rows() != fr.estimates.size())
    throw DomainError("confidence_intervals: fit has no covariance (not converged?)");
  const double zq = stats::norm_quantile(1.0 - eps / 2.0);
  std::vector<std::pair<double, double>> out;
  out.reserve(fr.estimates.size());
  for (Eigen::Index i = 0; i < fr.estimates.size(); ++i) {
    const double half = zq * std::sqrt(std::max(0.0, fr.cov(i, i)));
    out.emplace_back(fr.estimates(i) - half, fr.estimates(i) + half);
  }
  return out;
}

std::vector<WaldRow> wald_table(const FitResult& fr) {
  if (fr.cov.rows() != fr.estimates.size())
    throw DomainError("wald_table: fit has no covariance (not converged?)");
  std::vector<WaldRow> rows;
  rows.reserve(fr.estimates.size());
  for (Eigen::Index i = 0; i < fr.estimates.size(); ++i) {
    WaldRow r;
    r.name = fr.names[i];
    r.estimate = fr.estimates(i);
    r.std_error = std::sqrt(std::max(0.0, fr.cov(i, i)));
    r.t_stat = r.std_error > 0.0 ? r.estimate / r.std_error : 0.0;
    r.p_value = r.estimate == 0.0 ? 1.0 : stats::norm_two_sided_p(r.t_stat);
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

// gamma-family log-likelihood with the spec's link; shape k (exponential
// pins k = 1)
struct GammaObjective {
  const RegressionSpec& spec;
  bool fit_shape;

  double loglik(const Eigen::VectorXd& beta, double k) const {
    const Eigen::Index n = spec.n();
    const Eigen::VectorXd eta = spec.design() * beta;
    double s = n * (k * std::log(k) - log_gamma(k));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::fabs(eta(i)) > 690.0) return kNegInf;
      const double mu = link_inv(spec.link(), eta(i));
      if (!(mu > 0.0) || !std::isfinite(mu)) return kNegInf;
      const double z = spec.response()(i);
      s += (k - 1.0) * std::log(z) - k * std::log(mu) - k * z / mu;
    }
    return std::isfinite(s) ? s : kNegInf;
  }

  Eigen::VectorXd natural_score(const Eigen::VectorXd& beta, double k) const {
    const Eigen::Index n = spec.n(), q = spec.n_coef();
    const Eigen::VectorXd eta = spec.design() * beta;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(q + (fit_shape ? 1 : 0));
    double uk = fit_shape ? n * (std::log(k) + 1.0 - digamma(k)) : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = link_inv(spec.link(), eta(i));
      const double z = spec.response()(i);
      const double dmu = k * (z / (mu * mu) - 1.0 / mu);
      u.head(q) += dmu / link_deriv(spec.link(), mu) * spec.design().row(i).transpose();
      if (fit_shape) uk += std::log(z) - std::log(mu) - z / mu;
    }
    if (fit_shape) u(q) = uk;
    return u;
  }
};

}  // namespace

FitResult fit_baseline(const RegressionSpec& spec, BaselineFamily family,
                       const FitOptions& opts) {
  const bool gamma = (family == BaselineFamily::Gamma);
  const Eigen::Index n = spec.n(), q = spec.n_coef();
  GammaObjective obj{spec, gamma};

  FitResult fr;
  fr.family = gamma ? FitFamily::Gamma : FitFamily::Exponential;
  fr.optimizer = opts.optimizer;
  fr.n_obs = n;
  fr.n_free = q + (gamma ? 1 : 0);

  // OLS start; moment start for the shape from the fitted relative residuals
  Eigen::VectorXd gz(n);
  for (Eigen::Index i = 0; i < n; ++i) gz(i) = link_eval(spec.link(), spec.response()(i));
  Eigen::VectorXd beta0 = spec.design().colPivHouseholderQr().solve(gz);
  double k0 = 1.0;
  if (gamma) {
    const Eigen::VectorXd eta = spec.design() * beta0;
    double m1 = 0.0, m2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = spec.response()(i) / link_inv(spec.link(), eta(i));
      m1 += r;
      m2 += r * r;
    }
    m1 /= n;
    m2 /= n;
    const double var = std::max(1e-8, m2 - m1 * m1);
    k0 = std::clamp(m1 * m1 / var, 0.05, 1e4);
  }

  const Standardizer st = Standardizer::from(spec.design());
  auto unpack_b = [&](const Eigen::VectorXd& x) {
    return std::pair<Eigen::VectorXd, double>(st.to_natural(x.head(q)),
                                              gamma ? std::exp(x(q)) : 1.0);
  };
  const detail::ObjFn f = [&](const Eigen::VectorXd& x) {
    auto [b, k] = unpack_b(x);
    if (!std::isfinite(k) || !(k > 0.0)) return -kNegInf;
    return -obj.loglik(b, k);
  };
  const detail::GradFn g = [&](const Eigen::VectorXd& x) {
    auto [b, k] = unpack_b(x);
    Eigen::VectorXd u = obj.natural_score(b, k);
    u.head(q) = st.grad_to_opt(u.head(q));
    if (gamma) u(q) *= k;
    return Eigen::VectorXd(-u);
  };
  double last_sup = std::numeric_limits<double>::quiet_NaN();
  const detail::StopFn stop = [&](const Eigen::VectorXd& x, double fx,
                                  const Eigen::VectorXd&) {
    auto [b, k] = unpack_b(x);
    if (!std::isfinite(fx) || !(k > 0.0)) return false;
    last_sup = obj.natural_score(b, k).template lpNorm<Eigen::Infinity>();
    return last_sup < opts.grad_tol * std::max(1.0, std::fabs(fx));
  };

  Eigen::VectorXd x0(fr.n_free);
  x0.head(q) = st.from_natural(beta0);
  if (gamma) x0(q) = std::log(k0);
  const SolveOutcome so = run_optimizer(f, g, x0, opts, stop);

  auto [bhat, khat] = unpack_b(so.x);
  fr.theta.beta = bhat;
  fr.theta.alpha = kNegInf;  // gamma family is the |alpha| -> inf limit
  fr.theta.looks = khat;
  fr.iterations = so.iterations;
  fr.loglik = obj.loglik(bhat, khat);
  fr.converged = so.converged && std::isfinite(fr.loglik);
  fr.grad_norm = std::isfinite(last_sup) ? last_sup : 0.0;

  fr.names.clear();
  for (Eigen::Index j = 0; j < q; ++j) fr.names.push_back("beta" + std::to_string(j));
  if (gamma) fr.names.push_back("shape");
  fr.estimates.resize(fr.n_free);
  fr.estimates.head(q) = bhat;
  if (gamma) fr.estimates(q) = khat;
  if (std::isfinite(fr.loglik)) fill_criteria(fr);

  if (fr.converged && opts.compute_cov) {
    // expected information: K_bb = k X'W X with w = 1/(mu g')^2; the shape is
    // orthogonal to beta in the gamma family
    const Eigen::VectorXd eta = spec.design() * bhat;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = link_inv(spec.link(), eta(i));
      const double gp = link_deriv(spec.link(), mu);
      w(i) = 1.0 / (mu * mu * gp * gp);
    }
    const Eigen::MatrixXd kbb =
        khat * (spec.design().transpose() * w.asDiagonal() * spec.design());
    Eigen::LLT<Eigen::MatrixXd> llt(kbb);
    if (llt.info() != Eigen::Success)
      throw SingularInformation("fit_baseline: information not positive definite");
    fr.cov = Eigen::MatrixXd::Zero(fr.n_free, fr.n_free);
    fr.cov.topLeftCorner(q, q) = llt.solve(Eigen::MatrixXd::Identity(q, q));
    if (gamma) {
      const double kkk = n * (polygamma(1, khat) - 1.0 / khat);
      if (!(kkk > 0.0)) throw DegenerateTheta("fit_baseline: shape information <= 0");
      fr.cov(q, q) = 1.0 / kkk;
    }
  }
  return fr;
}

}  // namespace g0reg
