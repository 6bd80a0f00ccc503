#include "g0reg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "g0reg/distribution.hpp"
#include "g0reg/errors.hpp"
#include "g0reg/rng.hpp"
#include "g0reg/special.hpp"
#include "g0reg/stats.hpp"

namespace g0reg {

namespace {

void require_converged(const FitResult& fr, const char* who) {
  if (!fr.converged) throw NonFiniteError(std::string(who) + ": fit did not converge");
  if (fr.family != FitFamily::G0)
    throw DomainError(std::string(who) + ": diagnostics are defined for the G0 fit");
}

Eigen::VectorXd fitted_means(const RegressionSpec& spec, const FitResult& fr) {
  const Eigen::VectorXd eta = spec.design() * fr.theta.beta;
  Eigen::VectorXd mu(spec.n());
  for (Eigen::Index k = 0; k < spec.n(); ++k) mu(k) = link_inv(spec.link(), eta(k));
  return mu;
}

}  // namespace

Eigen::VectorXd standardized_residuals(const RegressionSpec& spec, const FitResult& fr) {
  require_converged(fr, "standardized_residuals");
  const double a = fr.theta.alpha, L = fr.theta.looks;
  if (!(a < -2.0))
    throw VarianceUndefined("standardized_residuals: alpha-hat = " + std::to_string(a) +
                            " >= -2, Var(Z) diverges");
  const Eigen::VectorXd mu = fitted_means(spec, fr);
  const double vfac = ((a + 1.0) / (a + 2.0)) * (L + 1.0) / L - 1.0;
  Eigen::VectorXd r(spec.n());
  for (Eigen::Index k = 0; k < spec.n(); ++k)
    r(k) = (spec.response()(k) - mu(k)) / (mu(k) * std::sqrt(vfac));
  return r;
}

namespace {

// l_k as a function of mu only, dropping terms constant in mu
double lk_mu_part(double z, double mu, double a, double L) {
  const double t = mu * (-a - 1.0) + L * z;
  return -a * std::log(mu) + (a - L) * std::log(t);
}

}  // namespace

double saturated_loglik(const RegressionSpec& spec, const FitResult& fr) {
  require_converged(fr, "saturated_loglik");
  const double a = fr.theta.alpha, L = fr.theta.looks;
  const double per_obs = L * std::log(L) + special::log_gamma(L - a) -
                         a * std::log(-a - 1.0) - special::log_gamma(-a) -
                         special::log_gamma(L);
  double s = spec.n() * per_obs;
  for (Eigen::Index k = 0; k < spec.n(); ++k) {
    const double z = spec.response()(k);
    const double mu_sat = z * (-a) / (-a - 1.0);  // per-obs maximizer of l_k
    s += (L - 1.0) * std::log(z) + lk_mu_part(z, mu_sat, a, L);
  }
  return s;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> deviance_residuals(const RegressionSpec& spec,
                                                               const FitResult& fr) {
  require_converged(fr, "deviance_residuals");
  const double a = fr.theta.alpha, L = fr.theta.looks;
  const Eigen::VectorXd mu = fitted_means(spec, fr);
  const Eigen::Index n = spec.n();

  Eigen::VectorXd raw(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double z = spec.response()(k);
    const double mu_sat = z * (-a) / (-a - 1.0);
    const double gap = lk_mu_part(z, mu_sat, a, L) - lk_mu_part(z, mu(k), a, L);
    const double d = std::sqrt(2.0 * std::max(0.0, gap));
    const double diff = z - mu(k);
    raw(k) = (diff > 0.0) ? d : (diff < 0.0 ? -d : 0.0);
  }

  const Eigen::VectorXd h = leverage(spec, fr);
  for (Eigen::Index k = 0; k < n; ++k)
    if (h(k) >= 1.0 - 1e-12)
      throw LeverageAtOne("deviance_residuals: h_" + std::to_string(k) + " ~ 1");
  const double s_scale =
      raw.squaredNorm() / static_cast<double>(n - spec.n_coef());
  Eigen::VectorXd std_dev(n);
  for (Eigen::Index k = 0; k < n; ++k)
    std_dev(k) = raw(k) / (s_scale * std::sqrt(1.0 - h(k)));
  return {raw, std_dev};
}

EnvelopeBands simulated_envelope(const RegressionSpec& spec, const FitResult& fr, int nu,
                                 std::uint64_t seed, const FitOptions& refit_opts) {
  require_converged(fr, "simulated_envelope");
  if (nu < 1) throw DomainError("simulated_envelope: nu must be >= 1");
  const Eigen::Index n = spec.n();
  const double a = fr.theta.alpha, L = fr.theta.looks;
  const Eigen::VectorXd mu = fitted_means(spec, fr);

  EnvelopeBands bands;
  bands.requested = nu;
  auto sorted_abs_sr = [](const RegressionSpec& s, const FitResult& f) {
    std::vector<double> v;
    const Eigen::VectorXd sr = deviance_residuals(s, f).second;
    v.resize(sr.size());
    for (Eigen::Index k = 0; k < sr.size(); ++k) v[k] = std::fabs(sr(k));
    std::sort(v.begin(), v.end());
    return v;
  };
  bands.observed = sorted_abs_sr(spec, fr);

  std::vector<std::vector<double>> sims;
  sims.reserve(nu);
  for (int rep = 0; rep < nu; ++rep) {
    Rng rng(split_seed(seed, rep));
    Eigen::VectorXd zsim(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const G0Params p(a, mu(k) * (-a - 1.0), L);
      zsim(k) = sample_one(p, rng);
    }
    try {
      RegressionSpec sim_spec(spec.design(), zsim, spec.link(),
                              spec.looks_fixed() ? std::optional<double>(spec.fixed_looks())
                                                 : std::nullopt);
      FitOptions ro = refit_opts;
      ro.compute_cov = false;
      const FitResult sim_fit = fit_mle(sim_spec, ro);
      if (!sim_fit.converged) {
        ++bands.dropped;
        continue;
      }
      sims.push_back(sorted_abs_sr(sim_spec, sim_fit));
    } catch (const std::exception&) {
      ++bands.dropped;
    }
  }
  if (sims.empty()) throw DegenerateSample("simulated_envelope: every replicate failed");

  bands.lower.resize(n);
  bands.median.resize(n);
  bands.upper.resize(n);
  std::vector<double> col(sims.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < sims.size(); ++i) col[i] = sims[i][k];
    std::sort(col.begin(), col.end());
    bands.lower[k] = col.front();
    bands.upper[k] = col.back();
    const std::size_t m = col.size();
    bands.median[k] = (m % 2 == 1) ? col[m / 2] : 0.5 * (col[m / 2 - 1] + col[m / 2]);
  }
  return bands;
}

Eigen::VectorXd leverage(const RegressionSpec& spec, const FitResult& fr) {
  require_converged(fr, "leverage");
  const Workspace ws = make_workspace(spec, fr.theta);
  const Eigen::MatrixXd& X = spec.design();
  const Eigen::MatrixXd wxx = X.transpose() * ws.w_diag.asDiagonal() * X;
  Eigen::LLT<Eigen::MatrixXd> llt(wxx);
  if (llt.info() != Eigen::Success)
    throw SingularInformation("leverage: X'WX not positive definite");
  Eigen::VectorXd h(spec.n());
  for (Eigen::Index k = 0; k < spec.n(); ++k) {
    const Eigen::VectorXd xk = X.row(k).transpose();
    h(k) = ws.w_diag(k) * xk.dot(llt.solve(xk));
  }
  return h;
}

Eigen::VectorXd gl_expected_diag(const RegressionSpec& spec, const FitResult& fr) {
  // identical to the hat diagonal once the E/W weight transform cancels
  return leverage(spec, fr);
}

Eigen::MatrixXd generalized_leverage(const RegressionSpec& spec, const FitResult& fr,
                                     GlMode mode) {
  require_converged(fr, "generalized_leverage");
  const Workspace ws = make_workspace(spec, fr.theta);
  const Eigen::Index n = spec.n(), q = spec.n_coef();
  const double a = fr.theta.alpha, L = fr.theta.looks;
  const double c1 = (L - a) * (-a - 1.0);
  const Eigen::MatrixXd& X = spec.design();

  // d2 l / d beta d z' has columns (L c1 / T_k^2) e_k x_k
  Eigen::VectorXd dtz(n);
  for (Eigen::Index k = 0; k < n; ++k)
    dtz(k) = L * c1 / (ws.t(k) * ws.t(k)) * ws.e_diag(k);

  const Eigen::MatrixXd obs = observed_information(spec, fr.theta);

  if (mode == GlMode::BetaOnly) {
    const Eigen::MatrixXd bb = obs.topLeftCorner(q, q);  // alpha X'QX
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(bb);
    // GL(beta) = EX (alpha X'QX)^{-1} X'E D_T
    Eigen::MatrixXd rhs(q, n);
    for (Eigen::Index k = 0; k < n; ++k) rhs.col(k) = dtz(k) * X.row(k).transpose();
    const Eigen::MatrixXd mid = lu.solve(rhs);
    Eigen::MatrixXd gl(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      gl.row(i) = ws.e_diag(i) * (X.row(i) * mid);
    return gl;
  }

  // Full: D_theta [obs]^{-1} D_theta-z with D_theta = [EX 0 0]
  const Eigen::Index d = obs.rows();
  Eigen::MatrixXd dthz(d, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double z = spec.response()(k), t = ws.t(k), mu = ws.mu(k);
    dthz.col(k).head(q) = dtz(k) * X.row(k).transpose();
    dthz(q, k) = L * (t + (a - L) * mu) / (t * t);  // d2 l / d alpha d z_k
    if (d > q + 1)
      dthz(q + 1, k) = 1.0 / z - L / t + (1.0 - L * z / t) * (a - L) / t;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(obs);
  const Eigen::MatrixXd mid = lu.solve(dthz).topRows(q);
  Eigen::MatrixXd gl(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    gl.row(i) = ws.e_diag(i) * (X.row(i) * mid);
  return gl;
}

double cook_flag_threshold(Eigen::Index n, Eigen::Index n_coef) {
  return 8.0 / (static_cast<double>(n) - 2.0 * n_coef);
}
double leverage_flag_threshold(Eigen::Index n, Eigen::Index n_coef) {
  return 3.0 * static_cast<double>(n_coef) / static_cast<double>(n);
}
double dffits_flag_threshold(Eigen::Index n, Eigen::Index n_coef) {
  return 2.0 * std::sqrt(static_cast<double>(n_coef) /
                         (static_cast<double>(n) - n_coef));
}

Eigen::VectorXd cook_distance(const RegressionSpec& spec, const FitResult& fr) {
  const Eigen::VectorXd r = standardized_residuals(spec, fr);  // VarianceUndefined may throw
  const Eigen::VectorXd h = leverage(spec, fr);
  Eigen::VectorXd d(spec.n());
  const double p = static_cast<double>(spec.n_coef());
  for (Eigen::Index k = 0; k < spec.n(); ++k) {
    const double om = 1.0 - h(k);
    d(k) = h(k) * r(k) * r(k) / (p * om * om);
  }
  return d;
}

Eigen::VectorXd dffits(const RegressionSpec& spec, const FitResult& fr) {
  const Eigen::VectorXd r = standardized_residuals(spec, fr);
  const Eigen::VectorXd h = leverage(spec, fr);
  Eigen::VectorXd d(spec.n());
  for (Eigen::Index k = 0; k < spec.n(); ++k)
    d(k) = r(k) * std::sqrt(h(k) / (1.0 - h(k))) / (1.0 - h(k));
  return d;
}

std::pair<double, double> fit_metrics(const RegressionSpec& spec, const FitResult& fr) {
  // defined for any family: the fitted means come from beta through the link
  if (!fr.converged) throw NonFiniteError("fit_metrics: fit did not converge");
  const Eigen::VectorXd mu = fitted_means(spec, fr);
  double mab = 0.0, rmse = 0.0;
  for (Eigen::Index k = 0; k < spec.n(); ++k) {
    const double e = spec.response()(k) - mu(k);
    mab += std::fabs(e);
    rmse += e * e;
  }
  const double n = static_cast<double>(spec.n());
  return {mab / n, std::sqrt(rmse / n)};
}

std::pair<double, double> cvm_adequacy(const std::vector<double>& ratios, double alpha0,
                                       double looks) {
  if (!(alpha0 < -1.0))
    throw DomainError("cvm_adequacy: alpha0 must be < -1, got " + std::to_string(alpha0));
  if (!(looks > 0.0)) throw DomainError("cvm_adequacy: looks must be > 0");
  if (ratios.size() < 2) throw DegenerateSample("cvm_adequacy: need at least 2 ratios");
  std::vector<double> s = ratios;
  std::sort(s.begin(), s.end());
  if (!(s.front() > 0.0)) throw DomainError("cvm_adequacy: ratios must be positive");
  if (s.back() - s.front() < 1e-12 * std::max(1.0, s.back()))
    throw DegenerateSample("cvm_adequacy: ratio sample has no variation");
  const G0Params p(alpha0, -alpha0 - 1.0, looks);
  std::vector<double> u(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) u[k] = cdf(p, s[k]);
  const auto out = stats::cvm_from_pit(u);
  return {out.statistic, out.p_value};
}

double mmse_alpha0(const std::vector<double>& ratios, double looks) {
  if (ratios.size() < 2) throw DegenerateSample("mmse_alpha0: need at least 2 ratios");
  std::vector<double> s = ratios;
  std::sort(s.begin(), s.end());
  if (!(s.front() > 0.0)) throw DomainError("mmse_alpha0: ratios must be positive");
  if (s.back() - s.front() < 1e-12 * std::max(1.0, s.back()))
    throw DegenerateSample("mmse_alpha0: ratio sample has no variation");
  const std::size_t n = s.size();
  auto mse = [&](double alpha) {
    const G0Params p(alpha, -alpha - 1.0, looks);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = cdf(p, s[k]) - (2.0 * (k + 1.0) - 1.0) / (2.0 * n);
      acc += d * d;
    }
    return acc / static_cast<double>(n);
  };
  // coarse scan in the reparameterized coordinate, then golden-section
  double best_t = std::log(0.5), best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 80; ++i) {
    const double t = -7.0 + 11.0 * i / 80.0;  // alpha = -1 - e^t in (-60.?, -1.001)
    const double v = mse(-1.0 - std::exp(t));
    if (v < best_v) {
      best_v = v;
      best_t = t;
    }
  }
  double lo = best_t - 0.2, hi = best_t + 0.2;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = mse(-1.0 - std::exp(x1)), f2 = mse(-1.0 - std::exp(x2));
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = mse(-1.0 - std::exp(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = mse(-1.0 - std::exp(x2));
    }
  }
  return -1.0 - std::exp(0.5 * (lo + hi));
}

DiagnosticsReport diagnose(const RegressionSpec& spec, const FitResult& fr, int nu,
                           std::uint64_t seed) {
  require_converged(fr, "diagnose");
  DiagnosticsReport rep;
  rep.mu_hat = fitted_means(spec, fr);
  rep.variance_defined = fr.theta.alpha < -2.0;
  auto [raw, std_dev] = deviance_residuals(spec, fr);
  rep.dev_resid = raw;
  rep.std_dev_resid = std_dev;
  rep.leverage = leverage(spec, fr);
  rep.gl_diag = generalized_leverage(spec, fr, GlMode::BetaOnly).diagonal();
  if (rep.variance_defined) {
    rep.std_resid = standardized_residuals(spec, fr);
    rep.cook = cook_distance(spec, fr);
    rep.dffits = dffits(spec, fr);
  }
  if (nu > 0) rep.envelope = simulated_envelope(spec, fr, nu, seed);
  std::tie(rep.mab, rep.rmse) = fit_metrics(spec, fr);

  const Eigen::Index n = spec.n(), p = spec.n_coef();
  rep.cook_threshold = cook_flag_threshold(n, p);
  rep.leverage_threshold = leverage_flag_threshold(n, p);
  rep.dffits_threshold = dffits_flag_threshold(n, p);
  rep.flags.assign(n, {});
  for (Eigen::Index k = 0; k < n; ++k) {
    if (rep.variance_defined && rep.cook(k) > rep.cook_threshold)
      rep.flags[k].push_back("cook");
    if (rep.leverage(k) > rep.leverage_threshold) rep.flags[k].push_back("leverage");
    if (rep.variance_defined && std::fabs(rep.dffits(k)) > rep.dffits_threshold)
      rep.flags[k].push_back("dffits");
  }
  return rep;
}

}  // namespace g0reg
