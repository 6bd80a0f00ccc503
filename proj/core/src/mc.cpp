#include "g0reg/mc.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "g0reg/distribution.hpp"
#include "g0reg/errors.hpp"
#include "g0reg/rng.hpp"

namespace g0reg {

namespace {

struct Cell {
  double alpha;
  double looks;
  int n;
  std::vector<double> beta;
  std::size_t index;
};

std::vector<Cell> expand_grid(const McConfig& cfg) {
  std::vector<Cell> cells;
  std::size_t idx = 0;
  for (double a : cfg.alphas)
    for (double L : cfg.looks_grid)
      for (int n : cfg.sample_sizes)
        for (const auto& b : cfg.betas) cells.push_back({a, L, n, b, idx++});
  return cells;
}

struct RepOutcome {
  bool converged = false;
  Eigen::VectorXd estimates;  // free layout
  double aic = 0, aicc = 0, bic = 0;
};

RepOutcome run_replication(const McConfig& cfg, const Cell& cell, int rep) {
  const int p = static_cast<int>(cell.beta.size()) - 1;
  const int n = cell.n;
  Rng rng(split_seed(cfg.seed, cell.index * 1000003ULL + static_cast<std::uint64_t>(rep)));

  const G0Params cov_law(cell.alpha, -cell.alpha - 1.0, cell.looks);
  Eigen::MatrixXd X(n, p + 1);
  Eigen::VectorXd z(n);
  for (int k = 0; k < n; ++k) {
    X(k, 0) = 1.0;
    double eta = cell.beta[0];
    for (int j = 1; j <= p; ++j) {
      const double xv = sample_one(cov_law, rng);
      X(k, j) = xv;
      eta += cell.beta[j] * xv;
    }
    const double mu = std::exp(eta);
    const G0Params law(cell.alpha, mu * (-cell.alpha - 1.0), cell.looks);
    z(k) = sample_one(law, rng);
  }

  RepOutcome out;
  try {
    RegressionSpec spec(std::move(X), std::move(z), Link::Log,
                        cfg.fix_looks ? std::optional<double>(cell.looks) : std::nullopt);
    FitOptions opts;
    opts.optimizer = cfg.optimizer;
    opts.max_iter = cfg.max_iter;
    opts.compute_cov = false;
    const FitResult fr = fit_mle(spec, opts);
    out.converged = fr.converged;
    if (fr.converged) {
      out.estimates = fr.estimates;
      out.aic = fr.aic / n;  // per-observation criteria; raw BIC grows with n
      out.aicc = fr.aicc / n;
      out.bic = fr.bic / n;
    }
  } catch (const std::exception&) {
    out.converged = false;
  }
  return out;
}

}  // namespace

McSummary run_study(const McConfig& cfg) {
  if (cfg.replications < 1) throw DomainError("run_study: replications must be >= 1");
  for (const auto& b : cfg.betas)
    if (b.empty()) throw DomainError("run_study: beta vectors must be nonempty");
  for (double a : cfg.alphas)
    if (!(a < -1.0)) throw DomainError("run_study: alpha grid values must be < -1");
  for (double L : cfg.looks_grid)
    if (!(L > 0.0)) throw DomainError("run_study: looks grid values must be > 0");

  McSummary summary;
  summary.replications = cfg.replications;
  const std::vector<Cell> cells = expand_grid(cfg);

  for (const Cell& cell : cells) {
    std::vector<RepOutcome> reps(cfg.replications);
    const int workers = std::max(1, cfg.threads);
    if (workers == 1) {
      for (int r = 0; r < cfg.replications; ++r) reps[r] = run_replication(cfg, cell, r);
    } else {
      std::atomic<int> next{0};
      auto worker = [&]() {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= cfg.replications) return;
          reps[r] = run_replication(cfg, cell, r);
        }
      };
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    // reduce in replication order: summaries do not depend on scheduling
    const int p = static_cast<int>(cell.beta.size()) - 1;
    const int n_free = p + 1 + 1 + (cfg.fix_looks ? 0 : 1);
    Eigen::VectorXd truth(n_free);
    for (int j = 0; j <= p; ++j) truth(j) = cell.beta[j];
    truth(p + 1) = cell.alpha;
    if (!cfg.fix_looks) truth(p + 2) = cell.looks;

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n_free);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(n_free);
    double aic = 0, aicc = 0, bic = 0;
    int conv = 0;
    for (const auto& r : reps) {
      if (!r.converged) continue;
      ++conv;
      sum += r.estimates;
      for (int j = 0; j < n_free; ++j) {
        const double e = r.estimates(j) - truth(j);
        sum_sq(j) += e * e;
      }
      aic += r.aic;
      aicc += r.aicc;
      bic += r.bic;
    }
    const double conv_rate = static_cast<double>(conv) / cfg.replications;
    const bool flagged = conv_rate < 0.5;
    if (flagged) ++summary.flagged_cells;

    std::vector<std::string> names;
    for (int j = 0; j <= p; ++j) names.push_back("beta" + std::to_string(j));
    names.push_back("alpha");
    if (!cfg.fix_looks) names.push_back("looks");

    for (int j = 0; j < n_free; ++j) {
      McRow row;
      row.alpha = cell.alpha;
      row.looks = cell.looks;
      row.n = cell.n;
      row.param = names[j];
      if (conv > 0) {
        row.abias = std::fabs(sum(j) / conv - truth(j));
        row.rmse = std::sqrt(sum_sq(j) / conv);
        row.aic = aic / conv;
        row.aicc = aicc / conv;
        row.bic = bic / conv;
      }
      row.conv_rate = conv_rate;
      row.flagged = flagged;
      summary.rows.push_back(std::move(row));
    }
  }
  return summary;
}

std::vector<PilotEntry> optimizer_pilot(const McConfig& cfg,
                                        const std::vector<OptimizerKind>& optimizers) {
  if (optimizers.size() < 2)
    throw DomainError("optimizer_pilot: need at least 2 optimizers to compare");
  std::vector<PilotEntry> out;
  for (OptimizerKind k : optimizers) {
    McConfig c = cfg;
    c.optimizer = k;  // same seed: every optimizer sees identical datasets
    out.push_back({k, run_study(c)});
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_rows(std::ostream& os, const McSummary& s, const char* prefix_name,
                const char* prefix_val) {
  for (const auto& r : s.rows) {
    if (prefix_name) os << prefix_val << ',';
    os << fmt(r.alpha) << ',' << fmt(r.looks) << ',' << r.n << ',' << r.param << ','
       << fmt(r.abias) << ',' << fmt(r.rmse) << ',' << fmt(r.aic) << ',' << fmt(r.aicc)
       << ',' << fmt(r.bic) << ',' << fmt(r.conv_rate) << '\n';
  }
}

}  // namespace

void write_mc_csv(std::ostream& os, const McSummary& summary) {
  os << "alpha,looks,n,param,abias,rmse,aic,aicc,bic,conv_rate\n";
  write_rows(os, summary, nullptr, nullptr);
}

void write_pilot_csv(std::ostream& os, const std::vector<PilotEntry>& pilot) {
  os << "optimizer,alpha,looks,n,param,abias,rmse,aic,aicc,bic,conv_rate\n";
  for (const auto& e : pilot)
    write_rows(os, e.summary, "optimizer", optimizer_name(e.optimizer));
}

}  // namespace g0reg
