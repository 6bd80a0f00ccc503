#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "g0reg/fit.hpp"

// Simulate-fit replication harness over an (alpha, L, n, beta) grid.
// Covariates are drawn i.i.d. from G0(alpha, -alpha-1, L) and regenerated per
// replication; responses follow the log-link model. Summaries are exact sums,
// so results are byte-stable for a given config + seed regardless of the
// worker count.

namespace g0reg {

struct McConfig {
  std::vector<double> alphas{-5.0};
  std::vector<double> looks_grid{4.0};
  std::vector<int> sample_sizes{100};
  std::vector<std::vector<double>> betas{{0.01, 0.01, 0.01}};
  int replications = 200;
  OptimizerKind optimizer = OptimizerKind::CG;
  bool fix_looks = false;  // estimate L jointly unless the caller pins it
  int max_iter = 500;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct McRow {
  double alpha = 0.0;
  double looks = 0.0;
  int n = 0;
  std::string param;
  double abias = 0.0;  // |mean(estimate) - truth|
  double rmse = 0.0;
  double aic = 0.0;    // per-observation means over converged replications
  double aicc = 0.0;
  double bic = 0.0;
  double conv_rate = 0.0;
  bool flagged = false;  // convergence rate < 50%
};

struct McSummary {
  std::vector<McRow> rows;
  int flagged_cells = 0;
  int replications = 0;
};

McSummary run_study(const McConfig& cfg);

// same protocol and seeds per optimizer, one summary each
struct PilotEntry {
  OptimizerKind optimizer;
  McSummary summary;
};
std::vector<PilotEntry> optimizer_pilot(
    const McConfig& cfg,
    const std::vector<OptimizerKind>& optimizers = {
        OptimizerKind::CG, OptimizerKind::BFGS, OptimizerKind::NelderMead});

// header: alpha, looks, n, param, abias, rmse, aic, aicc, bic, conv_rate
void write_mc_csv(std::ostream& os, const McSummary& summary);
void write_pilot_csv(std::ostream& os, const std::vector<PilotEntry>& pilot);

}  // namespace g0reg
