// Microbenchmarks for the hot paths: likelihood/score evaluation, the
// information matrices, sampling, and the window-sized fits the raster
// engine performs per pixel.

#include <benchmark/benchmark.h>

#include <cmath>
#include <optional>

#include "g0reg/distribution.hpp"
#include "g0reg/fit.hpp"
#include "g0reg/model.hpp"
#include "g0reg/rng.hpp"

namespace {

struct Data {
  g0reg::RegressionSpec spec;
  g0reg::Theta theta;
};

Data make_data(int n, bool fix_looks) {
  g0reg::Rng rng(7);
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd z(n);
  const double alpha = -5.0, looks = 4.0;
  for (int k = 0; k < n; ++k) {
    X(k, 0) = 1.0;
    X(k, 1) = rng.uniform();
    const double mu = std::exp(0.5 + X(k, 1));
    z(k) = g0reg::sample_one(g0reg::G0Params(alpha, mu * (-alpha - 1.0), looks), rng);
  }
  g0reg::Theta th{Eigen::Vector2d(0.5, 1.0), alpha, looks};
  return {g0reg::RegressionSpec(std::move(X), std::move(z), g0reg::Link::Log,
                                fix_looks ? std::optional<double>(looks) : std::nullopt),
          th};
}

void BM_loglik(benchmark::State& state) {
  const Data d = make_data(static_cast<int>(state.range(0)), false);
  for (auto _ : state) benchmark::DoNotOptimize(g0reg::loglik(d.spec, d.theta));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_loglik)->Arg(121)->Arg(1000)->Arg(10000);

void BM_score(benchmark::State& state) {
  const Data d = make_data(static_cast<int>(state.range(0)), false);
  for (auto _ : state) benchmark::DoNotOptimize(g0reg::score(d.spec, d.theta));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_score)->Arg(121)->Arg(1000);

void BM_fisher_information(benchmark::State& state) {
  const Data d = make_data(static_cast<int>(state.range(0)), false);
  for (auto _ : state)
    benchmark::DoNotOptimize(g0reg::fisher_information(d.spec, d.theta));
}
BENCHMARK(BM_fisher_information)->Arg(1000);

void BM_observed_information(benchmark::State& state) {
  const Data d = make_data(static_cast<int>(state.range(0)), false);
  for (auto _ : state)
    benchmark::DoNotOptimize(g0reg::observed_information(d.spec, d.theta));
}
BENCHMARK(BM_observed_information)->Arg(1000);

void BM_sample(benchmark::State& state) {
  const g0reg::G0Params p(-5.0, 4.0, 4.0);
  g0reg::Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(g0reg::sample_one(p, rng));
}
BENCHMARK(BM_sample);

void BM_window_fit(benchmark::State& state) {
  // the per-pixel workload of the raster engine: 11x11 window, L fixed
  const Data d = make_data(121, true);
  g0reg::FitOptions opts;
  opts.compute_cov = false;
  for (auto _ : state) {
    const g0reg::FitResult fr = g0reg::fit_mle(d.spec, opts);
    benchmark::DoNotOptimize(fr.loglik);
  }
}
BENCHMARK(BM_window_fit);

void BM_window_fit_warm(benchmark::State& state) {
  const Data d = make_data(121, true);
  g0reg::FitOptions opts;
  opts.compute_cov = false;
  const g0reg::FitResult cold = g0reg::fit_mle(d.spec, opts);
  opts.start = cold.theta;
  for (auto _ : state) {
    const g0reg::FitResult fr = g0reg::fit_mle(d.spec, opts);
    benchmark::DoNotOptimize(fr.loglik);
  }
}
BENCHMARK(BM_window_fit_warm);

}  // namespace

BENCHMARK_MAIN();
