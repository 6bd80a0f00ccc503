// g0reg command line: simulate | fit | diagnose | maps | mc | adequacy.
// Exit codes: 0 success, 1 usage/input error, 2 numerical failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "g0reg/diagnostics.hpp"
#include "g0reg/distribution.hpp"
#include "g0reg/errors.hpp"
#include "g0reg/io.hpp"
#include "g0reg/mc.hpp"
#include "g0reg/raster.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

using nlohmann::json;

int env_threads() {
  if (const char* v = std::getenv("G0REG_THREADS")) {
    const int t = std::atoi(v);
    if (t >= 1) return t;
  }
  return 1;
}

g0reg::OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "cg") return g0reg::OptimizerKind::CG;
  if (s == "bfgs") return g0reg::OptimizerKind::BFGS;
  if (s == "neldermead" || s == "nm") return g0reg::OptimizerKind::NelderMead;
  throw g0reg::DomainError("unknown optimizer '" + s + "' (cg|bfgs|neldermead)");
}

// "free" or "fixed:<L>" (a bare number is read as fixed too)
std::optional<double> parse_looks_flag(const std::string& s) {
  if (s == "free") return std::nullopt;
  std::string v = s;
  if (v.rfind("fixed:", 0) == 0) v = v.substr(6);
  try {
    const double L = std::stod(v);
    if (L > 0.0) return L;
  } catch (const std::exception&) {
  }
  throw g0reg::DomainError("--looks expects 'free' or 'fixed:<L>', got '" + s + "'");
}

struct SimulateArgs {
  double alpha = -3.0;
  double gamma = 0.0, mu = 0.0;
  bool has_gamma = false, has_mu = false;
  double looks = 1.0;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::string design_file;  // optional covariate CSV for a regression dataset
  std::vector<double> beta;
};

int run_simulate(const SimulateArgs& a) {
  if (a.has_gamma == a.has_mu)
    throw g0reg::DomainError("simulate: give exactly one of --gamma or --mu");
  if (a.has_mu && !(a.alpha < -1.0))
    throw g0reg::DomainError("simulate: --mu needs alpha < -1 so that gamma > 0");

  if (a.design_file.empty()) {
    const double gamma = a.has_gamma ? a.gamma : a.mu * (-a.alpha - 1.0);
    const g0reg::G0Params p(a.alpha, gamma, a.looks);
    const auto z = g0reg::sample(p, a.n, a.seed);
    std::vector<std::vector<double>> rows(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) rows[i] = {z[i]};
    g0reg::io::write_csv_file(a.out, {"z"}, rows);
    return kExitOk;
  }

  // regression dataset: mu_k = exp(x_k' beta) with covariates from the file
  if (a.beta.empty())
    throw g0reg::DomainError("simulate: --design requires --beta coefficients");
  const auto table = g0reg::io::read_csv_file(a.design_file);
  if (table.columns.size() + 1 != a.beta.size())
    throw g0reg::DomainError("simulate: --beta needs " +
                             std::to_string(table.columns.size() + 1) +
                             " coefficients (intercept + one per covariate column)");
  std::vector<std::vector<double>> xcols;
  for (const auto& c : table.columns) xcols.push_back(table.numeric_column(c));
  g0reg::Rng rng(a.seed);
  std::vector<std::string> header = {"z"};
  for (const auto& c : table.columns) header.push_back(c);
  std::vector<std::vector<double>> rows;
  rows.reserve(table.n_rows());
  for (std::size_t k = 0; k < table.n_rows(); ++k) {
    double eta = a.beta[0];
    for (std::size_t j = 0; j < xcols.size(); ++j) eta += a.beta[j + 1] * xcols[j][k];
    const double mu = std::exp(eta);
    const g0reg::G0Params p(a.alpha, mu * (-a.alpha - 1.0), a.looks);
    std::vector<double> row = {g0reg::sample_one(p, rng)};
    for (const auto& col : xcols) row.push_back(col[k]);
    rows.push_back(std::move(row));
  }
  g0reg::io::write_csv_file(a.out, header, rows);
  return kExitOk;
}

g0reg::Link parse_link(const std::string& s) {
  if (s == "log") return g0reg::Link::Log;
  if (s == "extlogit") return g0reg::Link::ExtendedLogit;
  if (s == "cloglog") return g0reg::Link::CompLogLog;
  throw g0reg::DomainError("unknown link '" + s + "' (log|extlogit|cloglog)");
}

struct FitArgs {
  std::string data, formula_text, looks = "free", optimizer = "cg", out;
  std::string link = "log";
  int max_iter = 500;
  double grad_tol = 1e-6;
};

g0reg::RegressionSpec spec_from_args(const FitArgs& a) {
  const auto table = g0reg::io::read_csv_file(a.data);
  const auto formula = g0reg::io::parse_formula(a.formula_text);
  return g0reg::io::spec_from_table(table, formula, parse_link(a.link),
                                    parse_looks_flag(a.looks));
}

g0reg::FitResult fit_from_args(const FitArgs& a, const g0reg::RegressionSpec& spec) {
  g0reg::FitOptions opts;
  opts.optimizer = parse_optimizer(a.optimizer);
  opts.max_iter = a.max_iter;
  opts.grad_tol = a.grad_tol;
  return g0reg::fit_mle(spec, opts);
}

int run_fit(const FitArgs& a) {
  const g0reg::RegressionSpec spec = spec_from_args(a);
  const g0reg::FitResult fr = fit_from_args(a, spec);
  g0reg::io::write_text_file(a.out, g0reg::io::fit_result_json(fr));
  if (!fr.converged) {
    std::cerr << "fit did not converge (best-so-far written to " << a.out << ")\n";
    return kExitNumeric;
  }
  return kExitOk;
}

struct DiagnoseArgs {
  FitArgs fit;
  int envelope_nu = 19;
  std::uint64_t seed = 1;
  std::string out_prefix;
};

int run_diagnose(const DiagnoseArgs& a) {
  const g0reg::RegressionSpec spec = spec_from_args(a.fit);
  const g0reg::FitResult fr = fit_from_args(a.fit, spec);
  if (!fr.converged) {
    g0reg::io::write_text_file(a.out_prefix + "_fit.json", g0reg::io::fit_result_json(fr));
    std::cerr << "fit did not converge; no diagnostics produced\n";
    return kExitNumeric;
  }
  const auto rep = g0reg::diagnose(spec, fr, a.envelope_nu, a.seed);
  g0reg::io::write_text_file(a.out_prefix + "_fit.json", g0reg::io::fit_result_json(fr));
  g0reg::io::write_text_file(a.out_prefix + "_report.json",
                             g0reg::io::diagnostics_report_json(rep));
  g0reg::io::write_report_csv(a.out_prefix + "_obs.csv", spec, rep);
  if (a.envelope_nu > 0)
    g0reg::io::write_envelope_csv(a.out_prefix + "_envelope.csv", rep.envelope);
  return kExitOk;
}

struct MapsArgs {
  std::string raster, mode = "dist", response, predictor, channel;
  int window = 0;  // 0: mode default (7 dist, 11 regress)
  int stride = 1;
  int threads = 0;
  std::vector<std::string> csv_layers;
  std::string out_prefix;
};

int run_maps(const MapsArgs& a) {
  const g0reg::Raster r = g0reg::io::read_raster(a.raster);
  g0reg::WindowOptions opts;
  opts.window = a.window > 0 ? a.window : (a.mode == "regress" ? 11 : 7);
  opts.stride = a.stride;
  opts.threads = a.threads > 0 ? a.threads : env_threads();

  g0reg::MapStack ms;
  if (a.mode == "dist") {
    const std::string channel = a.channel.empty()
                                    ? (a.response.empty() ? r.channels.front() : a.response)
                                    : a.channel;
    ms = g0reg::window_distribution_maps(r, channel, opts);
  } else if (a.mode == "regress") {
    if (a.response.empty() || a.predictor.empty())
      throw g0reg::DomainError("maps --mode regress needs --response and --predictor");
    ms = g0reg::window_regression_maps(r, a.response, a.predictor, opts);
  } else {
    throw g0reg::DomainError("maps: --mode must be dist or regress, got '" + a.mode + "'");
  }
  g0reg::io::write_mapstack(a.out_prefix, ms);
  for (const auto& layer : a.csv_layers)
    g0reg::io::write_layer_csv(a.out_prefix + "_" + layer + ".csv", ms, layer);

  if (a.mode == "regress") {
    const auto adq = g0reg::ratio_adequacy(ms, r.looks);
    json j;
    j["schema_version"] = 1;
    j["alpha0"] = adq.alpha0;
    j["statistic"] = adq.statistic;
    j["p_value"] = adq.p_value;
    j["n_ratios"] = adq.n_ratios;
    g0reg::io::write_text_file(a.out_prefix + "_adequacy.json", j.dump(2) + "\n");
  }
  if (ms.masked_fraction() > 0.5) {
    std::cerr << "more than half of the pixels are masked (fraction "
              << ms.masked_fraction() << ")\n";
    return kExitNumeric;
  }
  return kExitOk;
}

struct McArgs {
  std::string config;  // JSON config file
  std::string out;
  bool pilot = false;
  // flag-level overrides
  std::vector<double> alphas, looks;
  std::vector<int> ns;
  std::vector<double> beta;
  int replications = 0;
  std::string optimizer;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = 0;
};

g0reg::McConfig mc_config(const McArgs& a) {
  g0reg::McConfig cfg;
  if (!a.config.empty()) {
    std::ifstream f(a.config);
    if (!f) throw g0reg::DomainError("cannot open config: " + a.config);
    json j;
    f >> j;
    if (j.contains("alphas")) cfg.alphas = j["alphas"].get<std::vector<double>>();
    if (j.contains("looks")) cfg.looks_grid = j["looks"].get<std::vector<double>>();
    if (j.contains("ns")) cfg.sample_sizes = j["ns"].get<std::vector<int>>();
    if (j.contains("betas")) cfg.betas = j["betas"].get<std::vector<std::vector<double>>>();
    if (j.contains("replications")) cfg.replications = j["replications"].get<int>();
    if (j.contains("optimizer")) cfg.optimizer = parse_optimizer(j["optimizer"].get<std::string>());
    if (j.contains("fix_looks")) cfg.fix_looks = j["fix_looks"].get<bool>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (!a.alphas.empty()) cfg.alphas = a.alphas;
  if (!a.looks.empty()) cfg.looks_grid = a.looks;
  if (!a.ns.empty()) cfg.sample_sizes = a.ns;
  if (!a.beta.empty()) cfg.betas = {a.beta};
  if (a.replications > 0) cfg.replications = a.replications;
  if (!a.optimizer.empty()) cfg.optimizer = parse_optimizer(a.optimizer);
  if (a.has_seed) cfg.seed = a.seed;
  cfg.threads = a.threads > 0 ? a.threads : env_threads();
  return cfg;
}

int run_mc(const McArgs& a) {
  const g0reg::McConfig cfg = mc_config(a);
  std::ofstream f(a.out);
  if (!f) throw g0reg::DomainError("cannot write: " + a.out);
  int flagged = 0;
  if (a.pilot) {
    const auto pilot = g0reg::optimizer_pilot(cfg);
    g0reg::write_pilot_csv(f, pilot);
    for (const auto& e : pilot) flagged += e.summary.flagged_cells;
  } else {
    const auto summary = g0reg::run_study(cfg);
    g0reg::write_mc_csv(f, summary);
    flagged = summary.flagged_cells;
  }
  if (flagged > 0) {
    std::cerr << flagged << " cell(s) flagged for convergence rate < 50%\n";
    return kExitNumeric;
  }
  return kExitOk;
}

struct AdequacyArgs {
  std::string data, column = "z", alpha0 = "mmse", out;
  double looks = 1.0;
};

int run_adequacy(const AdequacyArgs& a) {
  const auto table = g0reg::io::read_csv_file(a.data);
  if (!table.column_index(a.column))
    throw g0reg::DomainError("data has no column '" + a.column + "'");
  const std::vector<double> ratios = table.numeric_column(a.column);
  double alpha0;
  bool estimated = false;
  if (a.alpha0 == "mmse") {
    alpha0 = g0reg::mmse_alpha0(ratios, a.looks);
    estimated = true;
  } else {
    alpha0 = std::stod(a.alpha0);
  }
  const auto [stat, p] = g0reg::cvm_adequacy(ratios, alpha0, a.looks);
  json j;
  j["schema_version"] = 1;
  j["alpha0"] = alpha0;
  j["alpha0_estimated"] = estimated;
  j["looks"] = a.looks;
  j["statistic"] = stat;
  j["p_value"] = p;
  j["n"] = ratios.size();
  if (a.out.empty())
    std::cout << j.dump(2) << '\n';
  else
    g0reg::io::write_text_file(a.out, j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"G0 intensity regression toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "draw G0 samples or a regression dataset");
  s_sim->add_option("--alpha", sim.alpha, "roughness (< 0; < -1 with --mu)")->required();
  auto* og = s_sim->add_option("--gamma", sim.gamma, "brightness");
  auto* om = s_sim->add_option("--mu", sim.mu, "mean (implies gamma = mu(-alpha-1))");
  s_sim->add_option("--looks", sim.looks, "number of looks")->required();
  s_sim->add_option("--n", sim.n, "sample size");
  s_sim->add_option("--seed", sim.seed, "RNG seed");
  s_sim->add_option("--out", sim.out, "output CSV")->required();
  s_sim->add_option("--design", sim.design_file, "covariate CSV for a regression dataset");
  s_sim->add_option("--beta", sim.beta, "coefficients for --design (intercept first)");

  FitArgs fit;
  auto* s_fit = app.add_subcommand("fit", "maximum-likelihood fit of the regression");
  s_fit->add_option("--data", fit.data, "input CSV")->required();
  s_fit->add_option("--formula", fit.formula_text, "e.g. \"y ~ x1 + x2\"")->required();
  s_fit->add_option("--looks", fit.looks, "free | fixed:<L>");
  s_fit->add_option("--link", fit.link, "log | extlogit | cloglog");
  s_fit->add_option("--optimizer", fit.optimizer, "cg | bfgs | neldermead");
  s_fit->add_option("--max-iter", fit.max_iter, "iteration cap");
  s_fit->add_option("--grad-tol", fit.grad_tol, "score tolerance");
  s_fit->add_option("--out", fit.out, "output JSON")->required();

  DiagnoseArgs diag;
  auto* s_diag = app.add_subcommand("diagnose", "fit + residual/influence report");
  s_diag->add_option("--data", diag.fit.data, "input CSV")->required();
  s_diag->add_option("--formula", diag.fit.formula_text, "model formula")->required();
  s_diag->add_option("--looks", diag.fit.looks, "free | fixed:<L>");
  s_diag->add_option("--link", diag.fit.link, "log | extlogit | cloglog");
  s_diag->add_option("--optimizer", diag.fit.optimizer, "cg | bfgs | neldermead");
  s_diag->add_option("--envelope-nu", diag.envelope_nu, "envelope replicates (0 skips)");
  s_diag->add_option("--seed", diag.seed, "envelope RNG seed");
  s_diag->add_option("--out", diag.out_prefix, "output prefix")->required();

  MapsArgs maps;
  auto* s_maps = app.add_subcommand("maps", "sliding-window per-pixel maps");
  s_maps->add_option("--raster", maps.raster, "raster sidecar JSON")->required();
  s_maps->add_option("--mode", maps.mode, "dist | regress");
  s_maps->add_option("--channel", maps.channel, "channel for dist mode");
  s_maps->add_option("--response", maps.response, "response channel (regress)");
  s_maps->add_option("--predictor", maps.predictor, "predictor channel (regress)");
  s_maps->add_option("--window", maps.window, "odd window (default 7 dist / 11 regress)");
  s_maps->add_option("--stride", maps.stride, "pixel stride");
  s_maps->add_option("--threads", maps.threads, "worker threads (or G0REG_THREADS)");
  s_maps->add_option("--csv-layer", maps.csv_layers, "also export layer(s) as x,y,value CSV");
  s_maps->add_option("--out", maps.out_prefix, "output prefix")->required();

  McArgs mc;
  auto* s_mc = app.add_subcommand("mc", "simulate-fit replication study");
  s_mc->add_option("--config", mc.config, "JSON config");
  s_mc->add_option("--alpha", mc.alphas, "alpha grid");
  s_mc->add_option("--looks", mc.looks, "looks grid");
  s_mc->add_option("--n", mc.ns, "sample-size grid");
  s_mc->add_option("--beta", mc.beta, "beta vector");
  s_mc->add_option("--replications", mc.replications, "replications per cell");
  s_mc->add_option("--optimizer", mc.optimizer, "cg | bfgs | neldermead");
  auto* oseed = s_mc->add_option("--seed", mc.seed, "RNG seed");
  s_mc->add_option("--threads", mc.threads, "worker threads (or G0REG_THREADS)");
  s_mc->add_flag("--pilot", mc.pilot, "compare all three optimizers");
  s_mc->add_option("--out", mc.out, "output CSV")->required();

  AdequacyArgs adq;
  auto* s_adq = app.add_subcommand("adequacy", "Cramer-von Mises G0 adequacy test");
  s_adq->add_option("--data", adq.data, "input CSV")->required();
  s_adq->add_option("--column", adq.column, "ratio column name");
  s_adq->add_option("--alpha0", adq.alpha0, "fixed value or 'mmse'");
  s_adq->add_option("--looks", adq.looks, "number of looks")->required();
  s_adq->add_option("--out", adq.out, "output JSON (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    sim.has_gamma = og->count() > 0;
    sim.has_mu = om->count() > 0;
    mc.has_seed = oseed->count() > 0;
    if (s_sim->parsed()) return run_simulate(sim);
    if (s_fit->parsed()) return run_fit(fit);
    if (s_diag->parsed()) return run_diagnose(diag);
    if (s_maps->parsed()) return run_maps(maps);
    if (s_mc->parsed()) return run_mc(mc);
    if (s_adq->parsed()) return run_adequacy(adq);
  } catch (const g0reg::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}
