#include "g0reg/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "g0reg/diagnostics.hpp"
#include "g0reg/errors.hpp"

namespace g0reg {

namespace {
constexpr float kNaNf = std::numeric_limits<float>::quiet_NaN();
}

int Raster::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i] == name) return static_cast<int>(i);
  return -1;
}

void Raster::validate() const {
  if (width < 1 || height < 1) throw DomainError("Raster: empty dimensions");
  if (channels.empty()) throw DomainError("Raster: no channels");
  if (data.size() != static_cast<std::size_t>(width) * height * channels.size())
    throw DomainError("Raster: data length does not match width*height*channels");
  if (!(looks > 0.0)) throw DomainError("Raster: looks must be > 0");
  for (float v : data)
    if (!std::isfinite(v) || v < 0.0f)
      throw DomainError("Raster: intensities must be finite and >= 0");
}

int MapStack::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i] == name) return static_cast<int>(i);
  return -1;
}

double MapStack::masked_fraction() const {
  const int li = layer_index("converged");
  if (li < 0) return 0.0;
  std::size_t masked = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (at(li, x, y) == kPixelMasked) ++masked;
  return static_cast<double>(masked) / (static_cast<double>(width) * height);
}

namespace {

struct PixelJob {
  const Raster& r;
  const WindowOptions& opts;
  int radius;

  // gather one channel's window values around (cx, cy), clipped at borders,
  // dropping nonpositive intensities
  void window_values(int c, int cx, int cy, std::vector<double>& out) const {
    out.clear();
    const int x0 = std::max(0, cx - radius), x1 = std::min(r.width - 1, cx + radius);
    const int y0 = std::max(0, cy - radius), y1 = std::min(r.height - 1, cy + radius);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double v = r.at(c, x, y);
        if (v > 0.0) out.push_back(v);
      }
  }

  void window_pairs(int cr, int cp, int cx, int cy, std::vector<double>& zs,
                    std::vector<double>& xs) const {
    zs.clear();
    xs.clear();
    const int x0 = std::max(0, cx - radius), x1 = std::min(r.width - 1, cx + radius);
    const int y0 = std::max(0, cy - radius), y1 = std::min(r.height - 1, cy + radius);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double z = r.at(cr, x, y);
        if (z > 0.0) {
          zs.push_back(z);
          xs.push_back(r.at(cp, x, y));
        }
      }
  }
};

bool nearly_constant(const std::vector<double>& v) {
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  return (*mx - *mn) <= 1e-10 * std::max(1.0, *mx);
}

// Windows whose likelihood peaks at the gamma boundary (alpha -> -inf) are
// reported at this floor; such areas are maximally homogeneous.
constexpr double kAlphaFloor = -60.0;

struct PixelFit {
  bool ok = false;
  bool boundary = false;
  Theta theta;
};

PixelFit fit_window(const RegressionSpec& spec, const FitOptions& base,
                    const std::optional<Theta>& warm) {
  FitOptions fo = base;
  fo.compute_cov = false;
  if (warm && warm->alpha > kAlphaFloor + 0.5) fo.start = warm;
  FitResult fr = fit_mle(spec, fo);
  if (!fr.converged && fo.start) {
    fo.start.reset();
    fr = fit_mle(spec, fo);
  }
  PixelFit out;
  if (fr.converged && fr.theta.alpha > kAlphaFloor) {
    out.ok = true;
    out.theta = fr.theta;
    return out;
  }
  if (fr.theta.alpha <= -30.0) {
    // ridge signature: the window is gamma-like. With L fixed the boundary
    // beta solves the shape-free score equation, i.e. the exponential-family
    // fit; alpha is reported at the floor.
    FitOptions eo = base;
    eo.compute_cov = false;
    const FitResult ef = fit_baseline(spec, BaselineFamily::Exponential, eo);
    if (ef.converged) {
      out.ok = true;
      out.boundary = true;
      out.theta = Theta{ef.theta.beta, kAlphaFloor, spec.fixed_looks()};
    }
  }
  return out;
}

// shared driver: splits rows into contiguous per-worker bands; each band is
// scanned in order so the warm-start chain is deterministic
template <typename PixelFn>
void run_banded(int width, int height, int stride, int threads, PixelFn&& fn) {
  const int workers = std::max(1, threads);
  std::vector<std::thread> pool;
  const int rows_per = (height + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int y0 = w * rows_per, y1 = std::min(height, y0 + rows_per);
    if (y0 >= y1) break;
    pool.emplace_back([=, &fn]() {
      std::optional<Theta> warm;
      for (int y = y0; y < y1; ++y) {
        if (y % stride != 0) continue;
        for (int x = 0; x < width; x += stride) warm = fn(x, y, warm);
      }
    });
  }
  for (auto& t : pool) t.join();
}

void fill_stride_blocks(MapStack& ms) {
  if (ms.stride <= 1) return;
  for (std::size_t l = 0; l < ms.layers.size(); ++l)
    for (int y = 0; y < ms.height; ++y)
      for (int x = 0; x < ms.width; ++x) {
        const int sx = (x / ms.stride) * ms.stride, sy = (y / ms.stride) * ms.stride;
        if (sx != x || sy != y)
          ms.at(static_cast<int>(l), x, y) = ms.at(static_cast<int>(l), sx, sy);
      }
}

void check_window(const WindowOptions& opts) {
  if (opts.window < 3 || opts.window % 2 == 0)
    throw DomainError("window must be odd and >= 3, got " + std::to_string(opts.window));
  if (opts.stride < 1) throw DomainError("stride must be >= 1");
}

}  // namespace

MapStack window_distribution_maps(const Raster& r, const std::string& channel,
                                  const WindowOptions& opts) {
  r.validate();
  check_window(opts);
  const int c = r.channel_index(channel);
  if (c < 0) throw DomainError("window_distribution_maps: unknown channel '" + channel + "'");

  MapStack ms;
  ms.width = r.width;
  ms.height = r.height;
  ms.looks = r.looks;
  ms.window = opts.window;
  ms.stride = opts.stride;
  ms.layers = {"alpha", "gamma", "mu", "converged"};
  ms.data.assign(static_cast<std::size_t>(4) * r.width * r.height, kNaNf);

  const PixelJob job{r, opts, opts.window / 2};
  run_banded(r.width, r.height, opts.stride, opts.threads,
             [&](int x, int y, const std::optional<Theta>& warm) -> std::optional<Theta> {
               thread_local std::vector<double> vals;
               job.window_values(c, x, y, vals);
               ms.at(3, x, y) = kPixelMasked;
               if (vals.size() < 8 || nearly_constant(vals)) return warm;
               Eigen::MatrixXd X = Eigen::MatrixXd::Ones(vals.size(), 1);
               Eigen::VectorXd z(vals.size());
               for (std::size_t i = 0; i < vals.size(); ++i) z(i) = vals[i];
               try {
                 RegressionSpec spec(std::move(X), std::move(z), Link::Log, r.looks);
                 const PixelFit pf = fit_window(spec, opts.fit, warm);
                 if (!pf.ok) return warm;
                 const double mu = std::exp(pf.theta.beta(0));
                 ms.at(0, x, y) = static_cast<float>(pf.theta.alpha);
                 ms.at(1, x, y) = static_cast<float>(mu * (-pf.theta.alpha - 1.0));
                 ms.at(2, x, y) = static_cast<float>(mu);
                 ms.at(3, x, y) =
                     pf.theta.alpha >= -1.0001 ? kPixelExtremeTexture : kPixelOk;
                 if (pf.boundary) return warm;  // never seed neighbors from the ridge
                 return pf.theta;
               } catch (const std::exception&) {
                 return warm;
               }
             });
  fill_stride_blocks(ms);
  return ms;
}

MapStack window_regression_maps(const Raster& r, const std::string& response_channel,
                                const std::string& predictor_channel,
                                const WindowOptions& opts) {
  r.validate();
  check_window(opts);
  const int cr = r.channel_index(response_channel);
  const int cp = r.channel_index(predictor_channel);
  if (cr < 0)
    throw DomainError("window_regression_maps: unknown channel '" + response_channel + "'");
  if (cp < 0)
    throw DomainError("window_regression_maps: unknown channel '" + predictor_channel + "'");

  MapStack ms;
  ms.width = r.width;
  ms.height = r.height;
  ms.looks = r.looks;
  ms.window = opts.window;
  ms.stride = opts.stride;
  ms.layers = {"beta0", "beta1", "predicted", "ratio", "converged"};
  ms.data.assign(static_cast<std::size_t>(5) * r.width * r.height, kNaNf);

  const PixelJob job{r, opts, opts.window / 2};
  run_banded(r.width, r.height, opts.stride, opts.threads,
             [&](int x, int y, const std::optional<Theta>& warm) -> std::optional<Theta> {
               thread_local std::vector<double> zs, xs;
               job.window_pairs(cr, cp, x, y, zs, xs);
               ms.at(4, x, y) = kPixelMasked;
               if (zs.size() < 8 || nearly_constant(zs) || nearly_constant(xs)) return warm;
               Eigen::MatrixXd X(zs.size(), 2);
               Eigen::VectorXd z(zs.size());
               for (std::size_t i = 0; i < zs.size(); ++i) {
                 X(i, 0) = 1.0;
                 X(i, 1) = xs[i];
                 z(i) = zs[i];
               }
               try {
                 RegressionSpec spec(std::move(X), std::move(z), Link::Log, r.looks);
                 const PixelFit pf = fit_window(spec, opts.fit, warm);
                 if (!pf.ok) return warm;
                 const double xc = r.at(cp, x, y);
                 const double zc = r.at(cr, x, y);
                 const double mu_c = std::exp(pf.theta.beta(0) + pf.theta.beta(1) * xc);
                 ms.at(0, x, y) = static_cast<float>(pf.theta.beta(0));
                 ms.at(1, x, y) = static_cast<float>(pf.theta.beta(1));
                 ms.at(2, x, y) = static_cast<float>(mu_c);
                 if (zc > 0.0 && mu_c > 0.0)
                   ms.at(3, x, y) = static_cast<float>(zc / mu_c);
                 ms.at(4, x, y) =
                     pf.theta.alpha >= -1.0001 ? kPixelExtremeTexture : kPixelOk;
                 if (pf.boundary) return warm;
                 return pf.theta;
               } catch (const std::exception&) {
                 return warm;
               }
             });
  fill_stride_blocks(ms);
  return ms;
}

AdequacyResult ratio_adequacy(const MapStack& ms, double looks) {
  const int li = ms.layer_index("ratio");
  if (li < 0) throw DomainError("ratio_adequacy: map stack has no ratio layer");
  const int ci = ms.layer_index("converged");
  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(ms.width) * ms.height);
  for (int y = 0; y < ms.height; ++y)
    for (int x = 0; x < ms.width; ++x) {
      if (ci >= 0 && ms.at(ci, x, y) == kPixelMasked) continue;
      const float v = ms.at(li, x, y);
      if (std::isfinite(v) && v > 0.0f) ratios.push_back(v);
    }
  if (ratios.size() < 8)
    throw DegenerateSample("ratio_adequacy: too few unmasked ratio pixels (" +
                           std::to_string(ratios.size()) + ")");
  const double alpha0 = mmse_alpha0(ratios, looks);
  const auto [stat, p] = cvm_adequacy(ratios, alpha0, looks);
  return {alpha0, stat, p, ratios.size()};
}

}  // namespace g0reg
