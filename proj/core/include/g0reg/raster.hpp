#pragma once

#include <string>
#include <vector>

#include "g0reg/fit.hpp"

// Channel-major float rasters and the per-pixel sliding-window fitting
// engine. Windows clip at the borders (map dimensions are preserved); pixel
// fits warm-start from the previous pixel of the same worker band, which
// keeps outputs byte-identical for a fixed thread count.

namespace g0reg {

struct Raster {
  int width = 0, height = 0;
  std::vector<std::string> channels;
  double looks = 1.0;
  std::vector<float> data;  // [channel][row][col]

  float at(int c, int x, int y) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float& at(int c, int x, int y) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  int channel_index(const std::string& name) const;
  void validate() const;
};

// converged-layer codes
inline constexpr float kPixelMasked = 0.0f;
inline constexpr float kPixelOk = 1.0f;
inline constexpr float kPixelExtremeTexture = 2.0f;  // alpha-hat >= -1.0001, kept

struct MapStack {
  int width = 0, height = 0;
  std::vector<std::string> layers;
  double looks = 1.0;
  int window = 0, stride = 1;
  std::vector<float> data;  // [layer][row][col]

  float at(int l, int x, int y) const {
    return data[(static_cast<std::size_t>(l) * height + y) * width + x];
  }
  float& at(int l, int x, int y) {
    return data[(static_cast<std::size_t>(l) * height + y) * width + x];
  }
  int layer_index(const std::string& name) const;
  double masked_fraction() const;  // from the converged layer
};

struct WindowOptions {
  int window = 7;
  int stride = 1;
  int threads = 1;
  FitOptions fit{};
};

// per pixel: intercept-only G0 fit (L fixed to the sensor looks) on the
// window intensities; layers alpha, gamma, mu, converged
MapStack window_distribution_maps(const Raster& r, const std::string& channel,
                                  const WindowOptions& opts);

// per pixel: response ~ exp(b0 + b1 * predictor) on the window; layers
// beta0, beta1, predicted, ratio, converged
MapStack window_regression_maps(const Raster& r, const std::string& response_channel,
                                const std::string& predictor_channel,
                                const WindowOptions& opts);

struct AdequacyResult {
  double alpha0;
  double statistic;
  double p_value;
  std::size_t n_ratios;
};

// pools the unmasked ratio layer, estimates alpha0 by minimum MSE, and runs
// the Cramer-von Mises test against G0(alpha0, -alpha0-1, looks)
AdequacyResult ratio_adequacy(const MapStack& ms, double looks);

}  // namespace g0reg
