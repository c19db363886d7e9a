// SPDX-License-Identifier: Apache-2.0
/**
 * @file   metrics.hpp
 * @brief  MSE, PSNR, SSIM and column-mean profiles.
 *
 * Images are stored in [0, 1] but all metrics are evaluated on the 0-255
 * scale, so PSNR uses the usual 255^2 peak.
 */

#ifndef DESTRIPE_METRICS_HPP_
#define DESTRIPE_METRICS_HPP_

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "image.hpp"
#include "noise.hpp"

namespace destripe {

inline constexpr double kPeak = 255.0;

/// Mean squared error on the 0-255 scale.
inline double mse(const Image &f, const Image &g) {
  require_same_shape(f, g, "mse");
  const auto a = f.pixels(), b = g.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) * kPeak;
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

/// PSNR in dB, or the "identical" flag when the MSE is exactly zero.
struct Psnr {
  double db = std::numeric_limits<double>::infinity();

  bool identical() const noexcept { return std::isinf(db); }
  static Psnr from_mse(double err) {
    if (err == 0.0)
      return {};
    return {10.0 * std::log10(kPeak * kPeak / err)};
  }
};

inline Psnr psnr(const Image &f, const Image &g) {
  return Psnr::from_mse(mse(f, g));
}

struct SsimConfig {
  std::size_t window = 8;
  std::size_t stride = 1;
  double k1 = 0.01;
  double k2 = 0.03;

  double c1() const { return (k1 * kPeak) * (k1 * kPeak); }
  double c2() const { return (k2 * kPeak) * (k2 * kPeak); }
};

/// SSIM of one pair of windows from their moments (0-255 scale, population
/// variances).
inline double ssim_from_moments(double mu_f, double mu_g, double var_f,
                                double var_g, double cov, const SsimConfig &cfg) {
  const double c1 = cfg.c1(), c2 = cfg.c2();
  return ((2.0 * mu_f * mu_g + c1) * (2.0 * cov + c2)) /
         ((mu_f * mu_f + mu_g * mu_g + c1) * (var_f + var_g + c2));
}

/// Mean SSIM over every window x window block on the stride grid, uniform
/// weights.
inline double ssim(const Image &f, const Image &g, const SsimConfig &cfg = {}) {
  require_same_shape(f, g, "ssim");
  const std::size_t w = cfg.window;
  if (w == 0 || cfg.stride == 0)
    throw InvalidArgument("ssim: window and stride must be >= 1");
  if (f.rows() < w || f.cols() < w)
    throw InvalidArgument("ssim: image smaller than " + std::to_string(w) +
                          "x" + std::to_string(w) + " window");
  const double inv_count = 1.0 / static_cast<double>(w * w);
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t c0 = 0; c0 + w <= f.cols(); c0 += cfg.stride)
    for (std::size_t r0 = 0; r0 + w <= f.rows(); r0 += cfg.stride) {
      double sf = 0, sg = 0, sff = 0, sgg = 0, sfg = 0;
      for (std::size_t c = c0; c < c0 + w; ++c) {
        const auto fc = f.column(c), gc = g.column(c);
        for (std::size_t r = r0; r < r0 + w; ++r) {
          const double a = fc[r] * kPeak, b = gc[r] * kPeak;
          sf += a;
          sg += b;
          sff += a * a;
          sgg += b * b;
          sfg += a * b;
        }
      }
      const double mu_f = sf * inv_count, mu_g = sg * inv_count;
      const double var_f = sff * inv_count - mu_f * mu_f;
      const double var_g = sgg * inv_count - mu_g * mu_g;
      const double cov = sfg * inv_count - mu_f * mu_g;
      total += ssim_from_moments(mu_f, mu_g, var_f, var_g, cov, cfg);
      ++windows;
    }
  return total / static_cast<double>(windows);
}

/// Per-column mean, in the image's own [0, 1] units.
inline std::vector<double> column_profile(const Image &img) {
  std::vector<double> profile(img.cols());
  for (std::size_t c = 0; c < img.cols(); ++c) {
    double sum = 0.0;
    for (double v : img.column(c))
      sum += v;
    profile[c] = sum / static_cast<double>(img.rows());
  }
  return profile;
}

struct ImageScores {
  std::string name;
  Psnr psnr;
  double ssim = 0.0;
};

struct MetricsReport {
  std::vector<ImageScores> images;
  double beta = 0.0;
  NoiseMode mode = NoiseMode::fixed_sigma;
  SsimConfig ssim_config;

  /// Mean over non-identical entries; the identical flag if every entry is.
  Psnr mean_psnr() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &s : images)
      if (!s.psnr.identical()) {
        sum += s.psnr.db;
        ++n;
      }
    if (n == 0)
      return {};
    return {sum / static_cast<double>(n)};
  }

  double mean_ssim() const {
    if (images.empty())
      return 0.0;
    double sum = 0.0;
    for (const auto &s : images)
      sum += s.ssim;
    return sum / static_cast<double>(images.size());
  }
};

} // namespace destripe

#endif // DESTRIPE_METRICS_HPP_
