// SPDX-License-Identifier: Apache-2.0
/**
 * @file   baseline.hpp
 * @brief  Non-learned destriping by column-mean equalization.
 *
 * Each column is shifted by the difference between its mean and the moving
 * average of neighbouring column means over [c - w, c + w] (truncated at the
 * image edges). Column-constant offsets are removed and smooth horizontal
 * trends survive; genuine vertical edges get smeared, which is the known
 * weakness of statistics-based destripers.
 */

#ifndef DESTRIPE_BASELINE_HPP_
#define DESTRIPE_BASELINE_HPP_

#include <algorithm>
#include <string>
#include <vector>

#include "core.hpp"
#include "image.hpp"
#include "metrics.hpp"

namespace destripe {

struct BaselineConfig {
  std::size_t half_width = 10;
  std::string method = "column-equalize";
};

/// Moving average of profile over [c - w, c + w], edge-truncated.
inline std::vector<double> moving_average(const std::vector<double> &profile,
                                          std::size_t w) {
  const std::size_t m = profile.size();
  std::vector<double> prefix(m + 1, 0.0);
  for (std::size_t c = 0; c < m; ++c)
    prefix[c + 1] = prefix[c] + profile[c];
  std::vector<double> out(m);
  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t lo = c >= w ? c - w : 0;
    const std::size_t hi = std::min(m - 1, c + w);
    out[c] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
  }
  return out;
}

inline Image column_equalize(const Image &img, const BaselineConfig &cfg = {}) {
  if (cfg.half_width < 1)
    throw InvalidArgument("column_equalize: half width must be >= 1");
  if (img.cols() < 2 * cfg.half_width + 1)
    throw InvalidArgument("column_equalize: image width " +
                          std::to_string(img.cols()) +
                          " is narrower than the window " +
                          std::to_string(2 * cfg.half_width + 1));
  const auto profile = column_profile(img);
  const auto smooth = moving_average(profile, cfg.half_width);
  Image out = img;
  for (std::size_t c = 0; c < out.cols(); ++c) {
    const double shift = profile[c] - smooth[c];
    for (double &v : out.column(c))
      v = std::clamp(v - shift, 0.0, 1.0);
  }
  return out;
}

/// Sum of squared differences between adjacent profile entries.
inline double profile_roughness(const std::vector<double> &profile) {
  double sum = 0.0;
  for (std::size_t c = 1; c < profile.size(); ++c) {
    const double d = profile[c] - profile[c - 1];
    sum += d * d;
  }
  return sum;
}

} // namespace destripe

#endif // DESTRIPE_BASELINE_HPP_
