// SPDX-License-Identifier: Apache-2.0
/**
 * @file   noise.hpp
 * @brief  Column-wise stripe noise: sampling, application, dataset corruption.
 *
 * A stripe field holds one additive offset per column. In sampled mode the
 * per-image standard deviation is drawn once as sigma ~ U(0, beta) and the
 * offsets as s_i ~ N(0, sigma^2); in fixed mode sigma = beta.
 */

#ifndef DESTRIPE_NOISE_HPP_
#define DESTRIPE_NOISE_HPP_

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace destripe {

enum class NoiseMode { sampled_sigma, fixed_sigma };

inline NoiseMode parse_noise_mode(const std::string &s) {
  if (s == "sampled" || s == "sampled-sigma")
    return NoiseMode::sampled_sigma;
  if (s == "fixed" || s == "fixed-sigma")
    return NoiseMode::fixed_sigma;
  throw InvalidArgument("unknown noise mode '" + s +
                        "' (expected 'sampled' or 'fixed')");
}

inline const char *to_string(NoiseMode mode) {
  return mode == NoiseMode::fixed_sigma ? "fixed" : "sampled";
}

struct StripeField {
  std::vector<double> offsets; ///< unclamped s_i, one per column
  double sigma = 0.0;
  double beta = 0.0;
  NoiseMode mode = NoiseMode::sampled_sigma;
  std::uint64_t seed = 0;

  std::size_t width() const noexcept { return offsets.size(); }
};

inline StripeField sample_stripe_field(std::size_t width, double beta,
                                       NoiseMode mode, std::uint64_t seed) {
  if (!(beta >= 0.0))
    throw InvalidArgument("sample_stripe_field: beta must be >= 0");
  if (width == 0)
    throw InvalidArgument("sample_stripe_field: width must be >= 1");
  Rng rng(seed);
  StripeField field;
  field.beta = beta;
  field.mode = mode;
  field.seed = seed;
  field.sigma = mode == NoiseMode::fixed_sigma ? beta : beta * rng.uniform01();
  field.offsets.resize(width);
  for (double &s : field.offsets)
    s = field.sigma * rng.normal();
  return field;
}

/// y(r, c) = clamp(x(r, c) + s_c, 0, 1).
inline Image apply_stripes(const Image &img, const StripeField &field) {
  if (field.width() != img.cols())
    throw InvalidArgument("apply_stripes: field width " +
                          std::to_string(field.width()) +
                          " does not match image width " +
                          std::to_string(img.cols()));
  Image out = img;
  for (std::size_t c = 0; c < out.cols(); ++c) {
    const double s = field.offsets[c];
    for (double &v : out.column(c))
      v = std::clamp(v + s, 0.0, 1.0);
  }
  return out;
}

struct CorruptedSample {
  Image clean;
  Image noisy;
  StripeField field;
};

/// Field for image k is seeded with derive_seed(seed, k).
inline std::vector<CorruptedSample>
corrupt_dataset(const std::vector<Image> &images, double beta, NoiseMode mode,
                std::uint64_t seed) {
  if (!(beta >= 0.0))
    throw InvalidArgument("corrupt_dataset: beta must be >= 0");
  std::vector<CorruptedSample> out;
  out.reserve(images.size());
  for (std::size_t k = 0; k < images.size(); ++k) {
    auto field =
        sample_stripe_field(images[k].cols(), beta, mode, derive_seed(seed, k));
    Image noisy = apply_stripes(images[k], field);
    out.push_back({images[k], std::move(noisy), std::move(field)});
  }
  return out;
}

} // namespace destripe

#endif // DESTRIPE_NOISE_HPP_
