// SPDX-License-Identifier: Apache-2.0
/**
 * @file   dataset.hpp
 * @brief  Seeded train/validation splits and a synthetic scene generator.
 */

#ifndef DESTRIPE_DATASET_HPP_
#define DESTRIPE_DATASET_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "core.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace destripe {

template <typename Item> struct DatasetSplit {
  std::vector<Item> train;
  std::vector<Item> validation;
  double fraction = 0.85;
  std::uint64_t seed = 0;
};

/// Shuffles a copy of items with Rng(seed) and puts the first
/// ceil(fraction * N) of them in the training set.
template <typename Item>
DatasetSplit<Item> split_dataset(std::vector<Item> items, double fraction,
                                 std::uint64_t seed) {
  if (items.empty())
    throw InvalidArgument("split_dataset: empty input list");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw InvalidArgument("split_dataset: fraction must lie in (0, 1)");
  Rng rng(seed);
  rng.shuffle(items);
  // The epsilon keeps products like 0.85 * 100 from ceiling to 86.
  auto n_train = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(items.size()) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, items.size());
  DatasetSplit<Item> split;
  split.fraction = fraction;
  split.seed = seed;
  split.train.assign(std::make_move_iterator(items.begin()),
                     std::make_move_iterator(items.begin() + n_train));
  split.validation.assign(std::make_move_iterator(items.begin() + n_train),
                          std::make_move_iterator(items.end()));
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic scenes

enum class SceneKind {
  mixed,    ///< smooth background with blobs, rectangles and bars
  vertical, ///< dominated by partial-height vertical bars and edges
  midgray,  ///< low-contrast content kept inside [0.3, 0.7]
};

inline SceneKind parse_scene_kind(const std::string &s) {
  if (s == "mixed")
    return SceneKind::mixed;
  if (s == "vertical")
    return SceneKind::vertical;
  if (s == "midgray")
    return SceneKind::midgray;
  throw InvalidArgument("unknown scene kind '" + s + "'");
}

inline const char *to_string(SceneKind kind) {
  switch (kind) {
  case SceneKind::mixed:
    return "mixed";
  case SceneKind::vertical:
    return "vertical";
  case SceneKind::midgray:
    return "midgray";
  }
  return "?";
}

namespace detail {

struct SceneCanvas {
  Image img;
  double contrast;

  void add_rect(Rng &rng, double min_h, double max_h, double min_w,
                double max_w) {
    const auto n = static_cast<double>(img.rows());
    const auto m = static_cast<double>(img.cols());
    const double h = rng.uniform(min_h, max_h) * n;
    const double w = std::max(1.0, rng.uniform(min_w, max_w) * m);
    const double r0 = rng.uniform(-0.1 * n, n - 0.5 * h);
    const double c0 = rng.uniform(-0.1 * m, m - 0.5 * w);
    const double delta = rng.uniform(-contrast, contrast);
    for (std::size_t c = 0; c < img.cols(); ++c) {
      if (c < c0 || c >= c0 + w)
        continue;
      for (std::size_t r = 0; r < img.rows(); ++r)
        if (r >= r0 && r < r0 + h)
          img(r, c) += delta;
    }
  }

  void add_ellipse(Rng &rng) {
    const auto n = static_cast<double>(img.rows());
    const auto m = static_cast<double>(img.cols());
    const double cr = rng.uniform(0.0, n), cc = rng.uniform(0.0, m);
    const double ar = rng.uniform(0.08, 0.35) * n;
    const double ac = rng.uniform(0.08, 0.35) * m;
    const double delta = rng.uniform(-contrast, contrast);
    for (std::size_t c = 0; c < img.cols(); ++c)
      for (std::size_t r = 0; r < img.rows(); ++r) {
        const double dr = (r - cr) / ar, dc = (c - cc) / ac;
        const double d2 = dr * dr + dc * dc;
        if (d2 < 1.0)
          img(r, c) += delta * (1.0 - 0.5 * d2);
      }
  }
};

} // namespace detail

/// Deterministic synthetic grayscale scene on the 1/255 grid.
inline Image synthesize_scene(std::size_t rows, std::size_t cols,
                              SceneKind kind, std::uint64_t seed) {
  Rng rng(seed);
  const bool mid = kind == SceneKind::midgray;
  const double base = mid ? rng.uniform(0.45, 0.55) : rng.uniform(0.25, 0.75);
  const double slope_r = rng.uniform(-0.25, 0.25) * (mid ? 0.3 : 1.0);
  const double slope_c = rng.uniform(-0.25, 0.25) * (mid ? 0.3 : 1.0);
  const double wave_amp = rng.uniform(0.0, mid ? 0.03 : 0.08);
  const double wave_fr = rng.uniform(0.5, 3.0), wave_fc = rng.uniform(0.5, 3.0);
  const double phase = rng.uniform(0.0, 6.283185307179586);

  detail::SceneCanvas canvas{Image(rows, cols), mid ? 0.12 : 0.35};
  const auto n = static_cast<double>(rows);
  const auto m = static_cast<double>(cols);
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 0; r < rows; ++r) {
      const double u = r / n - 0.5, v = c / m - 0.5;
      canvas.img(r, c) =
          base + slope_r * u + slope_c * v +
          wave_amp * std::sin(6.283185307179586 * (wave_fr * u + wave_fc * v) +
                              phase);
    }

  switch (kind) {
  case SceneKind::mixed: {
    const auto shapes = 2 + rng.below(5);
    for (std::uint64_t i = 0; i < shapes; ++i) {
      if (rng.uniform01() < 0.5)
        canvas.add_ellipse(rng);
      else
        canvas.add_rect(rng, 0.15, 0.7, 0.05, 0.4);
    }
    if (rng.uniform01() < 0.5)
      canvas.add_rect(rng, 0.3, 0.8, 0.01, 0.06);
    break;
  }
  case SceneKind::vertical: {
    const auto bars = 3 + rng.below(4);
    for (std::uint64_t i = 0; i < bars; ++i)
      canvas.add_rect(rng, 0.35, 0.85, 0.01, 0.12);
    canvas.add_rect(rng, 0.25, 0.6, 0.15, 0.4);
    break;
  }
  case SceneKind::midgray: {
    const auto shapes = 1 + rng.below(4);
    for (std::uint64_t i = 0; i < shapes; ++i)
      canvas.add_ellipse(rng);
    break;
  }
  }

  const double lo = mid ? 0.3 : 0.0, hi = mid ? 0.7 : 1.0;
  for (double &p : canvas.img.pixels())
    p = std::round(std::clamp(p, lo, hi) * 255.0) / 255.0;
  return canvas.img;
}

/// count scenes, scene i seeded with derive_seed(seed, i).
inline std::vector<Image> synthesize_scenes(std::size_t count,
                                            std::size_t rows, std::size_t cols,
                                            SceneKind kind,
                                            std::uint64_t seed) {
  std::vector<Image> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(synthesize_scene(rows, cols, kind, derive_seed(seed, i)));
  return out;
}

} // namespace destripe

#endif // DESTRIPE_DATASET_HPP_
