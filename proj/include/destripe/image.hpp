// SPDX-License-Identifier: Apache-2.0
/**
 * @file   image.hpp
 * @brief  Grayscale image container and patch extraction.
 *
 * Pixels are stored column-major: column c occupies a contiguous run of
 * rows() values. Columns are the unit of work for stripe noise, so the
 * per-column span accessor is the hot path.
 */

#ifndef DESTRIPE_IMAGE_HPP_
#define DESTRIPE_IMAGE_HPP_

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"

namespace destripe {

class Image {
public:
  Image() = default;

  Image(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), pixels_(rows * cols, value) {
    if (rows == 0 || cols == 0)
      throw InvalidArgument("image dimensions must be nonzero");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  double &operator()(std::size_t r, std::size_t c) {
    return pixels_[c * rows_ + r];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return pixels_[c * rows_ + r];
  }

  std::span<double> column(std::size_t c) {
    return {pixels_.data() + c * rows_, rows_};
  }
  std::span<const double> column(std::size_t c) const {
    return {pixels_.data() + c * rows_, rows_};
  }

  /// All pixels, column-major.
  std::span<double> pixels() noexcept { return pixels_; }
  std::span<const double> pixels() const noexcept { return pixels_; }

  bool same_shape(const Image &other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Image &, const Image &) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> pixels_;
};

inline void require_same_shape(const Image &a, const Image &b,
                               const char *what) {
  if (!a.same_shape(b))
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
}

inline Image clamp01(Image img) {
  for (double &v : img.pixels())
    v = std::clamp(v, 0.0, 1.0);
  return img;
}

/// Sub-image of size patch_rows x patch_cols with top-left corner (r0, c0).
inline Image crop(const Image &img, std::size_t r0, std::size_t c0,
                  std::size_t patch_rows, std::size_t patch_cols) {
  if (r0 + patch_rows > img.rows() || c0 + patch_cols > img.cols())
    throw InvalidArgument("crop: window outside image");
  Image out(patch_rows, patch_cols);
  for (std::size_t c = 0; c < patch_cols; ++c) {
    auto src = img.column(c0 + c).subspan(r0, patch_rows);
    std::copy(src.begin(), src.end(), out.column(c).begin());
  }
  return out;
}

/// Patches on the regular stride grid anchored at the top-left corner,
/// ordered row of patches by row of patches.
inline std::vector<Image> extract_patches(const Image &img,
                                          std::size_t patch_rows,
                                          std::size_t patch_cols,
                                          std::size_t stride) {
  if (stride == 0)
    throw InvalidArgument("extract_patches: stride must be >= 1");
  if (patch_rows == 0 || patch_cols == 0)
    throw InvalidArgument("extract_patches: patch dimensions must be nonzero");
  if (patch_rows > img.rows() || patch_cols > img.cols())
    throw InvalidArgument("extract_patches: patch " +
                          std::to_string(patch_rows) + "x" +
                          std::to_string(patch_cols) +
                          " larger than image " + std::to_string(img.rows()) +
                          "x" + std::to_string(img.cols()));
  const std::size_t down = (img.rows() - patch_rows) / stride + 1;
  const std::size_t across = (img.cols() - patch_cols) / stride + 1;
  std::vector<Image> patches;
  patches.reserve(down * across);
  for (std::size_t i = 0; i < down; ++i)
    for (std::size_t j = 0; j < across; ++j)
      patches.push_back(
          crop(img, i * stride, j * stride, patch_rows, patch_cols));
  return patches;
}

} // namespace destripe

#endif // DESTRIPE_IMAGE_HPP_
