// SPDX-License-Identifier: Apache-2.0
/**
 * @file   tensor.hpp
 * @brief  Dense row-major matrix and the handful of BLAS-like kernels the
 *         recurrent layers need.
 *
 * Reductions use a fixed blocking of eight partial sums combined in a fixed
 * order, so results are reproducible for a given build regardless of how
 * work is spread across threads.
 */

#ifndef DESTRIPE_NEURAL_TENSOR_HPP_
#define DESTRIPE_NEURAL_TENSOR_HPP_

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "../core.hpp"
#include "../image.hpp"
#include "../rng.hpp"

namespace destripe::nn {

template <typename T> class Matrix {
public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T value = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  T operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }
  T *data() noexcept { return data_.data(); }
  const T *data() const noexcept { return data_.data(); }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_shape(const Matrix &o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const Matrix &, const Matrix &) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Fills with U(-bound, bound).
template <typename T> void fill_uniform(Matrix<T> &m, double bound, Rng &rng) {
  for (T &v : m.flat())
    v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) noexcept {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t k = 0; k < 8; ++k)
      acc[k] += a[i + k] * b[i + k];
  for (; i < n; ++i)
    acc[i % 8] += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

/// y += W x
template <typename T>
void gemv_acc(std::span<T> y, const Matrix<T> &w, std::span<const T> x) {
  assert(y.size() == w.rows() && x.size() == w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i)
    y[i] += dot<T>(w.row(i), x);
}

/// y += W^T x
template <typename T>
void gemv_t_acc(std::span<T> y, const Matrix<T> &w, std::span<const T> x) {
  assert(y.size() == w.cols() && x.size() == w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const T xi = x[i];
    if (xi == T(0))
      continue;
    const auto wr = w.row(i);
    for (std::size_t j = 0; j < wr.size(); ++j)
      y[j] += wr[j] * xi;
  }
}

/// G += a b^T
template <typename T>
void outer_acc(Matrix<T> &g, std::span<const T> a, std::span<const T> b) {
  assert(g.rows() == a.size() && g.cols() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T ai = a[i];
    if (ai == T(0))
      continue;
    auto gr = g.row(i);
    for (std::size_t j = 0; j < b.size(); ++j)
      gr[j] += ai * b[j];
  }
}

template <typename T> bool all_finite(std::span<const T> v) noexcept {
  return std::all_of(v.begin(), v.end(),
                     [](T x) { return std::isfinite(x); });
}

/// A named, shaped view of one parameter tensor.
template <typename T> struct TensorRef {
  std::string name;
  Matrix<T> *tensor;
};

template <typename T> struct ConstTensorRef {
  std::string name;
  const Matrix<T> *tensor;
};

/// Image columns as rows of a row-major (width x height) matrix: sequence
/// step c is image column c.
template <typename T> Matrix<T> columns_as_sequence(const Image &img) {
  Matrix<T> seq(img.cols(), img.rows());
  for (std::size_t c = 0; c < img.cols(); ++c) {
    const auto col = img.column(c);
    auto dst = seq.row(c);
    for (std::size_t r = 0; r < img.rows(); ++r)
      dst[r] = static_cast<T>(col[r]);
  }
  return seq;
}

template <typename T> Image sequence_as_image(const Matrix<T> &seq) {
  Image img(seq.cols(), seq.rows());
  for (std::size_t c = 0; c < seq.rows(); ++c) {
    const auto src = seq.row(c);
    auto col = img.column(c);
    for (std::size_t r = 0; r < seq.cols(); ++r)
      col[r] = static_cast<double>(src[r]);
  }
  return img;
}

} // namespace destripe::nn

#endif // DESTRIPE_NEURAL_TENSOR_HPP_
