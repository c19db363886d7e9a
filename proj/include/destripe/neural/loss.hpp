// SPDX-License-Identifier: Apache-2.0
/**
 * @file   loss.hpp
 * @brief  Mean squared error in [0, 1] pixel units, with its gradient.
 */

#ifndef DESTRIPE_NEURAL_LOSS_HPP_
#define DESTRIPE_NEURAL_LOSS_HPP_

#include "../image.hpp"
#include "tensor.hpp"

namespace destripe::nn {

template <typename T> struct LossResult {
  double loss = 0.0;
  Matrix<T> grad;
};

/// loss = mean((pred - target)^2), grad = 2 (pred - target) / N.
template <typename T>
LossResult<T> mse_loss(const Matrix<T> &pred, const Matrix<T> &target) {
  if (!pred.same_shape(target))
    throw InvalidArgument("mse_loss: shape mismatch");
  LossResult<T> out{0.0, Matrix<T>(pred.rows(), pred.cols())};
  const auto p = pred.flat(), t = target.flat();
  auto g = out.grad.flat();
  const double inv_n = 1.0 / static_cast<double>(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    sum += d * d;
    g[i] = static_cast<T>(2.0 * d * inv_n);
  }
  out.loss = sum * inv_n;
  return out;
}

struct ImageLoss {
  double loss = 0.0;
  Image grad;
};

inline ImageLoss mse_loss(const Image &pred, const Image &target) {
  require_same_shape(pred, target, "mse_loss");
  ImageLoss out{0.0, Image(pred.rows(), pred.cols())};
  const auto p = pred.pixels(), t = target.pixels();
  auto g = out.grad.pixels();
  const double inv_n = 1.0 / static_cast<double>(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    sum += d * d;
    g[i] = 2.0 * d * inv_n;
  }
  out.loss = sum * inv_n;
  return out;
}

} // namespace destripe::nn

#endif // DESTRIPE_NEURAL_LOSS_HPP_
