// SPDX-License-Identifier: Apache-2.0
/**
 * @file   adam.hpp
 * @brief  Bias-corrected Adam over a list of parameter tensors.
 */

#ifndef DESTRIPE_NEURAL_ADAM_HPP_
#define DESTRIPE_NEURAL_ADAM_HPP_

#include <cmath>
#include <vector>

#include "tensor.hpp"

namespace destripe::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T> struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
};

/// Moment buffers shaped like params, all zero.
template <typename T>
AdamState<T> make_adam_state(const std::vector<TensorRef<T>> &params,
                             AdamConfig config = {}) {
  AdamState<T> state;
  state.config = config;
  for (const auto &p : params) {
    state.first.emplace_back(p.tensor->size(), 0.0);
    state.second.emplace_back(p.tensor->size(), 0.0);
  }
  return state;
}

/// Sqrt of the sum of squares over every gradient entry.
template <typename T>
double global_norm(const std::vector<ConstTensorRef<T>> &grads) {
  double sum = 0.0;
  for (const auto &g : grads)
    for (T v : g.tensor->flat())
      sum += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(sum);
}

/// One update. Returns false, leaving params and state untouched, if any
/// gradient is non-finite.
template <typename T>
bool adam_step(AdamState<T> &state, const std::vector<TensorRef<T>> &params,
               const std::vector<ConstTensorRef<T>> &grads) {
  if (params.size() != grads.size() || params.size() != state.first.size())
    throw InvalidArgument("adam_step: parameter/gradient/state count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].tensor->same_shape(*grads[k].tensor) ||
        state.first[k].size() != params[k].tensor->size())
      throw InvalidArgument("adam_step: shape mismatch on " + params[k].name);
    if (!all_finite(grads[k].tensor->flat()))
      return false;
  }

  const auto &cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(cfg.beta1, t);
  const double correct2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k].tensor->flat();
    const auto g = grads[k].tensor->flat();
    auto &m = state.first[k];
    auto &v = state.second[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      theta[i] = static_cast<T>(theta[i] - cfg.learning_rate * m_hat /
                                               (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
  return true;
}

} // namespace destripe::nn

#endif // DESTRIPE_NEURAL_ADAM_HPP_
