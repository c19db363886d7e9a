// SPDX-License-Identifier: Apache-2.0
/**
 * @file   gru.hpp
 * @brief  Gated recurrent unit cell: forward step and exact reverse mode.
 *
 *   z  = sigmoid(W_z x + U_z h + b_z)
 *   r  = sigmoid(W_r x + U_r h + b_r)
 *   h~ = tanh(W_h x + U_h (r * h) + b_h)
 *   h' = (1 - z) * h + z * h~
 */

#ifndef DESTRIPE_NEURAL_GRU_HPP_
#define DESTRIPE_NEURAL_GRU_HPP_

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace destripe::nn {

template <typename T> struct GruParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Matrix<T> w_z, u_z, b_z;
  Matrix<T> w_r, u_r, b_r;
  Matrix<T> w_h, u_h, b_h;

  GruParams() = default;
  GruParams(std::size_t d, std::size_t h)
      : input_size(d), hidden_size(h), w_z(h, d), u_z(h, h), b_z(h, 1),
        w_r(h, d), u_r(h, h), b_r(h, 1), w_h(h, d), u_h(h, h), b_h(h, 1) {}

  /// Weights U(-1/sqrt(H), 1/sqrt(H)), biases zero.
  void init_uniform(Rng &rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    for (auto *w : {&w_z, &u_z, &w_r, &u_r, &w_h, &u_h})
      fill_uniform(*w, bound, rng);
    for (auto *b : {&b_z, &b_r, &b_h})
      b->fill(T(0));
  }

  template <typename Ref, typename Self>
  static void collect_impl(Self &self, const std::string &prefix,
                           std::vector<Ref> &out) {
    out.push_back({prefix + "W_z", &self.w_z});
    out.push_back({prefix + "U_z", &self.u_z});
    out.push_back({prefix + "b_z", &self.b_z});
    out.push_back({prefix + "W_r", &self.w_r});
    out.push_back({prefix + "U_r", &self.u_r});
    out.push_back({prefix + "b_r", &self.b_r});
    out.push_back({prefix + "W_h", &self.w_h});
    out.push_back({prefix + "U_h", &self.u_h});
    out.push_back({prefix + "b_h", &self.b_h});
  }
  void collect(const std::string &prefix, std::vector<TensorRef<T>> &out) {
    collect_impl<TensorRef<T>>(*this, prefix, out);
  }
  void collect(const std::string &prefix,
               std::vector<ConstTensorRef<T>> &out) const {
    collect_impl<ConstTensorRef<T>>(*this, prefix, out);
  }

  friend bool operator==(const GruParams &, const GruParams &) = default;
};

/// Gradients share the parameter layout.
template <typename T> using GruGrads = GruParams<T>;

/// Intermediates of one forward step.
template <typename T> struct GruCache {
  const GruParams<T> *params = nullptr;
  std::vector<T> x, h_prev, z, r, cand, rh, h;
};

template <typename T> inline T sigmoid(T a) {
  return T(1) / (T(1) + std::exp(-a));
}

/// One step. Writes h_t into cache.h and returns a view of it.
template <typename T>
std::span<const T> gru_cell_forward(const GruParams<T> &p,
                                    std::span<const T> x,
                                    std::span<const T> h_prev,
                                    GruCache<T> &cache) {
  const std::size_t d = p.input_size, hs = p.hidden_size;
  if (x.size() != d || h_prev.size() != hs)
    throw InvalidArgument("gru_cell_forward: expected input " +
                          std::to_string(d) + " and state " +
                          std::to_string(hs) + ", got " +
                          std::to_string(x.size()) + " and " +
                          std::to_string(h_prev.size()));
  if (!all_finite(x) || !all_finite(h_prev))
    throw NumericError("gru_cell_forward: non-finite input");

  cache.params = &p;
  cache.x.assign(x.begin(), x.end());
  cache.h_prev.assign(h_prev.begin(), h_prev.end());
  cache.z.assign(p.b_z.flat().begin(), p.b_z.flat().end());
  cache.r.assign(p.b_r.flat().begin(), p.b_r.flat().end());
  cache.cand.assign(p.b_h.flat().begin(), p.b_h.flat().end());
  cache.rh.resize(hs);
  cache.h.resize(hs);

  gemv_acc<T>(cache.z, p.w_z, x);
  gemv_acc<T>(cache.z, p.u_z, h_prev);
  gemv_acc<T>(cache.r, p.w_r, x);
  gemv_acc<T>(cache.r, p.u_r, h_prev);
  for (std::size_t i = 0; i < hs; ++i) {
    cache.z[i] = sigmoid(cache.z[i]);
    cache.r[i] = sigmoid(cache.r[i]);
    cache.rh[i] = cache.r[i] * h_prev[i];
  }
  gemv_acc<T>(cache.cand, p.w_h, x);
  gemv_acc<T>(cache.cand, p.u_h, std::span<const T>(cache.rh));
  for (std::size_t i = 0; i < hs; ++i) {
    cache.cand[i] = std::tanh(cache.cand[i]);
    cache.h[i] = (T(1) - cache.z[i]) * h_prev[i] + cache.z[i] * cache.cand[i];
  }
  return cache.h;
}

/// Reverse mode of one step. Parameter gradients are accumulated into
/// grads; grad_x and grad_h_prev are overwritten.
template <typename T>
void gru_cell_backward(const GruParams<T> &p, const GruCache<T> &cache,
                       std::span<const T> grad_h, std::span<T> grad_x,
                       std::span<T> grad_h_prev, GruGrads<T> &grads) {
  const std::size_t d = p.input_size, hs = p.hidden_size;
  if (cache.params != &p || cache.x.size() != d || cache.h.size() != hs)
    throw InvalidArgument("gru_cell_backward: cache does not belong to these "
                          "parameters");
  if (grad_h.size() != hs || grad_x.size() != d || grad_h_prev.size() != hs ||
      grads.input_size != d || grads.hidden_size != hs)
    throw InvalidArgument("gru_cell_backward: gradient shape mismatch");

  std::vector<T> da_z(hs), da_r(hs), da_h(hs), d_rh(hs, T(0));
  for (std::size_t i = 0; i < hs; ++i) {
    const T z = cache.z[i], c = cache.cand[i];
    grad_h_prev[i] = grad_h[i] * (T(1) - z);
    da_z[i] = grad_h[i] * (c - cache.h_prev[i]) * z * (T(1) - z);
    da_h[i] = grad_h[i] * z * (T(1) - c * c);
  }
  gemv_t_acc<T>(d_rh, p.u_h, std::span<const T>(da_h));
  for (std::size_t i = 0; i < hs; ++i) {
    const T r = cache.r[i];
    grad_h_prev[i] += d_rh[i] * r;
    da_r[i] = d_rh[i] * cache.h_prev[i] * r * (T(1) - r);
  }

  const std::span<const T> x(cache.x), hp(cache.h_prev), rh(cache.rh);
  const std::span<const T> gz(da_z), gr(da_r), gh(da_h);
  outer_acc<T>(grads.w_z, gz, x);
  outer_acc<T>(grads.u_z, gz, hp);
  outer_acc<T>(grads.w_r, gr, x);
  outer_acc<T>(grads.u_r, gr, hp);
  outer_acc<T>(grads.w_h, gh, x);
  outer_acc<T>(grads.u_h, gh, rh);
  for (std::size_t i = 0; i < hs; ++i) {
    grads.b_z.flat()[i] += da_z[i];
    grads.b_r.flat()[i] += da_r[i];
    grads.b_h.flat()[i] += da_h[i];
  }

  gemv_t_acc<T>(grad_h_prev, p.u_z, gz);
  gemv_t_acc<T>(grad_h_prev, p.u_r, gr);
  std::fill(grad_x.begin(), grad_x.end(), T(0));
  gemv_t_acc<T>(grad_x, p.w_z, gz);
  gemv_t_acc<T>(grad_x, p.w_r, gr);
  gemv_t_acc<T>(grad_x, p.w_h, gh);
}

} // namespace destripe::nn

#endif // DESTRIPE_NEURAL_GRU_HPP_
