// SPDX-License-Identifier: Apache-2.0
/**
 * @file   bigru.hpp
 * @brief  Bidirectional GRU layer with an affine output projection.
 *
 * The forward GRU scans steps 0..m-1 and the backward GRU scans m-1..0, both
 * from a zero state. Step i is projected as P [h_fwd(i); h_bwd(i)] + q, so
 * every output depends on the whole sequence.
 */

#ifndef DESTRIPE_NEURAL_BIGRU_HPP_
#define DESTRIPE_NEURAL_BIGRU_HPP_

#include <string>
#include <vector>

#include "gru.hpp"
#include "tensor.hpp"

namespace destripe::nn {

template <typename T> struct BiGruLayerParams {
  GruParams<T> forward;
  GruParams<T> backward;
  Matrix<T> proj;      ///< out x 2H
  Matrix<T> proj_bias; ///< out x 1

  BiGruLayerParams() = default;
  BiGruLayerParams(std::size_t input, std::size_t hidden, std::size_t out)
      : forward(input, hidden), backward(input, hidden), proj(out, 2 * hidden),
        proj_bias(out, 1) {}

  std::size_t input_size() const noexcept { return forward.input_size; }
  std::size_t hidden_size() const noexcept { return forward.hidden_size; }
  std::size_t output_size() const noexcept { return proj.rows(); }

  /// GRU weights as GruParams::init_uniform; the projection uses
  /// U(-1/sqrt(2H), 1/sqrt(2H)) scaled by proj_scale, bias zero.
  void init_uniform(Rng &rng, double proj_scale = 1.0) {
    forward.init_uniform(rng);
    backward.init_uniform(rng);
    const double bound =
        proj_scale / std::sqrt(static_cast<double>(proj.cols()));
    fill_uniform(proj, bound, rng);
    proj_bias.fill(T(0));
  }

  void collect(const std::string &prefix, std::vector<TensorRef<T>> &out) {
    forward.collect(prefix + "fwd.", out);
    backward.collect(prefix + "bwd.", out);
    out.push_back({prefix + "proj.P", &proj});
    out.push_back({prefix + "proj.q", &proj_bias});
  }
  void collect(const std::string &prefix,
               std::vector<ConstTensorRef<T>> &out) const {
    forward.collect(prefix + "fwd.", out);
    backward.collect(prefix + "bwd.", out);
    out.push_back({prefix + "proj.P", &proj});
    out.push_back({prefix + "proj.q", &proj_bias});
  }

  friend bool operator==(const BiGruLayerParams &,
                         const BiGruLayerParams &) = default;
};

template <typename T> using BiGruLayerGrads = BiGruLayerParams<T>;

template <typename T>
BiGruLayerGrads<T> zeros_like(const BiGruLayerParams<T> &p) {
  return BiGruLayerGrads<T>(p.input_size(), p.hidden_size(), p.output_size());
}

template <typename T> struct BiGruCache {
  std::vector<GruCache<T>> fwd; ///< fwd[i] produced h_fwd(i)
  std::vector<GruCache<T>> bwd; ///< bwd[i] produced h_bwd(i)
  Matrix<T> hidden;             ///< m x 2H, row i = [h_fwd(i); h_bwd(i)]
};

/// seq is m x d (row i is step i); returns m x out.
template <typename T>
Matrix<T> bigru_forward(const BiGruLayerParams<T> &layer,
                        const Matrix<T> &seq, BiGruCache<T> &cache) {
  const std::size_t m = seq.rows(), hs = layer.hidden_size();
  if (m == 0)
    throw InvalidArgument("bigru_forward: empty sequence");
  if (seq.cols() != layer.input_size())
    throw InvalidArgument("bigru_forward: step length " +
                          std::to_string(seq.cols()) + " != input size " +
                          std::to_string(layer.input_size()));
  if (layer.backward.hidden_size != hs || layer.proj.cols() != 2 * hs)
    throw InvalidArgument("bigru_forward: inconsistent layer shapes");

  cache.fwd.resize(m);
  cache.bwd.resize(m);
  cache.hidden = Matrix<T>(m, 2 * hs);
  const std::vector<T> zero(hs, T(0));

  std::span<const T> h = zero;
  for (std::size_t i = 0; i < m; ++i) {
    h = gru_cell_forward(layer.forward, seq.row(i), h, cache.fwd[i]);
    std::copy(h.begin(), h.end(), cache.hidden.row(i).begin());
  }
  h = zero;
  for (std::size_t i = m; i-- > 0;) {
    h = gru_cell_forward(layer.backward, seq.row(i), h, cache.bwd[i]);
    std::copy(h.begin(), h.end(), cache.hidden.row(i).begin() + hs);
  }

  Matrix<T> out(m, layer.output_size());
  for (std::size_t i = 0; i < m; ++i) {
    auto o = out.row(i);
    std::copy(layer.proj_bias.flat().begin(), layer.proj_bias.flat().end(),
              o.begin());
    gemv_acc<T>(o, layer.proj, cache.hidden.row(i));
  }
  return out;
}

template <typename T>
Matrix<T> bigru_forward(const BiGruLayerParams<T> &layer,
                        const Matrix<T> &seq) {
  BiGruCache<T> cache;
  return bigru_forward(layer, seq, cache);
}

/// Full backpropagation through both scans. Parameter gradients accumulate
/// into grads; returns d loss / d seq.
template <typename T>
Matrix<T> bigru_backward(const BiGruLayerParams<T> &layer,
                         const BiGruCache<T> &cache, const Matrix<T> &grad_out,
                         BiGruLayerGrads<T> &grads) {
  const std::size_t m = cache.hidden.rows(), hs = layer.hidden_size();
  const std::size_t d = layer.input_size();
  if (grad_out.rows() != m || grad_out.cols() != layer.output_size() ||
      cache.fwd.size() != m || cache.bwd.size() != m)
    throw InvalidArgument("bigru_backward: gradient/cache shape mismatch");

  Matrix<T> grad_hidden(m, 2 * hs);
  for (std::size_t i = 0; i < m; ++i) {
    const auto g = grad_out.row(i);
    outer_acc<T>(grads.proj, g, cache.hidden.row(i));
    for (std::size_t k = 0; k < g.size(); ++k)
      grads.proj_bias.flat()[k] += g[k];
    gemv_t_acc<T>(grad_hidden.row(i), layer.proj, g);
  }

  Matrix<T> grad_seq(m, d);
  std::vector<T> carry(hs, T(0)), dh(hs), dh_prev(hs), dx(d);

  // Forward scan: step i feeds step i+1.
  for (std::size_t i = m; i-- > 0;) {
    const auto gh = grad_hidden.row(i);
    for (std::size_t k = 0; k < hs; ++k)
      dh[k] = gh[k] + carry[k];
    gru_cell_backward<T>(layer.forward, cache.fwd[i], dh, dx, dh_prev,
                         grads.forward);
    auto gs = grad_seq.row(i);
    for (std::size_t k = 0; k < d; ++k)
      gs[k] += dx[k];
    carry = dh_prev;
  }

  // Backward scan: step i feeds step i-1.
  std::fill(carry.begin(), carry.end(), T(0));
  for (std::size_t i = 0; i < m; ++i) {
    const auto gh = grad_hidden.row(i);
    for (std::size_t k = 0; k < hs; ++k)
      dh[k] = gh[hs + k] + carry[k];
    gru_cell_backward<T>(layer.backward, cache.bwd[i], dh, dx, dh_prev,
                         grads.backward);
    auto gs = grad_seq.row(i);
    for (std::size_t k = 0; k < d; ++k)
      gs[k] += dx[k];
    carry = dh_prev;
  }
  return grad_seq;
}

} // namespace destripe::nn

#endif // DESTRIPE_NEURAL_BIGRU_HPP_
