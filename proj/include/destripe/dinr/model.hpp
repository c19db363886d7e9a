// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.hpp
 * @brief  Deep-unfolded iterative noise removal with one BiGRU per iteration.
 *
 * Starting from X(0) = Y, iteration k feeds the m columns of X(k-1) (each a
 * length-n vector) to BiGRU layer k, reads the layer output as the total
 * noise estimate, and sets X(k) = X(0) - f_k(X(k-1)). The subtraction is
 * always from the original observation.
 *
 * Internally an n x m image is held as an m x n row-major matrix so that
 * image column c is sequence step c.
 */

#ifndef DESTRIPE_DINR_MODEL_HPP_
#define DESTRIPE_DINR_MODEL_HPP_

#include <string>
#include <utility>
#include <vector>

#include "../image.hpp"
#include "../neural/bigru.hpp"
#include "../neural/gradient_check.hpp"
#include "../neural/loss.hpp"
#include "../neural/tensor.hpp"

namespace destripe::dinr {

using nn::Matrix;

enum class OutputMode {
  per_pixel,  ///< projection 2H -> n, one value per pixel of the column
  per_column, ///< projection 2H -> 1, broadcast down the column
};

inline OutputMode parse_output_mode(const std::string &s) {
  if (s == "per-pixel")
    return OutputMode::per_pixel;
  if (s == "per-column")
    return OutputMode::per_column;
  throw InvalidArgument("unknown output mode '" + s +
                        "' (expected 'per-pixel' or 'per-column')");
}

inline const char *to_string(OutputMode mode) {
  return mode == OutputMode::per_pixel ? "per-pixel" : "per-column";
}

template <typename T> struct UnfoldedModel {
  std::size_t rows = 0;   ///< column length n
  std::size_t hidden = 0; ///< GRU state size H
  OutputMode output_mode = OutputMode::per_pixel;
  std::vector<nn::BiGruLayerParams<T>> layers;

  std::size_t num_layers() const noexcept { return layers.size(); }
  std::size_t output_size() const noexcept {
    return output_mode == OutputMode::per_pixel ? rows : 1;
  }

  void collect(std::vector<nn::TensorRef<T>> &out) {
    for (std::size_t k = 0; k < layers.size(); ++k)
      layers[k].collect("layer" + std::to_string(k) + ".", out);
  }
  void collect(std::vector<nn::ConstTensorRef<T>> &out) const {
    for (std::size_t k = 0; k < layers.size(); ++k)
      layers[k].collect("layer" + std::to_string(k) + ".", out);
  }
  std::vector<nn::TensorRef<T>> parameters() {
    std::vector<nn::TensorRef<T>> out;
    collect(out);
    return out;
  }
  std::vector<nn::ConstTensorRef<T>> parameters() const {
    std::vector<nn::ConstTensorRef<T>> out;
    collect(out);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto &p : parameters())
      n += p.tensor->size();
    return n;
  }

  friend bool operator==(const UnfoldedModel &, const UnfoldedModel &) = default;
};

/// All-zero model: exactly the identity map.
template <typename T>
UnfoldedModel<T> make_model(std::size_t num_layers, std::size_t rows,
                            std::size_t hidden,
                            OutputMode mode = OutputMode::per_pixel) {
  if (num_layers == 0 || rows == 0 || hidden == 0)
    throw InvalidArgument("make_model: layers, rows and hidden must be >= 1");
  UnfoldedModel<T> model;
  model.rows = rows;
  model.hidden = hidden;
  model.output_mode = mode;
  const std::size_t out = mode == OutputMode::per_pixel ? rows : 1;
  model.layers.assign(num_layers, nn::BiGruLayerParams<T>(rows, hidden, out));
  return model;
}

/// Randomly initialised model; layer k draws from derive_seed(seed, k).
template <typename T>
UnfoldedModel<T> init_model(std::size_t num_layers, std::size_t rows,
                            std::size_t hidden, OutputMode mode,
                            std::uint64_t seed, double proj_scale = 1.0) {
  auto model = make_model<T>(num_layers, rows, hidden, mode);
  for (std::size_t k = 0; k < num_layers; ++k) {
    Rng rng(derive_seed(seed, k));
    model.layers[k].init_uniform(rng, proj_scale);
  }
  return model;
}

template <typename T> struct IterateTrace {
  std::vector<Matrix<T>> iterates; ///< X(0) .. X(T), each m x n
  std::vector<Matrix<T>> noise;    ///< S(1) .. S(T), S(k) = X(0) - X(k)

  Image iterate(std::size_t k) const {
    return nn::sequence_as_image(iterates.at(k));
  }
  Image noise_estimate(std::size_t k) const {
    return nn::sequence_as_image(noise.at(k - 1));
  }
};

/// Everything the backward pass needs.
template <typename T> struct ForwardState {
  std::vector<Matrix<T>> iterates;
  std::vector<nn::BiGruCache<T>> caches;
};

namespace detail {

/// Layer output (m x out) widened to an m x n noise matrix.
template <typename T>
Matrix<T> expand_noise(const Matrix<T> &out, std::size_t rows) {
  if (out.cols() == rows)
    return out;
  Matrix<T> full(out.rows(), rows);
  for (std::size_t c = 0; c < out.rows(); ++c)
    std::fill(full.row(c).begin(), full.row(c).end(), out(c, 0));
  return full;
}

/// Adjoint of expand_noise.
template <typename T>
Matrix<T> reduce_noise_grad(const Matrix<T> &grad, std::size_t out_cols) {
  if (grad.cols() == out_cols)
    return grad;
  Matrix<T> g(grad.rows(), 1);
  for (std::size_t c = 0; c < grad.rows(); ++c) {
    T sum = T(0);
    for (T v : grad.row(c))
      sum += v;
    g(c, 0) = sum;
  }
  return g;
}

template <typename T>
void check_input(const UnfoldedModel<T> &model, const Matrix<T> &y) {
  if (y.cols() != model.rows)
    throw InvalidArgument("dinr: image has " + std::to_string(y.cols()) +
                          " rows, model expects " + std::to_string(model.rows));
}

} // namespace detail

/// Runs all iterations on y (m x n sequence layout), keeping caches.
template <typename T>
ForwardState<T> forward_state(const UnfoldedModel<T> &model,
                              const Matrix<T> &y) {
  detail::check_input(model, y);
  ForwardState<T> st;
  st.iterates.reserve(model.num_layers() + 1);
  st.caches.resize(model.num_layers());
  st.iterates.push_back(y);
  for (std::size_t k = 0; k < model.num_layers(); ++k) {
    const auto out =
        nn::bigru_forward(model.layers[k], st.iterates.back(), st.caches[k]);
    const auto est = detail::expand_noise(out, model.rows);
    Matrix<T> next = y;
    auto nf = next.flat();
    const auto ef = est.flat();
    for (std::size_t i = 0; i < nf.size(); ++i)
      nf[i] -= ef[i];
    st.iterates.push_back(std::move(next));
  }
  return st;
}

template <typename T>
IterateTrace<T> forward(const UnfoldedModel<T> &model, const Image &y) {
  auto st = forward_state(model, nn::columns_as_sequence<T>(y));
  IterateTrace<T> trace;
  const auto &x0 = st.iterates.front();
  for (std::size_t k = 1; k < st.iterates.size(); ++k) {
    Matrix<T> s = x0;
    auto sf = s.flat();
    const auto xk = st.iterates[k].flat();
    for (std::size_t i = 0; i < sf.size(); ++i)
      sf[i] -= xk[i];
    trace.noise.push_back(std::move(s));
  }
  trace.iterates = std::move(st.iterates);
  return trace;
}

/// clamp(X(T), 0, 1).
template <typename T>
Image denoise(const UnfoldedModel<T> &model, const Image &y) {
  auto st = forward_state(model, nn::columns_as_sequence<T>(y));
  return clamp01(nn::sequence_as_image(st.iterates.back()));
}

/// Backpropagates grad_iterates through the unrolled iterations.
/// grad_iterates[k] is d loss / d X(k) from the loss itself (only the last
/// entry is nonzero unless auxiliary per-iterate losses are used; entries may
/// be empty matrices). Parameter gradients accumulate into grads; returns
/// d loss / d X(0), which collects one term from every iteration's
/// subtraction plus the path through layer 1's input.
template <typename T>
Matrix<T> backward(const UnfoldedModel<T> &model, const ForwardState<T> &st,
                   const std::vector<Matrix<T>> &grad_iterates,
                   UnfoldedModel<T> &grads) {
  const std::size_t layers = model.num_layers();
  if (grad_iterates.size() != layers + 1 || st.caches.size() != layers ||
      grads.num_layers() != layers)
    throw InvalidArgument("dinr::backward: inconsistent state");
  const auto &x0 = st.iterates.front();
  Matrix<T> grad_x0(x0.rows(), x0.cols());
  Matrix<T> carry(x0.rows(), x0.cols());

  auto add = [](Matrix<T> &dst, const Matrix<T> &src) {
    if (src.size() == 0)
      return;
    auto d = dst.flat();
    const auto s = src.flat();
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] += s[i];
  };

  add(carry, grad_iterates[layers]);
  for (std::size_t k = layers; k-- > 0;) {
    // carry = d loss / d X(k+1); X(k+1) = X(0) - f(X(k)).
    add(grad_x0, carry);
    Matrix<T> grad_est = carry;
    for (T &v : grad_est.flat())
      v = -v;
    const auto grad_out =
        detail::reduce_noise_grad(grad_est, model.layers[k].output_size());
    carry = nn::bigru_backward(model.layers[k], st.caches[k], grad_out,
                               grads.layers[k]);
    if (k > 0)
      add(carry, grad_iterates[k]);
  }
  add(carry, grad_iterates[0]);
  add(grad_x0, carry);
  return grad_x0;
}

template <typename T> UnfoldedModel<T> zeros_like(const UnfoldedModel<T> &m) {
  return make_model<T>(m.num_layers(), m.rows, m.hidden, m.output_mode);
}

struct LossOptions {
  double aux_weight = 0.0; ///< weight of mean MSE of X(1)..X(T-1)
};

/// Training loss for one (noisy, clean) pair; accumulates gradients.
template <typename T>
double loss_and_grad(const UnfoldedModel<T> &model, const Matrix<T> &noisy,
                     const Matrix<T> &clean, UnfoldedModel<T> &grads,
                     LossOptions opts = {}, Matrix<T> *grad_input = nullptr) {
  const auto st = forward_state(model, noisy);
  const std::size_t layers = model.num_layers();
  std::vector<Matrix<T>> grad_iterates(layers + 1);
  auto main = nn::mse_loss(st.iterates.back(), clean);
  double loss = main.loss;
  grad_iterates[layers] = std::move(main.grad);
  if (opts.aux_weight > 0.0 && layers > 1) {
    const double w = opts.aux_weight / static_cast<double>(layers - 1);
    for (std::size_t k = 1; k < layers; ++k) {
      auto aux = nn::mse_loss(st.iterates[k], clean);
      loss += w * aux.loss;
      for (T &g : aux.grad.flat())
        g = static_cast<T>(g * w);
      grad_iterates[k] = std::move(aux.grad);
    }
  }
  auto gx = backward(model, st, grad_iterates, grads);
  if (grad_input)
    *grad_input = std::move(gx);
  return loss;
}

/// Forward-only value of loss_and_grad.
template <typename T>
double evaluate_loss(const UnfoldedModel<T> &model, const Matrix<T> &noisy,
                     const Matrix<T> &clean, LossOptions opts = {}) {
  const auto st = forward_state(model, noisy);
  const std::size_t layers = model.num_layers();
  double loss = nn::mse_loss(st.iterates.back(), clean).loss;
  if (opts.aux_weight > 0.0 && layers > 1) {
    const double w = opts.aux_weight / static_cast<double>(layers - 1);
    for (std::size_t k = 1; k < layers; ++k)
      loss += w * nn::mse_loss(st.iterates[k], clean).loss;
  }
  return loss;
}

/// Finite-difference check of the full unrolled model under the training
/// loss, including the gradient with respect to the noisy input.
template <typename T>
nn::GradCheckReport check_unfolded_model(UnfoldedModel<T> &model,
                                         Matrix<T> noisy,
                                         const Matrix<T> &clean,
                                         double tolerance,
                                         nn::GradCheckOptions opts = {},
                                         LossOptions loss_opts = {}) {
  auto grads = zeros_like(model);
  Matrix<T> grad_input;
  loss_and_grad(model, noisy, clean, grads, loss_opts, &grad_input);
  auto loss_fn = [&] { return evaluate_loss(model, noisy, clean, loss_opts); };
  std::vector<nn::TensorRef<T>> wrt = model.parameters();
  std::vector<nn::ConstTensorRef<T>> analytic = std::as_const(grads).parameters();
  wrt.push_back({"input", &noisy});
  analytic.push_back({"input", &grad_input});
  return nn::gradient_check<T>(wrt, analytic, loss_fn, tolerance, opts);
}

} // namespace destripe::dinr

#endif // DESTRIPE_DINR_MODEL_HPP_
