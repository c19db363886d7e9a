// SPDX-License-Identifier: Apache-2.0
/**
 * @file   gradient_check.hpp
 * @brief  Central finite-difference verification of analytic gradients.
 *
 * Relative error of one entry is |a - n| / max(|a|, |n|, abs_floor), where a
 * is the analytic and n the numeric derivative. A check passes iff the
 * largest relative error over every checked entry is below the tolerance.
 */

#ifndef DESTRIPE_NEURAL_GRADIENT_CHECK_HPP_
#define DESTRIPE_NEURAL_GRADIENT_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bigru.hpp"
#include "gru.hpp"
#include "tensor.hpp"

namespace destripe::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double abs_floor = 1e-8;
  std::size_t max_failures = 16;
};

struct GradCheckEntry {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  GradCheckEntry worst;
  std::size_t checked = 0;
  std::vector<GradCheckEntry> failures;

  bool passed() const noexcept { return max_rel_error < tolerance; }
};

/// Perturbs every entry of every tensor in wrt by +-step, re-evaluating
/// loss_fn, and compares against analytic (same layout as wrt).
template <typename T>
GradCheckReport gradient_check(const std::vector<TensorRef<T>> &wrt,
                               const std::vector<ConstTensorRef<T>> &analytic,
                               const std::function<double()> &loss_fn,
                               double tolerance, GradCheckOptions opts = {}) {
  if (wrt.size() != analytic.size())
    throw InvalidArgument("gradient_check: tensor count mismatch");
  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    auto values = wrt[k].tensor->flat();
    const auto grad = analytic[k].tensor->flat();
    if (values.size() != grad.size())
      throw InvalidArgument("gradient_check: shape mismatch on " +
                            wrt[k].name);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = static_cast<T>(saved + opts.step);
      const double plus = loss_fn();
      values[i] = static_cast<T>(saved - opts.step);
      const double minus = loss_fn();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * opts.step);
      const double a = grad[i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      GradCheckEntry entry{wrt[k].name, i, a, numeric, rel};
      ++report.checked;
      if (rel > report.max_rel_error || report.checked == 1) {
        report.max_rel_error = std::max(report.max_rel_error, rel);
        report.worst = entry;
      }
      if (!(rel < tolerance) && report.failures.size() < opts.max_failures)
        report.failures.push_back(entry);
    }
  }
  return report;
}

template <typename T>
void fill_normal(Matrix<T> &m, double stddev, Rng &rng) {
  for (T &v : m.flat())
    v = static_cast<T>(rng.normal(0.0, stddev));
}

template <typename T> void fill_normal(GruParams<T> &p, double stddev, Rng &rng) {
  std::vector<TensorRef<T>> refs;
  p.collect("", refs);
  for (auto &r : refs)
    fill_normal(*r.tensor, stddev, rng);
}

template <typename T>
void fill_normal(BiGruLayerParams<T> &p, double stddev, Rng &rng) {
  std::vector<TensorRef<T>> refs;
  p.collect("", refs);
  for (auto &r : refs)
    fill_normal(*r.tensor, stddev, rng);
}

/// Checks one GRU step under the probe loss sum(w * h_t), including the
/// gradients with respect to x and h_prev.
template <typename T>
GradCheckReport check_gru_cell(GruParams<T> &params, Matrix<T> x,
                               Matrix<T> h_prev, const Matrix<T> &probe,
                               double tolerance, GradCheckOptions opts = {}) {
  GruCache<T> cache;
  auto fwd = [&] {
    const auto h = gru_cell_forward<T>(params, x.flat(), h_prev.flat(), cache);
    return static_cast<double>(dot<T>(h, probe.flat()));
  };
  fwd();
  GruGrads<T> grads(params.input_size, params.hidden_size);
  Matrix<T> gx(x.rows(), x.cols()), gh(h_prev.rows(), h_prev.cols());
  gru_cell_backward<T>(params, cache, probe.flat(), gx.flat(), gh.flat(),
                       grads);

  std::vector<TensorRef<T>> wrt;
  std::vector<ConstTensorRef<T>> analytic;
  params.collect("", wrt);
  grads.collect("", analytic);
  wrt.push_back({"x", &x});
  analytic.push_back({"x", &gx});
  wrt.push_back({"h_prev", &h_prev});
  analytic.push_back({"h_prev", &gh});
  return gradient_check<T>(wrt, analytic, fwd, tolerance, opts);
}

/// Checks a bidirectional layer under the probe loss sum(W .* out),
/// including the gradient with respect to the input sequence.
template <typename T>
GradCheckReport check_bigru_layer(BiGruLayerParams<T> &layer, Matrix<T> seq,
                                  const Matrix<T> &probe, double tolerance,
                                  GradCheckOptions opts = {}) {
  BiGruCache<T> cache;
  auto fwd = [&] {
    const auto out = bigru_forward(layer, seq, cache);
    return static_cast<double>(dot<T>(out.flat(), probe.flat()));
  };
  fwd();
  auto grads = zeros_like(layer);
  Matrix<T> gseq = bigru_backward(layer, cache, probe, grads);

  std::vector<TensorRef<T>> wrt;
  std::vector<ConstTensorRef<T>> analytic;
  layer.collect("", wrt);
  grads.collect("", analytic);
  wrt.push_back({"seq", &seq});
  analytic.push_back({"seq", &gseq});
  return gradient_check<T>(wrt, analytic, fwd, tolerance, opts);
}

} // namespace destripe::nn

#endif // DESTRIPE_NEURAL_GRADIENT_CHECK_HPP_
