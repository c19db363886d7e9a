// SPDX-License-Identifier: Apache-2.0
/**
 * @file   train.hpp
 * @brief  End-to-end training of the unfolded model, and layer-count
 *         ablation.
 *
 * Each step draws a batch of clean patches, corrupts every patch with its own
 * stripe field, runs the unrolled forward pass, and backpropagates the MSE
 * between X(T) and the clean patch through every iteration and every column
 * step. Per-sample gradients are computed independently (in parallel when
 * threads > 1) and summed in sample order, so a run is bit-reproducible for
 * any thread count.
 *
 * Random streams, all derived from config.seed:
 *   derive_seed(seed, 1)                      parameter init
 *   derive_seed(derive_seed(seed, 2), epoch)  epoch shuffle
 *   derive_seed(derive_seed(seed, 3), i)      stripe field of the i-th
 *                                             training sample drawn
 *   derive_seed(seed, 4)                      validation corruption
 */

#ifndef DESTRIPE_DINR_TRAIN_HPP_
#define DESTRIPE_DINR_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "../metrics.hpp"
#include "../neural/adam.hpp"
#include "../noise.hpp"
#include "../parallel.hpp"
#include "../rng.hpp"
#include "model.hpp"

namespace destripe::dinr {

struct TrainConfig {
  double beta_min = 0.0;
  double beta_max = 0.25;
  NoiseMode noise_mode = NoiseMode::sampled_sigma;
  std::size_t epochs = 100;
  std::size_t batch_size = 50;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double grad_clip = 0.0; ///< global-norm clip, 0 disables
  std::size_t patch_rows = 64;
  std::size_t patch_cols = 64;
  std::size_t stride = 64;
  std::uint64_t seed = 0;
  std::size_t layers = 15;
  std::size_t hidden = 32;
  OutputMode output_mode = OutputMode::per_pixel;
  double init_proj_scale = 1.0;
  double aux_weight = 0.0;
  double val_beta = 0.15;
  NoiseMode val_mode = NoiseMode::fixed_sigma;
  double split_fraction = 0.85;
  std::size_t threads = 1;

  /// T = 3, H = 32, 30 epochs on 64 x 64 patches.
  static TrainConfig desk_scale() {
    TrainConfig c;
    c.layers = 3;
    c.hidden = 32;
    c.epochs = 30;
    c.learning_rate = 2e-3;
    c.grad_clip = 1.0;
    return c;
  }

  void validate() const {
    if (epochs < 1)
      throw InvalidArgument("epochs must be >= 1");
    if (batch_size < 1)
      throw InvalidArgument("batch_size must be >= 1");
    if (!(beta_min >= 0.0) || !(beta_max >= beta_min))
      throw InvalidArgument("need beta_max >= beta_min >= 0");
    if (layers < 1 || hidden < 1)
      throw InvalidArgument("layers and hidden must be >= 1");
    if (patch_rows < 1 || patch_cols < 1 || stride < 1)
      throw InvalidArgument("patch size and stride must be >= 1");
    if (!(learning_rate >= 0.0))
      throw InvalidArgument("learning_rate must be >= 0");
  }
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_psnr = std::numeric_limits<double>::quiet_NaN(); ///< NaN without a validation set
  double val_ssim = std::numeric_limits<double>::quiet_NaN();
};

inline void write_train_log_csv(std::ostream &os,
                                const std::vector<EpochLog> &log) {
  os << "epoch,train_loss,val_psnr,val_ssim\n";
  char buf[160];
  for (const auto &e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.6f,%.6f\n", e.epoch,
                  e.train_loss, e.val_psnr, e.val_ssim);
    os << buf;
  }
}

struct TrainResult {
  UnfoldedModel<float> model;
  std::vector<EpochLog> log;
  double noisy_val_psnr = 0.0; ///< corrupted validation input vs clean
  double noisy_val_ssim = 0.0;
};

/// Non-finite loss or gradient. Carries the parameters from the last step
/// that completed cleanly.
class DivergenceError : public NumericError {
public:
  DivergenceError(const std::string &what, UnfoldedModel<float> last_good,
                  std::vector<EpochLog> log)
      : NumericError(what), last_good_(std::move(last_good)),
        log_(std::move(log)) {}
  const UnfoldedModel<float> &last_good() const noexcept { return last_good_; }
  const std::vector<EpochLog> &log() const noexcept { return log_; }

private:
  UnfoldedModel<float> last_good_;
  std::vector<EpochLog> log_;
};

namespace detail {

/// Stripe field for one training sample: fixed mode uses sigma = beta_max,
/// sampled mode draws sigma ~ U(beta_min, beta_max).
inline StripeField training_field(const TrainConfig &cfg, std::size_t width,
                                  std::uint64_t seed) {
  if (cfg.noise_mode == NoiseMode::fixed_sigma || cfg.beta_min == 0.0)
    return sample_stripe_field(width, cfg.beta_max, cfg.noise_mode, seed);
  Rng rng(seed);
  StripeField field;
  field.beta = cfg.beta_max;
  field.mode = cfg.noise_mode;
  field.seed = seed;
  field.sigma = rng.uniform(cfg.beta_min, cfg.beta_max);
  field.offsets.resize(width);
  for (double &s : field.offsets)
    s = field.sigma * rng.normal();
  return field;
}

template <typename T>
Matrix<T> corrupt_sequence(const Matrix<T> &clean, const StripeField &field) {
  Matrix<T> noisy = clean;
  for (std::size_t c = 0; c < noisy.rows(); ++c) {
    const double s = field.offsets[c];
    for (T &v : noisy.row(c))
      v = static_cast<T>(std::clamp(static_cast<double>(v) + s, 0.0, 1.0));
  }
  return noisy;
}

template <typename T>
void accumulate(UnfoldedModel<T> &dst, const UnfoldedModel<T> &src,
                double scale) {
  auto d = dst.parameters();
  const auto s = src.parameters();
  for (std::size_t k = 0; k < d.size(); ++k) {
    auto df = d[k].tensor->flat();
    const auto sf = s[k].tensor->flat();
    for (std::size_t i = 0; i < df.size(); ++i)
      df[i] += static_cast<T>(scale * sf[i]);
  }
}

template <typename T> void zero(UnfoldedModel<T> &m) {
  for (auto &p : m.parameters())
    p.tensor->fill(T(0));
}

} // namespace detail

struct Evaluation {
  double psnr = 0.0; ///< mean over non-identical pairs
  double ssim = 0.0;
  double noisy_psnr = 0.0;
  double noisy_ssim = 0.0;
};

/// Mean PSNR/SSIM of denoise(model, noisy[i]) against clean[i].
template <typename T>
Evaluation evaluate(const UnfoldedModel<T> &model,
                    const std::vector<Image> &clean,
                    const std::vector<Image> &noisy, std::size_t threads = 1) {
  if (clean.size() != noisy.size() || clean.empty())
    throw InvalidArgument("evaluate: need equally many nonempty clean/noisy");
  std::vector<double> p(clean.size()), s(clean.size()), np(clean.size()),
      ns(clean.size());
  parallel_for(clean.size(), threads, [&](std::size_t i) {
    const Image out = denoise(model, noisy[i]);
    const auto pd = psnr(out, clean[i]);
    const auto pn = psnr(noisy[i], clean[i]);
    p[i] = pd.identical() ? std::nan("") : pd.db;
    np[i] = pn.identical() ? std::nan("") : pn.db;
    s[i] = ssim(out, clean[i]);
    ns[i] = ssim(noisy[i], clean[i]);
  });
  auto mean_finite = [](const std::vector<double> &v) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double x : v)
      if (!std::isnan(x)) {
        sum += x;
        ++n;
      }
    return n ? sum / static_cast<double>(n)
             : std::numeric_limits<double>::infinity();
  };
  auto mean = [](const std::vector<double> &v) {
    return std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
  };
  return {mean_finite(p), mean(s), mean_finite(np), mean(ns)};
}

using EpochCallback = std::function<void(const EpochLog &)>;

inline TrainResult train(const TrainConfig &cfg,
                         const std::vector<Image> &train_set,
                         const std::vector<Image> &val_set,
                         const EpochCallback &on_epoch = {}) {
  using T = float;
  cfg.validate();
  if (train_set.empty())
    throw InvalidArgument("train: empty training set");
  const std::size_t rows = train_set.front().rows();
  for (const auto &img : train_set)
    if (img.rows() != rows)
      throw InvalidArgument("train: all training images need the same height");

  std::vector<Matrix<T>> clean;
  clean.reserve(train_set.size());
  for (const auto &img : train_set)
    clean.push_back(nn::columns_as_sequence<T>(img));

  TrainResult result;
  result.model = init_model<T>(cfg.layers, rows, cfg.hidden, cfg.output_mode,
                               derive_seed(cfg.seed, 1), cfg.init_proj_scale);
  auto &model = result.model;
  auto params = model.parameters();
  auto adam = nn::make_adam_state<T>(
      params, {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
               cfg.adam_epsilon});

  std::vector<Image> val_noisy;
  if (!val_set.empty()) {
    for (const auto &c : corrupt_dataset(val_set, cfg.val_beta, cfg.val_mode,
                                         derive_seed(cfg.seed, 4)))
      val_noisy.push_back(c.noisy);
    const auto base = evaluate(model, val_set, val_noisy, 1);
    result.noisy_val_psnr = base.noisy_psnr;
    result.noisy_val_ssim = base.noisy_ssim;
  }

  const std::size_t batch = std::min(cfg.batch_size, clean.size());
  std::vector<UnfoldedModel<T>> sample_grads(batch, zeros_like(model));
  std::vector<double> sample_loss(batch);
  auto total = zeros_like(model);
  const auto total_params = std::as_const(total).parameters();
  const std::uint64_t shuffle_root = derive_seed(cfg.seed, 2);
  const std::uint64_t noise_root = derive_seed(cfg.seed, 3);
  std::vector<std::size_t> order(clean.size());
  UnfoldedModel<T> last_good = model;
  std::uint64_t drawn = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(shuffle_root, epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t epoch_samples = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      const std::uint64_t first_draw = drawn;
      drawn += count;
      try {
        parallel_for(count, cfg.threads, [&](std::size_t j) {
          const auto &x = clean[order[start + j]];
          const auto field = detail::training_field(
              cfg, x.rows(), derive_seed(noise_root, first_draw + j));
          const auto y = detail::corrupt_sequence(x, field);
          detail::zero(sample_grads[j]);
          sample_loss[j] = loss_and_grad(model, y, x, sample_grads[j],
                                         LossOptions{cfg.aux_weight});
        });
      } catch (const NumericError &e) {
        throw DivergenceError(std::string(e.what()) + " in epoch " +
                                  std::to_string(epoch),
                              last_good, result.log);
      }

      detail::zero(total);
      double batch_loss = 0.0;
      for (std::size_t j = 0; j < count; ++j) {
        batch_loss += sample_loss[j];
        detail::accumulate(total, sample_grads[j],
                           1.0 / static_cast<double>(count));
      }
      if (!std::isfinite(batch_loss))
        throw DivergenceError("non-finite training loss in epoch " +
                                  std::to_string(epoch),
                              last_good, result.log);
      if (cfg.grad_clip > 0.0) {
        const double norm = nn::global_norm(total_params);
        if (norm > cfg.grad_clip) {
          const double scale = cfg.grad_clip / norm;
          for (auto &p : total.parameters())
            for (T &g : p.tensor->flat())
              g = static_cast<T>(g * scale);
        }
      }
      if (!nn::adam_step(adam, params, total_params))
        throw DivergenceError("non-finite gradient in epoch " +
                                  std::to_string(epoch),
                              last_good, result.log);
      last_good = model;
      epoch_loss += batch_loss;
      epoch_samples += count;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_loss / static_cast<double>(epoch_samples);
    if (!val_set.empty()) {
      const auto ev = evaluate(model, val_set, val_noisy, cfg.threads);
      entry.val_psnr = ev.psnr;
      entry.val_ssim = ev.ssim;
    }
    result.log.push_back(entry);
    if (on_epoch)
      on_epoch(entry);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Layer-count ablation

inline constexpr double kAblationBetas[3] = {0.05, 0.15, 0.25};

struct AblationRow {
  std::size_t layers = 0;
  double psnr[3] = {};
  double ssim[3] = {};

  double mean_psnr() const { return (psnr[0] + psnr[1] + psnr[2]) / 3.0; }
  double mean_ssim() const { return (ssim[0] + ssim[1] + ssim[2]) / 3.0; }
};

/// Trains one model per layer count with identical seeds and data, then
/// scores each on eval_set corrupted (fixed mode) at beta 0.05, 0.15, 0.25.
inline std::vector<AblationRow>
ablate(const std::vector<std::size_t> &layer_counts, const TrainConfig &cfg,
       const std::vector<Image> &train_set, const std::vector<Image> &val_set,
       const std::vector<Image> &eval_set,
       const std::function<void(std::size_t, const EpochLog &)> &on_epoch = {}) {
  if (layer_counts.empty())
    throw InvalidArgument("ablate: no layer counts given");
  for (auto n : layer_counts)
    if (n < 1)
      throw InvalidArgument("ablate: layer count must be >= 1");
  if (eval_set.empty())
    throw InvalidArgument("ablate: empty evaluation set");

  std::vector<std::vector<Image>> noisy(3);
  for (int b = 0; b < 3; ++b)
    for (const auto &c :
         corrupt_dataset(eval_set, kAblationBetas[b], NoiseMode::fixed_sigma,
                         derive_seed(cfg.seed, 100 + b)))
      noisy[b].push_back(c.noisy);

  std::vector<AblationRow> rows;
  for (auto n : layer_counts) {
    auto run_cfg = cfg;
    run_cfg.layers = n;
    EpochCallback cb;
    if (on_epoch)
      cb = [&, n](const EpochLog &e) { on_epoch(n, e); };
    const auto trained = train(run_cfg, train_set, val_set, cb);
    AblationRow row;
    row.layers = n;
    for (int b = 0; b < 3; ++b) {
      const auto ev = evaluate(trained.model, eval_set, noisy[b], cfg.threads);
      row.psnr[b] = ev.psnr;
      row.ssim[b] = ev.ssim;
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_ablation_csv(std::ostream &os,
                               const std::vector<AblationRow> &rows) {
  os << "layers,psnr_0.05,ssim_0.05,psnr_0.15,ssim_0.15,psnr_0.25,ssim_0.25,"
        "psnr_avg,ssim_avg\n";
  char buf[256];
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof buf,
                  "%zu,%.4f,%.6f,%.4f,%.6f,%.4f,%.6f,%.4f,%.6f\n", r.layers,
                  r.psnr[0], r.ssim[0], r.psnr[1], r.ssim[1], r.psnr[2],
                  r.ssim[2], r.mean_psnr(), r.mean_ssim());
    os << buf;
  }
}

} // namespace destripe::dinr

#endif // DESTRIPE_DINR_TRAIN_HPP_
