// SPDX-License-Identifier: Apache-2.0
/**
 * @file   commands.hpp
 * @brief  The destripe subcommands: corrupt, train, denoise, eval, ablate,
 *         profile, synth, replay.
 *
 * Every subcommand is described by a key schema. Effective settings are the
 * schema defaults, overlaid by an optional key=value config file, overlaid
 * by command-line flags. The fully resolved settings are written as a run
 * manifest next to the outputs; `destripe replay <manifest>` re-executes a
 * run from it.
 */

#ifndef DESTRIPE_COMMANDS_HPP_
#define DESTRIPE_COMMANDS_HPP_

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "baseline.hpp"
#include "config.hpp"
#include "core.hpp"
#include "dataset.hpp"
#include "dinr/checkpoint.hpp"
#include "dinr/model.hpp"
#include "dinr/train.hpp"
#include "image_io.hpp"
#include "metrics.hpp"
#include "noise.hpp"

namespace destripe::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kIoError = 3,
  kDivergence = 4,
};

inline constexpr const char *kDataRootEnv = "DESTRIPE_DATA_ROOT";

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Command {
  std::string name;
  std::string help;
  std::vector<ConfigKey> keys;
  /// Name of a key that takes the positional arguments, comma-joined.
  std::string positional;
  std::function<void(const KeyValues &, std::ostream &)> run;
};

// ---------------------------------------------------------------------------
// Shared helpers

inline std::string default_data_root() {
  const char *env = std::getenv(kDataRootEnv);
  return env ? env : "";
}

/// Relative paths are taken relative to data_root when it is set.
inline fs::path resolve_path(const KeyValues &kv, const std::string &key) {
  const fs::path p = get(kv, key);
  if (p.empty())
    throw ConfigError("key '" + key + "' must name a path");
  const auto it = kv.find("data_root");
  if (p.is_relative() && it != kv.end() && !it->second.empty())
    return fs::path(it->second) / p;
  return p;
}

inline void ensure_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create directory '" + dir.string() + "'");
}

inline void write_manifest(const fs::path &path, const std::string &command,
                           const KeyValues &kv) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot write manifest '" + path.string() + "'");
  out << "# destripe run manifest; replay with: destripe replay "
      << path.filename().string() << '\n';
  out << "subcommand=" << command << '\n';
  out << "tool_version=" << kVersion << '\n';
  write_key_values(out, kv);
}

inline std::vector<ConfigKey> common_keys() {
  return {
      {"seed", "0", "root seed for every random stream"},
      {"threads", "1", "worker threads (results do not depend on this)"},
      {"data_root", default_data_root(),
       std::string("base for relative paths (default $") + kDataRootEnv + ")"},
  };
}

template <typename... Lists>
std::vector<ConfigKey> concat_keys(std::vector<ConfigKey> first,
                                   const Lists &...rest) {
  (first.insert(first.end(), rest.begin(), rest.end()), ...);
  return first;
}

inline std::vector<Image> load_images(const std::vector<fs::path> &files) {
  std::vector<Image> out;
  out.reserve(files.size());
  for (const auto &f : files)
    out.push_back(load_image(f.string()));
  return out;
}

inline fs::path output_name(const fs::path &input) {
  return input.stem().string() + ".pgm";
}

// ---------------------------------------------------------------------------
// Sidecar stripe files

inline fs::path sidecar_path(const fs::path &image_path) {
  return image_path.parent_path() / (image_path.stem().string() + ".stripes.txt");
}

inline void write_sidecar(const fs::path &path, const std::string &image_name,
                          const StripeField &field) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot write '" + path.string() + "'");
  out << "image " << image_name << '\n'
      << "beta " << format_double(field.beta) << '\n'
      << "mode " << to_string(field.mode) << '\n'
      << "sigma " << format_double(field.sigma) << '\n'
      << "seed " << field.seed << '\n'
      << "width " << field.width() << '\n'
      << "offsets\n";
  for (double s : field.offsets)
    out << format_double(s) << '\n';
}

struct SidecarInfo {
  std::string beta = "NA";
  std::string mode = "NA";
};

inline SidecarInfo read_sidecar_header(const fs::path &path) {
  SidecarInfo info;
  std::ifstream in(path);
  if (!in)
    return info;
  std::string key, value;
  while (in >> key && key != "offsets") {
    in >> value;
    if (key == "beta")
      info.beta = value;
    else if (key == "mode")
      info.mode = value;
  }
  return info;
}

// ---------------------------------------------------------------------------
// Training settings <-> keys

inline dinr::TrainConfig preset_config(const std::string &preset) {
  if (preset == "desk")
    return dinr::TrainConfig::desk_scale();
  if (preset == "paper")
    return dinr::TrainConfig{};
  throw ConfigError("key 'preset': unknown preset '" + preset +
                    "' (expected 'paper' or 'desk')");
}

inline std::vector<ConfigKey> train_keys(const dinr::TrainConfig &c) {
  return {
      {"preset", "paper", "default set: 'paper' (T=15) or 'desk' (T=3)"},
      {"data_dir", "", "directory of clean training images"},
      {"beta_min", format_double(c.beta_min), "lower bound of training sigma"},
      {"beta_max", format_double(c.beta_max), "noise intensity beta"},
      {"noise_mode", to_string(c.noise_mode), "training noise: sampled|fixed"},
      {"epochs", std::to_string(c.epochs), "training epochs"},
      {"batch_size", std::to_string(c.batch_size), "patches per Adam step"},
      {"learning_rate", format_double(c.learning_rate), "Adam step size"},
      {"adam_beta1", format_double(c.adam_beta1), "Adam first-moment decay"},
      {"adam_beta2", format_double(c.adam_beta2), "Adam second-moment decay"},
      {"adam_epsilon", format_double(c.adam_epsilon), "Adam epsilon"},
      {"grad_clip", format_double(c.grad_clip), "global gradient-norm clip, 0=off"},
      {"patch_rows", std::to_string(c.patch_rows), "training patch height"},
      {"patch_cols", std::to_string(c.patch_cols), "training patch width"},
      {"stride", std::to_string(c.stride), "patch grid stride"},
      {"layers", std::to_string(c.layers), "unfolded BiGRU layers T"},
      {"hidden", std::to_string(c.hidden), "GRU hidden size H"},
      {"output_mode", dinr::to_string(c.output_mode), "per-pixel|per-column"},
      {"init_proj_scale", format_double(c.init_proj_scale),
       "scale of the initial output projection"},
      {"aux_weight", format_double(c.aux_weight),
       "weight of per-iterate auxiliary losses"},
      {"val_beta", format_double(c.val_beta), "validation noise beta"},
      {"val_mode", to_string(c.val_mode), "validation noise mode"},
      {"split_fraction", format_double(c.split_fraction),
       "fraction of images used for training"},
  };
}

inline dinr::TrainConfig train_config_from(const KeyValues &kv) {
  dinr::TrainConfig c = preset_config(get(kv, "preset"));
  c.beta_min = get_double(kv, "beta_min");
  c.beta_max = get_double(kv, "beta_max");
  c.epochs = get_size(kv, "epochs");
  c.batch_size = get_size(kv, "batch_size");
  c.learning_rate = get_double(kv, "learning_rate");
  c.adam_beta1 = get_double(kv, "adam_beta1");
  c.adam_beta2 = get_double(kv, "adam_beta2");
  c.adam_epsilon = get_double(kv, "adam_epsilon");
  c.grad_clip = get_double(kv, "grad_clip");
  c.patch_rows = get_size(kv, "patch_rows");
  c.patch_cols = get_size(kv, "patch_cols");
  c.stride = get_size(kv, "stride");
  c.seed = get_u64(kv, "seed");
  c.layers = get_size(kv, "layers");
  c.hidden = get_size(kv, "hidden");
  c.init_proj_scale = get_double(kv, "init_proj_scale");
  c.aux_weight = get_double(kv, "aux_weight");
  c.val_beta = get_double(kv, "val_beta");
  c.split_fraction = get_double(kv, "split_fraction");
  c.threads = get_size(kv, "threads");
  try {
    c.noise_mode = parse_noise_mode(get(kv, "noise_mode"));
    c.val_mode = parse_noise_mode(get(kv, "val_mode"));
    c.output_mode = dinr::parse_output_mode(get(kv, "output_mode"));
    c.validate();
  } catch (const InvalidArgument &e) {
    throw ConfigError(e.what());
  }
  return c;
}

struct PatchSets {
  std::vector<Image> train;
  std::vector<Image> validation;
};

/// Splits the images in data_dir at the image level, then cuts patches.
inline PatchSets load_patch_sets(const fs::path &data_dir,
                                 const dinr::TrainConfig &cfg) {
  const auto files = list_image_files(data_dir);
  if (files.empty())
    throw IoError("no images in '" + data_dir.string() + "'");
  auto split =
      split_dataset(load_images(files), cfg.split_fraction,
                    derive_seed(cfg.seed, 5));
  PatchSets sets;
  for (const auto &img : split.train)
    for (auto &p : extract_patches(img, cfg.patch_rows, cfg.patch_cols,
                                   cfg.stride))
      sets.train.push_back(std::move(p));
  for (const auto &img : split.validation)
    for (auto &p : extract_patches(img, cfg.patch_rows, cfg.patch_cols,
                                   cfg.stride))
      sets.validation.push_back(std::move(p));
  return sets;
}

/// Applies the model to images at least model.rows tall by processing
/// horizontal bands of model.rows rows; the last band is bottom-aligned.
template <typename T>
Image denoise_bands(const dinr::UnfoldedModel<T> &model, const Image &img) {
  const std::size_t n = model.rows;
  if (img.rows() == n)
    return dinr::denoise(model, img);
  if (img.rows() < n)
    throw InvalidArgument("image height " + std::to_string(img.rows()) +
                          " is smaller than the model's column length " +
                          std::to_string(n));
  Image out(img.rows(), img.cols());
  for (std::size_t r0 = 0;; r0 += n) {
    const std::size_t top = std::min(r0, img.rows() - n);
    const Image band = dinr::denoise(model, crop(img, top, 0, n, img.cols()));
    for (std::size_t c = 0; c < img.cols(); ++c)
      for (std::size_t r = 0; r < n; ++r)
        out(top + r, c) = band(r, c);
    if (top + n >= img.rows())
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_corrupt(const KeyValues &kv, std::ostream &log) {
  const auto in = resolve_path(kv, "in");
  const auto out = resolve_path(kv, "out");
  const double beta = get_double(kv, "beta");
  const auto seed = get_u64(kv, "seed");
  NoiseMode mode;
  try {
    mode = parse_noise_mode(get(kv, "mode"));
  } catch (const InvalidArgument &e) {
    throw ConfigError(e.what());
  }
  if (!(beta >= 0.0))
    throw ConfigError("key 'beta' must be >= 0");
  const auto files = list_image_files(in);
  ensure_dir(out);
  const auto samples = corrupt_dataset(load_images(files), beta, mode, seed);
  for (std::size_t k = 0; k < files.size(); ++k) {
    const auto name = output_name(files[k]);
    save_image(samples[k].noisy, (out / name).string());
    write_sidecar(sidecar_path(out / name), name.string(), samples[k].field);
  }
  write_manifest(out / "manifest.txt", "corrupt", kv);
  log << "corrupted " << files.size() << " images into " << out.string()
      << '\n';
}

inline void cmd_train(const KeyValues &kv, std::ostream &log) {
  const auto cfg = train_config_from(kv);
  const auto data_dir = resolve_path(kv, "data_dir");
  const auto out = resolve_path(kv, "out");
  const auto sets = load_patch_sets(data_dir, cfg);
  ensure_dir(out);
  write_manifest(out / "manifest.txt", "train", kv);
  log << "training on " << sets.train.size() << " patches, validating on "
      << sets.validation.size() << '\n';

  auto write_outputs = [&](const dinr::UnfoldedModel<float> &model,
                           const std::vector<dinr::EpochLog> &entries) {
    dinr::save_checkpoint(model, (out / "model.ckpt").string());
    std::ofstream csv(out / "train_log.csv", std::ios::trunc);
    if (!csv)
      throw IoError("cannot write '" + (out / "train_log.csv").string() + "'");
    dinr::write_train_log_csv(csv, entries);
  };
  try {
    const auto result =
        dinr::train(cfg, sets.train, sets.validation, [&](const auto &e) {
          char buf[160];
          std::snprintf(buf, sizeof buf,
                        "epoch %zu  loss %.6g  val_psnr %.3f  val_ssim %.4f\n",
                        e.epoch, e.train_loss, e.val_psnr, e.val_ssim);
          log << buf << std::flush;
        });
    write_outputs(result.model, result.log);
  } catch (const dinr::DivergenceError &e) {
    write_outputs(e.last_good(), e.log());
    throw;
  }
}

inline void cmd_denoise(const KeyValues &kv, std::ostream &log) {
  const auto in = resolve_path(kv, "in");
  const auto out = resolve_path(kv, "out");
  const auto &method = get(kv, "method");
  BaselineConfig base;
  base.half_width = get_size(kv, "window");

  std::function<Image(const Image &)> apply;
  dinr::UnfoldedModel<float> model;
  if (method == "dinr") {
    if (get(kv, "checkpoint").empty())
      throw ConfigError("method 'dinr' needs key 'checkpoint'");
    model = dinr::load_checkpoint<float>(resolve_path(kv, "checkpoint").string());
    apply = [&](const Image &img) { return denoise_bands(model, img); };
  } else if (method == "baseline") {
    apply = [&](const Image &img) { return column_equalize(img, base); };
  } else {
    throw ConfigError("key 'method': unknown method '" + method +
                      "' (expected 'dinr' or 'baseline')");
  }

  const auto files = list_image_files(in);
  ensure_dir(out);
  std::vector<Image> results(files.size());
  const auto images = load_images(files);
  parallel_for(files.size(), get_size(kv, "threads"),
               [&](std::size_t i) { results[i] = apply(images[i]); });
  for (std::size_t i = 0; i < files.size(); ++i)
    save_image(results[i], (out / output_name(files[i])).string());
  write_manifest(out / "manifest.txt", "denoise", kv);
  log << "denoised " << files.size() << " images into " << out.string()
      << " (" << method << ")\n";
}

inline std::string format_psnr(const Psnr &p) {
  if (p.identical())
    return "identical";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", p.db);
  return buf;
}

inline std::string format_ssim(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", s);
  return buf;
}

/// Writes `text` to key 'out' (plus a manifest) or to stdout when unset.
inline void emit(const KeyValues &kv, const std::string &command,
                 const std::string &text, std::ostream &log) {
  if (get(kv, "out").empty()) {
    std::cout << text;
    return;
  }
  const auto out = resolve_path(kv, "out");
  if (out.has_parent_path())
    ensure_dir(out.parent_path());
  std::ofstream f(out, std::ios::trunc);
  if (!f)
    throw IoError("cannot write '" + out.string() + "'");
  f << text;
  write_manifest(out.string() + ".manifest.txt", command, kv);
  log << "wrote " << out.string() << '\n';
}

inline const fs::path *find_by_stem(const std::vector<fs::path> &files,
                                    const fs::path &like) {
  for (const auto &f : files)
    if (f.stem() == like.stem())
      return &f;
  return nullptr;
}

inline void cmd_eval(const KeyValues &kv, std::ostream &log) {
  const auto clean_dir = resolve_path(kv, "clean");
  const auto noisy_dir = resolve_path(kv, "noisy");
  const bool has_denoised = !get(kv, "denoised").empty();
  const auto clean_files = list_image_files(clean_dir);
  const auto noisy_files = list_image_files(noisy_dir);
  std::vector<fs::path> denoised_files;
  if (has_denoised)
    denoised_files = list_image_files(resolve_path(kv, "denoised"));

  std::ostringstream csv;
  csv << "path,beta,mode,psnr_noisy,psnr_denoised,ssim_noisy,ssim_denoised\n";
  for (const auto &cf : clean_files) {
    const auto *nf = find_by_stem(noisy_files, cf);
    if (!nf)
      throw IoError("no counterpart of '" + cf.filename().string() + "' in '" +
                    noisy_dir.string() + "'");
    const Image clean = load_image(cf.string());
    const Image noisy = load_image(nf->string());
    const auto info = read_sidecar_header(sidecar_path(*nf));
    std::string pd = "NA", sd = "NA";
    if (has_denoised) {
      const auto *df = find_by_stem(denoised_files, cf);
      if (!df)
        throw IoError("no denoised counterpart of '" +
                      cf.filename().string() + "'");
      const Image den = load_image(df->string());
      pd = format_psnr(psnr(clean, den));
      sd = format_ssim(ssim(clean, den));
    }
    csv << cf.filename().string() << ',' << info.beta << ',' << info.mode
        << ',' << format_psnr(psnr(clean, noisy)) << ',' << pd << ','
        << format_ssim(ssim(clean, noisy)) << ',' << sd << '\n';
  }
  emit(kv, "eval", csv.str(), log);
}

inline void cmd_ablate(const KeyValues &kv, std::ostream &log) {
  const auto cfg = train_config_from(kv);
  const auto counts = parse_size_list(get(kv, "layer_list"), "layer_list");
  for (auto n : counts)
    if (n < 1)
      throw ConfigError("key 'layer_list': layer count must be >= 1");
  const auto sets = load_patch_sets(resolve_path(kv, "data_dir"), cfg);
  std::vector<Image> eval_set = sets.validation;
  if (!get(kv, "eval_dir").empty()) {
    eval_set.clear();
    for (const auto &img :
         load_images(list_image_files(resolve_path(kv, "eval_dir"))))
      for (auto &p :
           extract_patches(img, cfg.patch_rows, cfg.patch_cols, cfg.stride))
        eval_set.push_back(std::move(p));
  }
  if (eval_set.empty())
    throw ConfigError("ablate: no evaluation images (set eval_dir or lower "
                      "split_fraction)");
  const auto rows = dinr::ablate(
      counts, cfg, sets.train, sets.validation, eval_set,
      [&](std::size_t layers, const dinr::EpochLog &e) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "T=%zu epoch %zu  loss %.6g  val_psnr %.3f\n",
                      layers, e.epoch, e.train_loss, e.val_psnr);
        log << buf << std::flush;
      });
  std::ostringstream csv;
  dinr::write_ablation_csv(csv, rows);
  emit(kv, "ablate", csv.str(), log);
}

inline void cmd_profile(const KeyValues &kv, std::ostream &log) {
  const auto &list = get(kv, "images");
  std::vector<fs::path> paths;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty())
      paths.push_back(trim(item));
  if (paths.empty())
    throw ConfigError("profile: no images given");

  std::vector<std::vector<double>> profiles;
  std::size_t width = 0;
  for (auto &p : paths) {
    KeyValues one = kv;
    one["images"] = p.string();
    const auto resolved = resolve_path(one, "images");
    profiles.push_back(column_profile(load_image(resolved.string())));
    width = std::max(width, profiles.back().size());
  }
  std::ostringstream csv;
  csv << "column";
  for (const auto &p : paths)
    csv << ',' << p.string();
  csv << '\n';
  char buf[32];
  for (std::size_t c = 0; c < width; ++c) {
    csv << c;
    for (const auto &prof : profiles) {
      csv << ',';
      if (c < prof.size()) {
        std::snprintf(buf, sizeof buf, "%.8f", prof[c]);
        csv << buf;
      }
    }
    csv << '\n';
  }
  emit(kv, "profile", csv.str(), log);
}

inline void cmd_synth(const KeyValues &kv, std::ostream &log) {
  const auto out = resolve_path(kv, "out");
  SceneKind kind;
  try {
    kind = parse_scene_kind(get(kv, "kind"));
  } catch (const InvalidArgument &e) {
    throw ConfigError(e.what());
  }
  const auto count = get_size(kv, "count");
  const auto rows = get_size(kv, "rows"), cols = get_size(kv, "cols");
  if (rows == 0 || cols == 0)
    throw ConfigError("rows and cols must be >= 1");
  ensure_dir(out);
  const auto seed = get_u64(kv, "seed");
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04zu.pgm", i);
    save_image(synthesize_scene(rows, cols, kind, derive_seed(seed, i)),
               (out / name).string());
  }
  write_manifest(out / "manifest.txt", "synth", kv);
  log << "wrote " << count << " " << to_string(kind) << " scenes to "
      << out.string() << '\n';
}

// ---------------------------------------------------------------------------
// Registry

inline std::vector<ConfigKey> training_schema(const std::string &preset) {
  auto keys = train_keys(preset_config(preset));
  keys.push_back({"out", "", "output directory"});
  return concat_keys(common_keys(), keys);
}

inline const std::vector<Command> &commands() {
  static const std::vector<Command> registry = [] {
    std::vector<Command> c;
    c.push_back({"synth",
                 "write seeded synthetic grayscale scenes",
                 concat_keys(common_keys(),
                             std::vector<ConfigKey>{
                                 {"out", "", "output directory"},
                                 {"count", "100", "number of scenes"},
                                 {"rows", "128", "scene height"},
                                 {"cols", "128", "scene width"},
                                 {"kind", "mixed", "mixed|vertical|midgray"},
                             }),
                 "",
                 cmd_synth});
    c.push_back({"corrupt",
                 "add column stripe noise to every image in a directory",
                 concat_keys(common_keys(),
                             std::vector<ConfigKey>{
                                 {"in", "", "directory of clean images"},
                                 {"out", "", "output directory"},
                                 {"beta", "0.1", "noise intensity beta"},
                                 {"mode", "fixed", "fixed (sigma=beta) or sampled (sigma~U(0,beta))"},
                             }),
                 "",
                 cmd_corrupt});
    c.push_back({"train", "train an unfolded BiGRU destriper",
                 training_schema("paper"), "", cmd_train});
    c.push_back({"denoise", "destripe every image in a directory",
                 concat_keys(common_keys(),
                             std::vector<ConfigKey>{
                                 {"in", "", "directory of noisy images"},
                                 {"out", "", "output directory"},
                                 {"method", "dinr", "dinr|baseline"},
                                 {"checkpoint", "", "model checkpoint (dinr)"},
                                 {"window", "10", "baseline half width w"},
                             }),
                 "", cmd_denoise});
    c.push_back({"eval", "PSNR/SSIM of noisy (and denoised) images as CSV",
                 concat_keys(common_keys(),
                             std::vector<ConfigKey>{
                                 {"clean", "", "directory of clean images"},
                                 {"noisy", "", "directory of noisy images"},
                                 {"denoised", "", "directory of denoised images"},
                                 {"out", "", "CSV path (stdout if empty)"},
                             }),
                 "", cmd_eval});
    auto ablate_keys = training_schema("paper");
    ablate_keys.back() = {"out", "", "CSV path (stdout if empty)"};
    ablate_keys.push_back({"layer_list", "6,10,15", "comma-separated layer counts"});
    ablate_keys.push_back({"eval_dir", "", "evaluation images (default: validation split)"});
    c.push_back({"ablate", "train one model per layer count, tabulate PSNR/SSIM",
                 ablate_keys, "", cmd_ablate});
    c.push_back({"profile", "per-column mean profiles as CSV",
                 concat_keys(common_keys(),
                             std::vector<ConfigKey>{
                                 {"images", "", "images (comma-separated or positional)"},
                                 {"out", "", "CSV path (stdout if empty)"},
                             }),
                 "images", cmd_profile});
    return c;
  }();
  return registry;
}

inline const Command &find_command(const std::string &name) {
  for (const auto &c : commands())
    if (c.name == name)
      return c;
  throw ConfigError("unknown subcommand '" + name + "'");
}

/// Defaults, overlaid by file, overlaid by flags; all keys validated.
/// A 'preset' given in the file or flags selects the training defaults.
inline KeyValues resolve_settings(const Command &cmd, const KeyValues &file,
                                  const KeyValues &flags,
                                  const std::string &origin = "config") {
  check_keys(file, cmd.keys, origin);
  check_keys(flags, cmd.keys, "command line");
  std::vector<ConfigKey> schema = cmd.keys;
  std::string preset;
  if (auto it = flags.find("preset"); it != flags.end())
    preset = it->second;
  else if (auto jt = file.find("preset"); jt != file.end())
    preset = jt->second;
  if (!preset.empty() && preset != "paper") {
    auto desk = training_schema(preset);
    for (auto &key : schema)
      for (const auto &d : desk)
        if (d.name == key.name)
          key.default_value = d.default_value;
  }
  KeyValues kv;
  for (const auto &key : schema)
    kv[key.name] = key.default_value;
  if (!preset.empty())
    kv["preset"] = preset;
  for (const auto &[k, v] : file)
    kv[k] = v;
  for (const auto &[k, v] : flags)
    kv[k] = v;
  return kv;
}

/// Runs cmd and maps errors to exit codes, reporting them on err.
inline int run_command(const Command &cmd, const KeyValues &kv,
                       std::ostream &log, std::ostream &err) {
  try {
    cmd.run(kv, log);
    return kOk;
  } catch (const ConfigError &e) {
    err << "destripe " << cmd.name << ": config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError &e) {
    err << "destripe " << cmd.name << ": I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const NumericError &e) {
    err << "destripe " << cmd.name << ": numeric divergence: " << e.what()
        << '\n';
    return kDivergence;
  } catch (const InvalidArgument &e) {
    err << "destripe " << cmd.name << ": invalid argument: " << e.what()
        << '\n';
    return kConfigError;
  } catch (const std::exception &e) {
    err << "destripe " << cmd.name << ": error: " << e.what() << '\n';
    return kUsage;
  }
}

/// Re-executes the run recorded in a manifest.
inline int replay(const std::string &manifest_path, std::ostream &log,
                  std::ostream &err) {
  KeyValues kv;
  try {
    kv = load_key_values(manifest_path);
  } catch (const Error &e) {
    err << "destripe replay: " << e.what() << '\n';
    return kIoError;
  }
  const auto sub = kv.find("subcommand");
  if (sub == kv.end()) {
    err << "destripe replay: manifest has no 'subcommand'\n";
    return kConfigError;
  }
  const std::string name = sub->second;
  kv.erase("subcommand");
  if (auto v = kv.find("tool_version"); v != kv.end()) {
    if (v->second != kVersion)
      err << "destripe replay: warning: manifest written by version "
          << v->second << ", running " << kVersion << '\n';
    kv.erase(v);
  }
  try {
    const auto &cmd = find_command(name);
    return run_command(cmd, resolve_settings(cmd, kv, {}, manifest_path), log,
                       err);
  } catch (const ConfigError &e) {
    err << "destripe replay: " << e.what() << '\n';
    return kConfigError;
  }
}

} // namespace destripe::cli

#endif // DESTRIPE_COMMANDS_HPP_
