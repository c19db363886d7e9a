// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Versioned text manifest plus little-endian float32 blob.
 *
 * A checkpoint saved to `model.ckpt` is two files:
 *
 *   model.ckpt       text manifest
 *   model.ckpt.bin   every tensor as float32 LE, row-major, manifest order
 *
 * Manifest layout:
 *
 *   destripe-checkpoint 1
 *   layers 3
 *   rows 64
 *   hidden 32
 *   output_mode per-pixel
 *   blob model.ckpt.bin
 *   tensors 66
 *   tensor layer0.fwd.W_z 32 64
 *   ...
 */

#ifndef DESTRIPE_DINR_CHECKPOINT_HPP_
#define DESTRIPE_DINR_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "model.hpp"

namespace destripe::dinr {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public IoError {
public:
  enum class Kind { malformed, version_mismatch, shape_mismatch, truncated, trailing_data };

  CheckpointError(Kind kind, const std::string &what)
      : IoError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

namespace detail {

inline void put_f32_le(std::string &out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>(bits & 0xFF));
    bits >>= 8;
  }
}

inline float get_f32_le(const unsigned char *p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i)
    bits = (bits << 8) | p[i];
  return std::bit_cast<float>(bits);
}

} // namespace detail

inline std::string blob_path_for(const std::string &manifest_path) {
  return manifest_path + ".bin";
}

template <typename T>
void save_checkpoint(const UnfoldedModel<T> &model, const std::string &path) {
  const auto params = model.parameters();
  const std::string blob_path = blob_path_for(path);

  std::ostringstream man;
  man << "destripe-checkpoint " << kCheckpointVersion << '\n'
      << "layers " << model.num_layers() << '\n'
      << "rows " << model.rows << '\n'
      << "hidden " << model.hidden << '\n'
      << "output_mode " << to_string(model.output_mode) << '\n'
      << "blob " << std::filesystem::path(blob_path).filename().string() << '\n'
      << "tensors " << params.size() << '\n';
  std::string blob;
  for (const auto &p : params) {
    man << "tensor " << p.name << ' ' << p.tensor->rows() << ' '
        << p.tensor->cols() << '\n';
    for (T v : p.tensor->flat())
      detail::put_f32_le(blob, static_cast<float>(v));
  }

  std::ofstream mout(path, std::ios::trunc);
  if (!mout)
    throw IoError("cannot open '" + path + "' for writing");
  mout << man.str();
  std::ofstream bout(blob_path, std::ios::binary | std::ios::trunc);
  if (!bout)
    throw IoError("cannot open '" + blob_path + "' for writing");
  bout.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!mout || !bout)
    throw IoError("write error saving checkpoint '" + path + "'");
}

template <typename T = float>
UnfoldedModel<T> load_checkpoint(const std::string &path) {
  using Kind = CheckpointError::Kind;
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open checkpoint '" + path + "'");

  auto fail = [&](Kind kind, const std::string &msg) -> CheckpointError {
    return CheckpointError(kind, "checkpoint '" + path + "': " + msg);
  };
  auto expect_key = [&](const char *key) {
    std::string k;
    if (!(in >> k) || k != key)
      throw fail(Kind::malformed, std::string("expected '") + key + "'");
  };

  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "destripe-checkpoint")
    throw fail(Kind::malformed, "not a destripe checkpoint");
  if (version != kCheckpointVersion)
    throw fail(Kind::version_mismatch,
               "version " + std::to_string(version) + " unsupported (expected " +
                   std::to_string(kCheckpointVersion) + ")");

  std::size_t layers = 0, rows = 0, hidden = 0, count = 0;
  std::string mode, blob_name;
  expect_key("layers");
  in >> layers;
  expect_key("rows");
  in >> rows;
  expect_key("hidden");
  in >> hidden;
  expect_key("output_mode");
  in >> mode;
  expect_key("blob");
  in >> blob_name;
  expect_key("tensors");
  in >> count;
  if (!in || layers == 0 || rows == 0 || hidden == 0)
    throw fail(Kind::malformed, "bad header values");

  UnfoldedModel<T> model;
  try {
    model = make_model<T>(layers, rows, hidden, parse_output_mode(mode));
  } catch (const InvalidArgument &e) {
    throw fail(Kind::malformed, e.what());
  }
  auto params = model.parameters();
  if (count != params.size())
    throw fail(Kind::shape_mismatch,
               "manifest lists " + std::to_string(count) +
                   " tensors, architecture needs " +
                   std::to_string(params.size()));
  for (const auto &p : params) {
    std::string name;
    std::size_t r = 0, c = 0;
    expect_key("tensor");
    if (!(in >> name >> r >> c))
      throw fail(Kind::malformed, "bad tensor line");
    if (name != p.name)
      throw fail(Kind::shape_mismatch,
                 "expected tensor '" + p.name + "', found '" + name + "'");
    if (r != p.tensor->rows() || c != p.tensor->cols())
      throw fail(Kind::shape_mismatch,
                 "tensor '" + name + "' has shape " + std::to_string(r) + "x" +
                     std::to_string(c) + ", expected " +
                     std::to_string(p.tensor->rows()) + "x" +
                     std::to_string(p.tensor->cols()));
  }

  const auto blob_path =
      (std::filesystem::path(path).parent_path() / blob_name).string();
  std::ifstream bin(blob_path, std::ios::binary);
  if (!bin)
    throw IoError("cannot open checkpoint blob '" + blob_path + "'");
  const std::vector<unsigned char> blob((std::istreambuf_iterator<char>(bin)),
                                        std::istreambuf_iterator<char>());
  std::size_t offset = 0;
  for (const auto &p : params) {
    const std::size_t bytes = p.tensor->size() * 4;
    if (blob.size() - offset < bytes)
      throw fail(Kind::truncated, "blob ends inside tensor '" + p.name + "'");
    auto dst = p.tensor->flat();
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] = static_cast<T>(detail::get_f32_le(blob.data() + offset + 4 * i));
    offset += bytes;
  }
  if (offset != blob.size())
    throw fail(Kind::trailing_data, std::to_string(blob.size() - offset) +
                                        " unexpected bytes after last tensor");
  return model;
}

} // namespace destripe::dinr

#endif // DESTRIPE_DINR_CHECKPOINT_HPP_
