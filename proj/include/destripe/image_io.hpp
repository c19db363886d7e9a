// SPDX-License-Identifier: Apache-2.0
/**
 * @file   image_io.hpp
 * @brief  PGM (P2/P5) and 8-bit grayscale PNG reading, P5 PGM writing.
 *
 * Loaded pixels are divided by the file's maxval so they land in [0, 1].
 * save_image always writes binary PGM with maxval 255, storing
 * round(clamp(v, 0, 1) * 255) with halves rounded up.
 */

#ifndef DESTRIPE_IMAGE_IO_HPP_
#define DESTRIPE_IMAGE_IO_HPP_

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "core.hpp"
#include "image.hpp"

namespace destripe {

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path + "' for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad())
    throw IoError("read error on '" + path + "'");
  return bytes;
}

/// Cursor over a PGM header: whitespace and '#' comments are skipped
/// between tokens.
class PgmCursor {
public:
  PgmCursor(const std::vector<unsigned char> &bytes, const std::string &path)
      : bytes_(bytes), path_(path) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const unsigned char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
          ++pos_;
      } else if (std::isspace(ch)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t read_uint(const char *field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
      throw FormatError("'" + path_ + "': expected " + field);
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 0xFFFFFFFFull)
        throw FormatError("'" + path_ + "': " + field + " out of range");
      ++pos_;
    }
    return value;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance(std::size_t n) noexcept { pos_ += n; }

private:
  const std::vector<unsigned char> &bytes_;
  const std::string &path_;
  std::size_t pos_ = 0;
};

inline Image decode_pgm(const std::vector<unsigned char> &bytes,
                        const std::string &path) {
  const bool ascii = bytes[1] == '2';
  PgmCursor cur(bytes, path);
  cur.advance(2);
  const auto width = cur.read_uint("width");
  const auto height = cur.read_uint("height");
  const auto maxval = cur.read_uint("maxval");
  if (width == 0 || height == 0)
    throw FormatError("'" + path + "': zero-sized image");
  if (maxval == 0 || maxval > 65535)
    throw FormatError("'" + path + "': maxval must be in [1, 65535]");

  Image img(height, width);
  const double denom = static_cast<double>(maxval);
  if (ascii) {
    for (std::size_t r = 0; r < height; ++r)
      for (std::size_t c = 0; c < width; ++c) {
        const auto v = cur.read_uint("pixel value");
        if (v > maxval)
          throw FormatError("'" + path + "': pixel value exceeds maxval");
        img(r, c) = static_cast<double>(v) / denom;
      }
    return img;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  if (cur.pos() >= bytes.size() || !std::isspace(bytes[cur.pos()]))
    throw FormatError("'" + path + "': malformed header");
  cur.advance(1);
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t needed = width * height * sample_bytes;
  if (bytes.size() - cur.pos() < needed)
    throw FormatError("'" + path + "': truncated raster");
  const unsigned char *p = bytes.data() + cur.pos();
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      std::uint32_t v = *p++;
      if (sample_bytes == 2)
        v = (v << 8) | *p++;
      if (v > maxval)
        throw FormatError("'" + path + "': pixel value exceeds maxval");
      img(r, c) = static_cast<double>(v) / denom;
    }
  return img;
}

inline Image decode_png(const std::vector<unsigned char> &bytes,
                        const std::string &path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    throw FormatError("'" + path + "': " + png.message);
  if (png.format != PNG_FORMAT_GRAY) {
    png_image_free(&png);
    throw FormatError("'" + path +
                      "': only 8-bit grayscale PNG without alpha is supported");
  }
  if (png.width == 0 || png.height == 0) {
    png_image_free(&png);
    throw FormatError("'" + path + "': zero-sized image");
  }
  std::vector<png_byte> raster(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raster.data(), 0, nullptr))
    throw FormatError("'" + path + "': " + png.message);
  Image img(png.height, png.width);
  for (std::size_t r = 0; r < png.height; ++r)
    for (std::size_t c = 0; c < png.width; ++c)
      img(r, c) = raster[r * png.width + c] / 255.0;
  return img;
}

} // namespace detail

inline Image load_image(const std::string &path) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.empty())
    throw FormatError("'" + path + "': empty file");
  static constexpr unsigned char kPngSig[8] = {0x89, 'P',  'N',  'G',
                                               '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0)
    return detail::decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5'))
    return detail::decode_pgm(bytes, path);
  throw FormatError("'" + path + "': unsupported image format");
}

/// Byte stored for pixel value v.
inline std::uint8_t quantize_u8(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

inline void save_image(const Image &img, const std::string &path) {
  if (img.empty())
    throw InvalidArgument("save_image: empty image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  std::vector<char> row(img.cols());
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t c = 0; c < img.cols(); ++c)
      row[c] = static_cast<char>(quantize_u8(img(r, c)));
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out)
    throw IoError("write error on '" + path + "'");
}

/// Image files (.pgm, .pnm, .png) directly inside dir, sorted by name.
inline std::vector<std::filesystem::path>
list_image_files(const std::filesystem::path &dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw IoError("not a directory: '" + dir.string() + "'");
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file())
      continue;
    auto ext = entry.path().extension().string();
    for (auto &ch : ext)
      ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (ext == ".pgm" || ext == ".pnm" || ext == ".png")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

} // namespace destripe

#endif // DESTRIPE_IMAGE_IO_HPP_
