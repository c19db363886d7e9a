// SPDX-License-Identifier: Apache-2.0
/**
 * @file   test_image.cpp
 * @brief  Image container and PGM/PNG I/O tests.
 */
#include <gtest/gtest.h>
#include <png.h>

#include <cstring>
#include <cmath>
#include <numeric>
#include <set>

#include "destripe/dataset.hpp"
#include "destripe/image.hpp"
#include "destripe/image_io.hpp"
#include "test_util.hpp"

using namespace destripe;
using destripe::testing::TempDir;
using destripe::testing::read_bytes;
using destripe::testing::write_bytes;

TEST(Image, ColumnAccessorReturnsRowsValues) {
  Image img(3, 5);
  for (std::size_t c = 0; c < 5; ++c) {
    EXPECT_EQ(img.column(c).size(), 3u);
    img.column(c)[1] = static_cast<double>(c);
  }
  EXPECT_EQ(img(1, 4), 4.0);
  EXPECT_THROW(Image(0, 4), InvalidArgument);
}

TEST(LoadImage, BinaryPgmAllMaxIsOne) {
  TempDir dir;
  write_bytes(dir.file("a.pgm"), "P5\n4 3\n255\n" + std::string(12, '\xff'));
  const Image img = load_image(dir.file("a.pgm"));
  ASSERT_EQ(img.rows(), 3u);
  ASSERT_EQ(img.cols(), 4u);
  for (double v : img.pixels())
    EXPECT_EQ(v, 1.0);
}

TEST(LoadImage, AsciiPgmNormalizesByMaxval) {
  TempDir dir;
  write_bytes(dir.file("a.pgm"), "P2\n# comment line\n2 2\n255\n0 51\n102 255\n");
  const Image img = load_image(dir.file("a.pgm"));
  EXPECT_DOUBLE_EQ(img(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(img(0, 1), 0.2);
  EXPECT_DOUBLE_EQ(img(1, 0), 0.4);
  EXPECT_DOUBLE_EQ(img(1, 1), 1.0);
}

TEST(LoadImage, SixteenBitBinaryPgm) {
  TempDir dir;
  std::string raster = {'\x00', '\x00', '\xff', '\xff', '\x80', '\x00'};
  write_bytes(dir.file("a.pgm"), "P5 3 1 65535\n" + raster);
  const Image img = load_image(dir.file("a.pgm"));
  EXPECT_EQ(img(0, 0), 0.0);
  EXPECT_EQ(img(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(img(0, 2), 32768.0 / 65535.0);
}

TEST(LoadImage, Errors) {
  TempDir dir;
  write_bytes(dir.file("p7.pam"), "P7\nWIDTH 2\n");
  EXPECT_THROW(load_image(dir.file("p7.pam")), FormatError);
  write_bytes(dir.file("color.ppm"), "P6\n1 1\n255\nabc");
  EXPECT_THROW(load_image(dir.file("color.ppm")), FormatError);
  write_bytes(dir.file("zero.pgm"), "P5\n0 4\n255\n");
  EXPECT_THROW(load_image(dir.file("zero.pgm")), FormatError);
  write_bytes(dir.file("short.pgm"), "P5\n4 4\n255\nabc");
  EXPECT_THROW(load_image(dir.file("short.pgm")), FormatError);
  write_bytes(dir.file("big.pgm"), "P2\n1 1\n10\n11\n");
  EXPECT_THROW(load_image(dir.file("big.pgm")), FormatError);
  EXPECT_THROW(load_image(dir.file("missing.pgm")), IoError);
}

namespace {
void write_png(const std::string &path, std::uint32_t w, std::uint32_t h,
               std::uint32_t format, const std::vector<png_byte> &data) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = w;
  png.height = h;
  png.format = format;
  ASSERT_TRUE(png_image_write_to_file(&png, path.c_str(), 0, data.data(), 0,
                                      nullptr));
}
} // namespace

TEST(LoadImage, GrayscalePng) {
  TempDir dir;
  write_png(dir.file("g.png"), 3, 2, PNG_FORMAT_GRAY, {0, 51, 102, 153, 204, 255});
  const Image img = load_image(dir.file("g.png"));
  ASSERT_EQ(img.rows(), 2u);
  ASSERT_EQ(img.cols(), 3u);
  EXPECT_DOUBLE_EQ(img(0, 1), 0.2);
  EXPECT_DOUBLE_EQ(img(1, 2), 1.0);
}

TEST(LoadImage, ColorPngRejected) {
  TempDir dir;
  write_png(dir.file("c.png"), 1, 1, PNG_FORMAT_RGB, {1, 2, 3});
  EXPECT_THROW(load_image(dir.file("c.png")), FormatError);
}

TEST(SaveImage, QuantizationRules) {
  TempDir dir;
  Image img(1, 4);
  img(0, 0) = 1.0;
  img(0, 1) = 0.5;
  img(0, 2) = -0.2;
  img(0, 3) = 1.7;
  save_image(img, dir.file("o.pgm"));
  const auto bytes = read_bytes(dir.file("o.pgm"));
  ASSERT_EQ(bytes, std::string("P5\n4 1\n255\n") + '\xff' + '\x80' + '\x00' +
                       '\xff');
}

TEST(SaveImage, AllOnesGivesAll255) {
  TempDir dir;
  save_image(Image(8, 8, 1.0), dir.file("o.pgm"));
  const auto bytes = read_bytes(dir.file("o.pgm"));
  const std::string header = "P5\n8 8\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 64);
  for (std::size_t i = header.size(); i < bytes.size(); ++i)
    EXPECT_EQ(static_cast<unsigned char>(bytes[i]), 255);
}

TEST(SaveImage, UnwritablePath) {
  EXPECT_THROW(save_image(Image(2, 2), "/nonexistent-dir/x/y.pgm"), IoError);
}

TEST(SaveImage, RoundTripProperty) {
  TempDir dir;
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 1 + rng.below(40), cols = 1 + rng.below(40);
    Image grid(rows, cols), any(rows, cols);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid.pixels()[i] = static_cast<double>(rng.below(256)) / 255.0;
      any.pixels()[i] = rng.uniform01();
    }
    save_image(grid, dir.file("g.pgm"));
    EXPECT_EQ(load_image(dir.file("g.pgm")), grid);
    save_image(any, dir.file("a.pgm"));
    const Image back = load_image(dir.file("a.pgm"));
    for (std::size_t i = 0; i < any.size(); ++i)
      EXPECT_LE(std::abs(back.pixels()[i] - any.pixels()[i]), 1.0 / 510 + 1e-12);
  }
}

TEST(ExtractPatches, Examples) {
  Rng rng(1);
  const Image img = destripe::testing::random_image(64, 64, rng);
  const auto one = extract_patches(img, 64, 64, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], img);

  EXPECT_EQ(extract_patches(Image(64, 96), 64, 64, 32).size(), 2u);
  EXPECT_THROW(extract_patches(Image(63, 64), 64, 64, 1), InvalidArgument);
  EXPECT_THROW(extract_patches(img, 8, 8, 0), InvalidArgument);
}

TEST(ExtractPatches, CountFormula) {
  for (std::size_t n : {10u, 17u, 33u})
    for (std::size_t m : {9u, 20u})
      for (std::size_t stride : {1u, 3u, 5u}) {
        const auto patches = extract_patches(Image(n, m), 4, 6, stride);
        EXPECT_EQ(patches.size(), ((n - 4) / stride + 1) * ((m - 6) / stride + 1));
      }
}

TEST(ExtractPatches, NonOverlappingTilesPartitionImage) {
  Rng rng(5);
  const Image img = destripe::testing::random_image(48, 32, rng);
  const auto patches = extract_patches(img, 16, 8, 8);
  // With stride != patch height this overlaps; use a matching stride.
  const auto tiles = extract_patches(img, 16, 16, 16);
  ASSERT_EQ(tiles.size(), 6u);
  Image rebuilt(48, 32, -1.0);
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const std::size_t r0 = (k / 2) * 16, c0 = (k % 2) * 16;
    for (std::size_t c = 0; c < 16; ++c)
      for (std::size_t r = 0; r < 16; ++r) {
        EXPECT_EQ(rebuilt(r0 + r, c0 + c), -1.0);
        rebuilt(r0 + r, c0 + c) = tiles[k](r, c);
      }
  }
  EXPECT_EQ(rebuilt, img);
  EXPECT_FALSE(patches.empty());
}

TEST(SplitDataset, EightyFiveFifteen) {
  std::vector<int> items(100);
  std::iota(items.begin(), items.end(), 0);
  const auto split = split_dataset(items, 0.85, 7);
  EXPECT_EQ(split.train.size(), 85u);
  EXPECT_EQ(split.validation.size(), 15u);
}

TEST(SplitDataset, DeterministicDisjointCovering) {
  std::vector<std::string> items;
  for (int i = 0; i < 37; ++i)
    items.push_back("img" + std::to_string(i));
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const auto a = split_dataset(items, 0.7, seed);
    const auto b = split_dataset(items, 0.7, seed);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.validation, b.validation);
    std::set<std::string> all(a.train.begin(), a.train.end());
    for (const auto &v : a.validation)
      EXPECT_TRUE(all.insert(v).second) << v << " in both sets";
    EXPECT_EQ(all, std::set<std::string>(items.begin(), items.end()));
  }
  EXPECT_NE(split_dataset(items, 0.7, 1).train, split_dataset(items, 0.7, 2).train);
}

TEST(SplitDataset, SingleItemGoesToTrain) {
  const auto split = split_dataset(std::vector<int>{3}, 0.85, 0);
  EXPECT_EQ(split.train.size(), 1u);
  EXPECT_TRUE(split.validation.empty());
}

TEST(SplitDataset, Errors) {
  EXPECT_THROW(split_dataset(std::vector<int>{}, 0.85, 0), InvalidArgument);
  EXPECT_THROW(split_dataset(std::vector<int>{1, 2}, 1.0, 0), InvalidArgument);
}

TEST(SyntheticScenes, DeterministicAndOnByteGrid) {
  for (auto kind : {SceneKind::mixed, SceneKind::vertical, SceneKind::midgray}) {
    const Image a = synthesize_scene(40, 50, kind, 3);
    EXPECT_EQ(a, synthesize_scene(40, 50, kind, 3));
    EXPECT_NE(a, synthesize_scene(40, 50, kind, 4));
    for (double v : a.pixels()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_DOUBLE_EQ(std::round(v * 255.0), v * 255.0);
    }
  }
  for (double v : synthesize_scene(64, 64, SceneKind::midgray, 9).pixels()) {
    EXPECT_GE(v, 0.3 - 1e-12);
    EXPECT_LE(v, 0.7 + 1e-12);
  }
}
