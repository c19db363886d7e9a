// SPDX-License-Identifier: Apache-2.0
/**
 * @file   test_noise.cpp
 * @brief  Stripe noise statistics and sidecar records.
 */
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "destripe/dataset.hpp"
#include "destripe/metrics.hpp"
#include "destripe/noise.hpp"
#include "test_util.hpp"

using namespace destripe;

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a(derive_seed(7, 0)), b(derive_seed(7, 0)), c(derive_seed(7, 1));
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
  }
  EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(0, 1));
}

TEST(Rng, BelowStaysInRange) {
  Rng rng(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits)
    EXPECT_GT(h, 800);
}

TEST(SampleStripeField, ZeroBetaIsZeroField) {
  for (auto mode : {NoiseMode::sampled_sigma, NoiseMode::fixed_sigma}) {
    const auto f = sample_stripe_field(33, 0.0, mode, 5);
    EXPECT_EQ(f.sigma, 0.0);
    ASSERT_EQ(f.width(), 33u);
    for (double s : f.offsets)
      EXPECT_EQ(s, 0.0);
  }
}

TEST(SampleStripeField, FixedModeSigmaEqualsBeta) {
  const auto f = sample_stripe_field(4, 0.17, NoiseMode::fixed_sigma, 1);
  EXPECT_EQ(f.sigma, 0.17);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto g = sample_stripe_field(4, 0.2, NoiseMode::sampled_sigma, seed);
    EXPECT_GE(g.sigma, 0.0);
    EXPECT_LT(g.sigma, 0.2);
  }
}

TEST(SampleStripeField, Errors) {
  EXPECT_THROW(sample_stripe_field(4, -0.1, NoiseMode::fixed_sigma, 0),
               InvalidArgument);
  EXPECT_THROW(sample_stripe_field(0, 0.1, NoiseMode::fixed_sigma, 0),
               InvalidArgument);
  EXPECT_THROW(parse_noise_mode("gaussian"), InvalidArgument);
  EXPECT_EQ(parse_noise_mode("fixed-sigma"), NoiseMode::fixed_sigma);
  EXPECT_EQ(parse_noise_mode("sampled"), NoiseMode::sampled_sigma);
}

TEST(SampleStripeField, SampledModeSecondMomentIsBetaSquaredOverThree) {
  const double beta = 0.25;
  const std::size_t fields = 200000, width = 8;
  double sum = 0.0;
  for (std::size_t k = 0; k < fields; ++k)
    for (double s : sample_stripe_field(width, beta, NoiseMode::sampled_sigma,
                                        derive_seed(11, k))
                        .offsets)
      sum += s * s;
  const double expected = beta * beta / 3.0;
  EXPECT_NEAR(expected, 0.0208333333333, 1e-12);
  EXPECT_NEAR(sum / static_cast<double>(fields * width), expected,
              0.01 * expected);
}

TEST(SampleStripeField, FixedModeVarianceIsBetaSquared) {
  const double beta = 0.1;
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < 4; ++k)
    for (double s : sample_stripe_field(250000, beta, NoiseMode::fixed_sigma,
                                        derive_seed(12, k))
                        .offsets) {
      sum += s;
      sum2 += s * s;
      ++n;
    }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  EXPECT_NEAR(var, 0.01, 0.01 * 0.01);
}

TEST(ApplyStripes, Examples) {
  Image half(5, 3, 0.5);
  StripeField field;
  field.offsets = {0.2, 0.0, 0.0};
  const Image y = apply_stripes(half, field);
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_DOUBLE_EQ(y(r, 0), 0.7);
    EXPECT_EQ(y(r, 1), 0.5);
  }
  field.offsets = {0.3, -0.95, 0.0};
  const Image z = apply_stripes(Image(5, 3, 0.9), field);
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_EQ(z(r, 0), 1.0);
    EXPECT_EQ(z(r, 1), 0.0);
  }
  StripeField zero;
  zero.offsets.assign(3, 0.0);
  Rng rng(2);
  const Image img = destripe::testing::random_image(5, 3, rng);
  EXPECT_EQ(apply_stripes(img, zero), img);
}

TEST(ApplyStripes, WidthMismatch) {
  StripeField field;
  field.offsets = {0.1, 0.2};
  EXPECT_THROW(apply_stripes(Image(4, 3), field), InvalidArgument);
}

TEST(ApplyStripes, ColumnConstancy) {
  const auto scenes = synthesize_scenes(6, 32, 40, SceneKind::midgray, 1);
  for (const auto &s : corrupt_dataset(scenes, 0.2, NoiseMode::fixed_sigma, 4)) {
    ASSERT_EQ(s.field.width(), 40u);
    for (std::size_t c = 0; c < 40; ++c)
      for (std::size_t r = 0; r < 32; ++r)
        ASSERT_EQ(s.noisy(r, c),
                  std::clamp(s.clean(r, c) + s.field.offsets[c], 0.0, 1.0));
  }
}

TEST(ApplyStripes, OffsetIsIdenticalAcrossRowsOfColumn) {
  Image flat(16, 10, 0.5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto field =
        sample_stripe_field(10, 0.1, NoiseMode::sampled_sigma, seed);
    const Image y = apply_stripes(flat, field);
    for (std::size_t c = 0; c < 10; ++c)
      for (std::size_t r = 1; r < 16; ++r)
        EXPECT_EQ(y(r, c), y(0, c));
  }
}

TEST(CorruptDataset, EmptyAndZeroBeta) {
  EXPECT_TRUE(corrupt_dataset({}, 0.1, NoiseMode::fixed_sigma, 0).empty());
  const auto scenes = synthesize_scenes(3, 20, 24, SceneKind::mixed, 2);
  for (const auto &s : corrupt_dataset(scenes, 0.0, NoiseMode::sampled_sigma, 9))
    EXPECT_EQ(s.noisy, s.clean);
  EXPECT_THROW(corrupt_dataset(scenes, -1.0, NoiseMode::fixed_sigma, 0),
               InvalidArgument);
}

TEST(CorruptDataset, FlatHalfAtBetaPointOneIsTwentyDecibels) {
  std::vector<Image> flats(50, Image(32, 256, 0.5));
  const auto set = corrupt_dataset(flats, 0.1, NoiseMode::fixed_sigma, 21);
  double total = 0.0;
  for (const auto &s : set)
    total += psnr(s.clean, s.noisy).db;
  EXPECT_NEAR(total / set.size(), 20.0, 0.3);
}

TEST(CorruptDataset, DeterministicPerSeed) {
  const auto scenes = synthesize_scenes(4, 16, 16, SceneKind::mixed, 3);
  const auto a = corrupt_dataset(scenes, 0.2, NoiseMode::sampled_sigma, 8);
  const auto b = corrupt_dataset(scenes, 0.2, NoiseMode::sampled_sigma, 8);
  const auto c = corrupt_dataset(scenes, 0.2, NoiseMode::sampled_sigma, 9);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].noisy, b[k].noisy);
    EXPECT_EQ(a[k].field.offsets, b[k].field.offsets);
    EXPECT_NE(a[k].field.offsets, c[k].field.offsets);
  }
  EXPECT_NE(a[0].field.offsets, a[1].field.offsets);
}
