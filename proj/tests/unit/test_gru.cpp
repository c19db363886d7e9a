// SPDX-License-Identifier: Apache-2.0
/**
 * @file   test_gru.cpp
 * @brief  GRU cell forward values and gradient checks.
 */
#include <gtest/gtest.h>

#include <cmath>

#include "destripe/neural/gradient_check.hpp"
#include "destripe/neural/gru.hpp"

using namespace destripe;
using namespace destripe::nn;

namespace {

// Scalar reference step written directly from the gate equations.
std::vector<double> reference_step(const GruParams<double> &p,
                                   const std::vector<double> &x,
                                   const std::vector<double> &h) {
  const std::size_t d = x.size(), hs = h.size();
  auto sig = [](double a) { return 1.0 / (1.0 + std::exp(-a)); };
  std::vector<double> z(hs), r(hs), out(hs);
  for (std::size_t i = 0; i < hs; ++i) {
    double az = p.b_z(i, 0), ar = p.b_r(i, 0);
    for (std::size_t j = 0; j < d; ++j) {
      az += p.w_z(i, j) * x[j];
      ar += p.w_r(i, j) * x[j];
    }
    for (std::size_t j = 0; j < hs; ++j) {
      az += p.u_z(i, j) * h[j];
      ar += p.u_r(i, j) * h[j];
    }
    z[i] = sig(az);
    r[i] = sig(ar);
  }
  for (std::size_t i = 0; i < hs; ++i) {
    double ah = p.b_h(i, 0);
    for (std::size_t j = 0; j < d; ++j)
      ah += p.w_h(i, j) * x[j];
    for (std::size_t j = 0; j < hs; ++j)
      ah += p.u_h(i, j) * (r[j] * h[j]);
    out[i] = (1.0 - z[i]) * h[i] + z[i] * std::tanh(ah);
  }
  return out;
}

GruParams<double> random_params(std::size_t d, std::size_t hs,
                                std::uint64_t seed, double sd = 0.5) {
  GruParams<double> p(d, hs);
  Rng rng(seed);
  fill_normal(p, sd, rng);
  return p;
}

} // namespace

TEST(GruCell, ZeroParametersGiveZeroState) {
  GruParams<double> p(2, 3);
  GruCache<double> cache;
  const std::vector<double> x = {0.3, -0.7}, h(3, 0.0);
  const auto out = gru_cell_forward<double>(p, x, h, cache);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(cache.z[i], 0.5);
    EXPECT_EQ(cache.r[i], 0.5);
    EXPECT_EQ(cache.cand[i], 0.0);
    EXPECT_EQ(out[i], 0.0);
  }
}

TEST(GruCell, OpenUpdateGateCopiesCandidate) {
  auto p = random_params(2, 3, 1);
  p.b_z.fill(60.0);
  GruCache<double> cache;
  const std::vector<double> x = {0.1, 0.2}, h = {0.5, -0.5, 0.9};
  const auto out = gru_cell_forward<double>(p, x, h, cache);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(out[i], cache.cand[i], 1e-12);
}

TEST(GruCell, MatchesScalarReference) {
  const auto p = random_params(2, 3, 2024);
  Rng rng(7);
  std::vector<double> x = {rng.normal(), rng.normal()};
  std::vector<double> h = {rng.uniform(-1, 1), rng.uniform(-1, 1),
                           rng.uniform(-1, 1)};
  GruCache<double> cache;
  for (int step = 0; step < 5; ++step) {
    const auto expected = reference_step(p, x, h);
    const auto out = gru_cell_forward<double>(p, x, h, cache);
    for (std::size_t i = 0; i < 3; ++i)
      EXPECT_NEAR(out[i], expected[i], 1e-14);
    h.assign(out.begin(), out.end());
    x[0] += 0.3;
  }
}

TEST(GruCell, ShapeAndFiniteErrors) {
  GruParams<double> p(2, 3);
  GruCache<double> cache;
  const std::vector<double> x3 = {0, 0, 0}, h(3, 0.0);
  EXPECT_THROW(gru_cell_forward<double>(p, x3, h, cache), InvalidArgument);
  const std::vector<double> bad = {NAN, 0.0};
  EXPECT_THROW(gru_cell_forward<double>(p, bad, h, cache), NumericError);
}

TEST(GruCell, BackwardMatchesFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto p = random_params(2, 3, seed, 0.1);
    Rng rng(seed + 10);
    Matrix<double> x(2, 1), h(3, 1), probe(3, 1);
    fill_normal(x, 0.1, rng);
    fill_normal(h, 0.1, rng);
    fill_normal(probe, 1.0, rng);
    const auto report = check_gru_cell(p, x, h, probe, 1e-6);
    EXPECT_TRUE(report.passed())
        << "worst " << report.worst.tensor << "[" << report.worst.index
        << "] rel " << report.max_rel_error;
    EXPECT_EQ(report.checked, 3u * (2 * 3 + 3 * 3 + 3) + 2 + 3);
  }
}

TEST(GruCell, LargerCellPassesAtOneEMinusFive) {
  auto p = random_params(7, 5, 9, 0.1);
  Rng rng(99);
  Matrix<double> x(7, 1), h(5, 1), probe(5, 1);
  fill_normal(x, 0.1, rng);
  fill_normal(h, 0.1, rng);
  fill_normal(probe, 1.0, rng);
  EXPECT_TRUE(check_gru_cell(p, x, h, probe, 1e-5).passed());
}

TEST(GruCell, ZeroUpstreamGradientGivesZeroGradients) {
  const auto p = random_params(2, 3, 4);
  GruCache<double> cache;
  const std::vector<double> x = {0.4, -0.1}, h = {0.2, 0.1, -0.3};
  gru_cell_forward<double>(p, x, h, cache);
  GruGrads<double> grads(2, 3);
  std::vector<double> gx(2, 9.0), gh(3, 9.0);
  const std::vector<double> zero(3, 0.0);
  gru_cell_backward<double>(p, cache, zero, gx, gh, grads);
  for (double v : gx)
    EXPECT_EQ(v, 0.0);
  for (double v : gh)
    EXPECT_EQ(v, 0.0);
  EXPECT_EQ(grads, GruGrads<double>(2, 3));
}

TEST(GruCell, FullyOpenGateBlocksDirectStatePath) {
  auto p = random_params(2, 3, 5);
  p.b_z.fill(60.0);
  p.u_z.fill(0.0);
  p.u_r.fill(0.0);
  p.u_h.fill(0.0);
  GruCache<double> cache;
  const std::vector<double> x = {0.4, -0.1}, h = {0.2, 0.1, -0.3};
  gru_cell_forward<double>(p, x, h, cache);
  GruGrads<double> grads(2, 3);
  std::vector<double> gx(2), gh(3);
  const std::vector<double> up = {1.0, -2.0, 0.5};
  gru_cell_backward<double>(p, cache, up, gx, gh, grads);
  for (double v : gh)
    EXPECT_NEAR(v, 0.0, 1e-20);
}

TEST(GruCell, StaleCacheRejected) {
  const auto p = random_params(2, 3, 6), q = random_params(2, 3, 6);
  GruCache<double> cache;
  const std::vector<double> x = {0.4, -0.1}, h(3, 0.0), up(3, 1.0);
  gru_cell_forward<double>(p, x, h, cache);
  GruGrads<double> grads(2, 3);
  std::vector<double> gx(2), gh(3);
  EXPECT_THROW(gru_cell_backward<double>(q, cache, up, gx, gh, grads),
               InvalidArgument);
  GruCache<double> empty;
  EXPECT_THROW(gru_cell_backward<double>(p, empty, up, gx, gh, grads),
               InvalidArgument);
}

TEST(GruCell, HiddenStateStaysBounded) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(4, 6, 100 + trial, 3.0);
    std::vector<double> h(6, 0.0), x(4);
    GruCache<double> cache;
    for (int step = 0; step < 30; ++step) {
      for (double &v : x)
        v = rng.normal(0.0, 5.0);
      const auto out = gru_cell_forward<double>(p, x, h, cache);
      for (double v : out)
        ASSERT_LE(std::abs(v), 1.0);
      h.assign(out.begin(), out.end());
    }
  }
}
