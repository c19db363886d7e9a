// SPDX-License-Identifier: Apache-2.0
/**
 * @file   test_optim.cpp
 * @brief  Adam update, gradient clipping and loss tests.
 */
#include <gtest/gtest.h>

#include <cmath>

#include "destripe/neural/adam.hpp"
#include "destripe/neural/gradient_check.hpp"
#include "destripe/neural/loss.hpp"

using namespace destripe;
using namespace destripe::nn;

namespace {
struct Scalar {
  Matrix<double> theta{1, 1}, grad{1, 1};
  std::vector<TensorRef<double>> params() { return {{"theta", &theta}}; }
  std::vector<ConstTensorRef<double>> grads() const { return {{"g", &grad}}; }
};
} // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
  Scalar s;
  s.theta(0, 0) = 0.3;
  auto state = make_adam_state(s.params());
  for (int i = 0; i < 5; ++i)
    ASSERT_TRUE(adam_step(state, s.params(), s.grads()));
  EXPECT_EQ(s.theta(0, 0), 0.3);
  EXPECT_EQ(state.first[0][0], 0.0);
  EXPECT_EQ(state.second[0][0], 0.0);
  EXPECT_EQ(state.step, 5);
}

TEST(Adam, SingleStepScalarHandComputation) {
  Scalar s;
  s.theta(0, 0) = 1.0;
  s.grad(0, 0) = 0.5;
  auto state = make_adam_state(s.params());
  ASSERT_TRUE(adam_step(state, s.params(), s.grads()));
  // m = 0.05, v = 0.00025; corrected m_hat = 0.5, v_hat = 0.25.
  EXPECT_NEAR(state.first[0][0], 0.05, 1e-15);
  EXPECT_NEAR(state.second[0][0], 0.00025, 1e-18);
  const double expected = 1.0 - 1e-3 * 0.5 / (0.5 + 1e-8);
  EXPECT_NEAR(s.theta(0, 0), expected, 1e-15);
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  for (double g : {2.0, -0.01, 1e-4}) {
    Scalar s;
    s.grad(0, 0) = g;
    auto state = make_adam_state(s.params());
    double prev = 0.0, step = 0.0;
    for (int i = 0; i < 200; ++i) {
      ASSERT_TRUE(adam_step(state, s.params(), s.grads()));
      step = s.theta(0, 0) - prev;
      prev = s.theta(0, 0);
    }
    EXPECT_NEAR(step, -1e-3 * g / (std::abs(g) + 1e-8), 1e-12);
  }
}

TEST(Adam, NonFiniteGradientAbortsStep) {
  Scalar s;
  s.theta(0, 0) = 0.2;
  s.grad(0, 0) = 1.0;
  auto state = make_adam_state(s.params());
  ASSERT_TRUE(adam_step(state, s.params(), s.grads()));
  const double before = s.theta(0, 0);
  const auto m = state.first, v = state.second;
  for (double bad : {NAN, INFINITY}) {
    s.grad(0, 0) = bad;
    EXPECT_FALSE(adam_step(state, s.params(), s.grads()));
    EXPECT_EQ(s.theta(0, 0), before);
    EXPECT_EQ(state.first, m);
    EXPECT_EQ(state.second, v);
    EXPECT_EQ(state.step, 1);
  }
}

TEST(Adam, ShapeMismatchThrows) {
  Scalar s;
  Matrix<double> wide(1, 2);
  auto state = make_adam_state(s.params());
  EXPECT_THROW(adam_step(state, s.params(), {{"g", &wide}}), InvalidArgument);
}

TEST(GlobalNorm, SumsAllTensors) {
  Matrix<double> a(1, 2), b(2, 1);
  a(0, 0) = 3.0;
  b(1, 0) = 4.0;
  EXPECT_DOUBLE_EQ(global_norm<double>({{"a", &a}, {"b", &b}}), 5.0);
}

TEST(MseLoss, Examples) {
  Matrix<double> p(1, 1, 0.7), t(1, 1, 0.5);
  const auto r = mse_loss(p, t);
  EXPECT_NEAR(r.loss, 0.04, 1e-15);
  EXPECT_NEAR(r.grad(0, 0), 0.4, 1e-15);
  const auto same = mse_loss(t, t);
  EXPECT_EQ(same.loss, 0.0);
  EXPECT_EQ(same.grad(0, 0), 0.0);
  EXPECT_THROW(mse_loss(Matrix<double>(2, 2), Matrix<double>(2, 1)),
               InvalidArgument);

  const auto img = mse_loss(Image(1, 1, 0.7), Image(1, 1, 0.5));
  EXPECT_NEAR(img.loss, 0.04, 1e-15);
  EXPECT_NEAR(img.grad(0, 0), 0.4, 1e-15);
}

TEST(MseLoss, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  Matrix<double> p(4, 4), t(4, 4);
  fill_normal(p, 0.5, rng);
  fill_normal(t, 0.5, rng);
  const auto r = mse_loss(p, t);
  const double h = 1e-6;
  for (std::size_t i = 0; i < 16; ++i) {
    auto plus = p, minus = p;
    plus.flat()[i] += h;
    minus.flat()[i] -= h;
    const double numeric =
        (mse_loss(plus, t).loss - mse_loss(minus, t).loss) / (2 * h);
    EXPECT_NEAR(r.grad.flat()[i], numeric, 1e-8);
  }
}

TEST(GradientCheck, DetectsSignFlippedTerm) {
  auto p = GruParams<double>(2, 3);
  Rng rng(4);
  fill_normal(p, 0.3, rng);
  Matrix<double> x(2, 1), h(3, 1), probe(3, 1);
  fill_normal(x, 0.3, rng);
  fill_normal(h, 0.3, rng);
  fill_normal(probe, 1.0, rng);

  GruCache<double> cache;
  auto fwd = [&] {
    const auto out = gru_cell_forward<double>(p, x.flat(), h.flat(), cache);
    return dot<double>(out, probe.flat());
  };
  fwd();
  GruGrads<double> grads(2, 3);
  Matrix<double> gx(2, 1), gh(3, 1);
  gru_cell_backward<double>(p, cache, probe.flat(), gx.flat(), gh.flat(), grads);
  for (double &v : grads.w_h.flat())
    v = -v;

  std::vector<TensorRef<double>> wrt;
  std::vector<ConstTensorRef<double>> analytic;
  p.collect("", wrt);
  grads.collect("", analytic);
  const auto report = gradient_check<double>(wrt, analytic, fwd, 1e-5);
  EXPECT_FALSE(report.passed());
  EXPECT_GT(report.max_rel_error, 1.0);
  EXPECT_EQ(report.worst.tensor, "W_h");
  EXPECT_FALSE(report.failures.empty());
}
