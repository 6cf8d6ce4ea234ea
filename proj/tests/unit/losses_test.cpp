// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cprfl/errors.hpp"
#include "cprfl/graph.hpp"
#include "cprfl/losses.hpp"

namespace cprfl {
namespace {

using Vec = std::vector<double>;

TEST(AslTest, EasyNegativeBelowMarginIsZero) {
  const AslConfig cfg;
  EXPECT_EQ(asl_loss(Vec{0.03}, Vec{0.0}, cfg), 0.0);
  EXPECT_EQ(asl_grad(Vec{0.03}, Vec{0.0}, cfg)[0], 0.0);
  EXPECT_EQ(asl_loss(Vec{0.05}, Vec{0.0}, cfg), 0.0);
}

TEST(AslTest, HandNegativeValue) {
  // (0.2 - 0.05)^4 * -log(1 - 0.15)
  EXPECT_NEAR(asl_loss(Vec{0.2}, Vec{0.0}, AslConfig{}), 8.2275e-5, 1e-8);
}

TEST(AslTest, PositiveWithoutFocusingIsLogLoss) {
  EXPECT_NEAR(asl_loss(Vec{0.5}, Vec{1.0}, AslConfig{}), 0.6931472, 1e-7);
}

TEST(AslTest, ReducesToBceWithoutFocusingOrMargin) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  AslConfig cfg{0.0, 0.0, 0.0, 1e-8};
  for (int t = 0; t < 50; ++t) {
    Vec s{u(rng), u(rng), u(rng)};
    Vec y{double(t % 2), 1.0, 0.0};
    EXPECT_NEAR(asl_loss(s, y, cfg), bce_loss(s, y), 1e-12);
  }
}

TEST(AslTest, SaturatedScoresStayFinite) {
  const AslConfig cfg;
  EXPECT_TRUE(std::isfinite(asl_loss(Vec{0.0, 1.0, 1.0}, Vec{1.0, 0.0, 1.0}, cfg)));
  for (double g : asl_grad(Vec{0.0, 1.0}, Vec{1.0, 0.0}, cfg)) EXPECT_EQ(g, 0.0);
}

TEST(AslTest, RejectsBadInput) {
  const AslConfig cfg;
  EXPECT_THROW(asl_loss(Vec{0.5}, Vec{0.5}, cfg), ArgumentError);
  EXPECT_THROW(asl_loss(Vec{1.5}, Vec{1.0}, cfg), ArgumentError);
  EXPECT_THROW(asl_loss(Vec{0.5, 0.5}, Vec{1.0}, cfg), DimensionError);
  EXPECT_THROW(asl_loss(Vec{0.5}, Vec{1.0}, AslConfig{-1.0, 4.0, 0.05, 1e-8}), ArgumentError);
}

TEST(FocalTest, HandPositiveValue) {
  // (1 - 0.9)^2 * -log(0.9)
  EXPECT_NEAR(focal_loss(Vec{0.9}, Vec{1.0}, 2.0), 1.05361e-3, 1e-8);
}

TEST(FocalTest, ZeroGammaIsBce) {
  Vec s{0.2, 0.7, 0.95};
  Vec y{1.0, 0.0, 1.0};
  EXPECT_NEAR(focal_loss(s, y, 0.0), bce_loss(s, y), 1e-12);
}

TEST(BceTest, HalfScoresGiveLogTwoPerClass) {
  const Vec s(7, 0.5);
  const Vec y{1, 0, 0, 1, 0, 1, 1};
  EXPECT_NEAR(bce_loss(s, y), 7.0 * std::log(2.0), 1e-12);
}

struct LossCase {
  LossConfig cfg;
  const char* name;
};

std::vector<LossCase> all_losses() {
  LossConfig asl;
  LossConfig bce;
  bce.kind = LossKind::kBce;
  LossConfig focal;
  focal.kind = LossKind::kFocal;
  focal.gamma_pos = 2.0;
  LossConfig asl_focused = asl;
  asl_focused.gamma_pos = 1.0;
  return {{asl, "asl"}, {bce, "bce"}, {focal, "focal"}, {asl_focused, "asl_focused"}};
}

TEST(LossGradTest, MatchesCentralDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.06, 0.94);
  for (const auto& lc : all_losses()) {
    for (int t = 0; t < 40; ++t) {
      Vec s{u(rng), u(rng), u(rng), u(rng)};
      Vec y{1.0, 0.0, double(t % 2), 0.0};
      const auto grad = loss_grad(s, y, lc.cfg);
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double h = 1e-6;
        Vec plus = s, minus = s;
        plus[j] += h;
        minus[j] -= h;
        const double numeric = (loss_value(plus, y, lc.cfg) - loss_value(minus, y, lc.cfg)) / (2 * h);
        EXPECT_NEAR(grad[j], numeric, 1e-6 * std::max(1.0, std::abs(numeric))) << lc.name << " j=" << j;
      }
    }
  }
}

TEST(LogitLossTest, AgreesWithScoreForm) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 3.0);
  for (const auto& lc : all_losses()) {
    Vec logits(24), labels(24);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      logits[k] = z(rng);
      labels[k] = (k % 3 == 0) ? 1.0 : 0.0;
    }
    Tensor zt = Tensor::from({4, 6}, logits, true);
    Graph g;
    Tensor via_logits = batch_loss_from_logits(g, zt, labels, lc.cfg);
    g.backward(via_logits);
    const Vec dz(zt.grad().begin(), zt.grad().end());

    Tensor zt2 = Tensor::from({4, 6}, logits, true);
    Graph g2;
    Tensor via_scores = batch_loss(g2, g2.sigmoid(zt2), labels, lc.cfg);
    g2.backward(via_scores);
    EXPECT_NEAR(via_logits.item(), via_scores.item(), 1e-10 * std::max(1.0, via_scores.item())) << lc.name;
    for (std::size_t k = 0; k < dz.size(); ++k) EXPECT_NEAR(dz[k], zt2.grad()[k], 1e-10) << lc.name << " k=" << k;
  }
}

TEST(LogitLossTest, NonBinaryLabelAndNonFiniteLogitRejected) {
  Graph g;
  LossConfig cfg;
  EXPECT_THROW(batch_loss_from_logits(g, Tensor::from({2}, {0.0, 1.0}), Vec{0.0, 0.3}, cfg), ArgumentError);
  EXPECT_THROW(batch_loss_from_logits(g, Tensor::from({2}, {0.0, NAN}), Vec{0.0, 1.0}, cfg), NonFiniteError);
  EXPECT_THROW(batch_loss_from_logits(g, Tensor::from({2}, {0.0, 1.0}), Vec{0.0}, cfg), DimensionError);
}

TEST(LogitLossTest, ExtremeLogitsAreClampedWithZeroGradient) {
  LossConfig bce;
  bce.kind = LossKind::kBce;
  Tensor z = Tensor::from({1, 2}, {60.0, -60.0}, true);
  Graph g;
  Tensor loss = batch_loss_from_logits(g, z, Vec{0.0, 1.0}, bce);
  EXPECT_NEAR(loss.item(), -2.0 * std::log(1e-8), 1e-6);
  g.backward(loss);
  EXPECT_EQ(z.grad()[0], 0.0);
  EXPECT_EQ(z.grad()[1], 0.0);
}

TEST(BatchLossTest, MeanOverSamples) {
  const Vec s{0.5, 0.5, 0.5, 0.5};
  const Vec y{1.0, 0.0, 0.0, 1.0};
  LossConfig bce;
  bce.kind = LossKind::kBce;
  Graph g;
  Tensor loss = batch_loss(g, Tensor::from({2, 2}, s), y, bce);
  EXPECT_NEAR(loss.item(), 2.0 * std::log(2.0), 1e-12);
}

TEST(LossNamesTest, RoundTrip) {
  for (auto k : {LossKind::kAsl, LossKind::kBce, LossKind::kFocal}) {
    EXPECT_EQ(loss_kind_from_name(loss_kind_name(k)), k);
  }
  EXPECT_THROW(loss_kind_from_name("hinge"), ArgumentError);
}

}  // namespace
}  // namespace cprfl
