// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CPRFL_LOSSES_HPP_
#define CPRFL_LOSSES_HPP_

#include <span>
#include <string>
#include <vector>

#include "cprfl/graph.hpp"
#include "cprfl/tensor.hpp"

namespace cprfl {

/// Asymmetric loss settings. gamma_pos/gamma_neg focus positives/negatives,
/// mu shifts negative probabilities down so easy negatives (s <= mu) vanish.
struct AslConfig {
  double gamma_pos = 0.0;
  double gamma_neg = 4.0;
  double mu = 0.05;
  double eps = 1e-8;
};

enum class LossKind { kAsl, kBce, kFocal };

/// Loss selection as it appears in the training config. Focal uses
/// gamma_pos as its single (symmetric) exponent.
struct LossConfig {
  LossKind kind = LossKind::kAsl;
  double gamma_pos = 0.0;
  double gamma_neg = 4.0;
  double mu = 0.05;
  double eps = 1e-8;

  AslConfig asl() const { return {gamma_pos, gamma_neg, mu, eps}; }
};

LossKind loss_kind_from_name(const std::string& name);
std::string loss_kind_name(LossKind kind);

// Per-sample losses: sums over the c classes of one prediction vector.
// `scores` must lie in [0, 1]; they are clamped to [eps, 1 - eps] before logs.
// `labels` must be exactly 0 or 1.

double asl_loss(std::span<const double> scores, std::span<const double> labels, const AslConfig& cfg);
std::vector<double> asl_grad(std::span<const double> scores, std::span<const double> labels, const AslConfig& cfg);

double bce_loss(std::span<const double> scores, std::span<const double> labels, double eps = 1e-8);
std::vector<double> bce_grad(std::span<const double> scores, std::span<const double> labels, double eps = 1e-8);

double focal_loss(std::span<const double> scores, std::span<const double> labels, double gamma, double eps = 1e-8);
std::vector<double> focal_grad(std::span<const double> scores, std::span<const double> labels, double gamma,
                               double eps = 1e-8);

double loss_value(std::span<const double> scores, std::span<const double> labels, const LossConfig& cfg);
std::vector<double> loss_grad(std::span<const double> scores, std::span<const double> labels, const LossConfig& cfg);

/// Batch objective on a graph: `scores` is n x c (or a length-c vector),
/// `labels` the matching row-major 0/1 values. Returns the mean over samples
/// of the per-sample class sums.
Tensor batch_loss(Graph& graph, const Tensor& scores, std::span<const double> labels, const LossConfig& cfg);

/// Same objective as batch_loss applied to sigmoid(logits), computed from the
/// logits directly. s and 1 - s are both derived from the logit, which keeps
/// the loss accurate when probabilities saturate. Clamping and the zero
/// gradient at clamped or shifted-away entries follow the score form.
Tensor batch_loss_from_logits(Graph& graph, const Tensor& logits, std::span<const double> labels,
                              const LossConfig& cfg);

}  // namespace cprfl

#endif  // CPRFL_LOSSES_HPP_
