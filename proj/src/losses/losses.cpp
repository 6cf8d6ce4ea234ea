// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cprfl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "cprfl/errors.hpp"

namespace cprfl {

namespace {

void validate(std::span<const double> scores, std::span<const double> labels, double eps) {
  if (scores.size() != labels.size()) {
    throw DimensionError("loss: " + std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) +
                         " labels");
  }
  if (!(eps > 0.0 && eps < 0.5)) throw ArgumentError("loss: eps must lie in (0, 0.5)");
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (labels[j] != 0.0 && labels[j] != 1.0) {
      throw ArgumentError("loss: label " + std::to_string(j) + " is not binary");
    }
    if (!(scores[j] >= 0.0 && scores[j] <= 1.0)) {
      throw ArgumentError("loss: score " + std::to_string(j) + " outside [0, 1]");
    }
  }
}

void validate_gamma(double gamma, const char* what) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ArgumentError(std::string("loss: ") + what + " must be >= 0");
}

double clamp_score(double s, double eps) { return std::clamp(s, eps, 1.0 - eps); }
bool inside(double s, double eps) { return s > eps && s < 1.0 - eps; }

// -(1 - s)^g log(s)
double positive_term(double s, double g) { return -std::pow(1.0 - s, g) * std::log(s); }

double positive_derivative(double s, double g) {
  double d = -std::pow(1.0 - s, g) / s;
  if (g != 0.0) d += g * std::pow(1.0 - s, g - 1.0) * std::log(s);
  return d;
}

// -t^g log(1 - t); zero at t = 0 for every g, including 0^0 log(1) = 0.
double negative_term(double t, double g) {
  if (t <= 0.0) return 0.0;
  return -std::pow(t, g) * std::log1p(-t);
}

double negative_derivative(double t, double g) {
  if (t <= 0.0) return 0.0;
  double d = std::pow(t, g) / (1.0 - t);
  if (g != 0.0) d -= g * std::pow(t, g - 1.0) * std::log1p(-t);
  return d;
}

struct ElementLoss {
  double value = 0.0;
  double d_logit = 0.0;
};

// Loss of one class evaluated from its logit. Both s and 1 - s come straight
// from the logit, so terms like log(1 - s) keep full precision when s is
// close to 1 instead of inheriting the rounding error of 1 - fl(s).
ElementLoss element_from_logit(double z, bool positive, const LossConfig& cfg) {
  const double e = std::exp(-std::abs(z));
  double s = z >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  double sc = z >= 0.0 ? e / (1.0 + e) : 1.0 / (1.0 + e);
  const bool clamped = s <= cfg.eps || sc <= cfg.eps;
  if (s <= cfg.eps) {
    s = cfg.eps;
    sc = 1.0 - cfg.eps;
  } else if (sc <= cfg.eps) {
    s = 1.0 - cfg.eps;
    sc = cfg.eps;
  }

  double value = 0.0;
  double d_score = 0.0;
  const auto modulated_log = [](double base, double g, double log_arg, double inv) {
    // value and derivative of -base^g log(arg) where d(arg)/ds = -d(base)/ds
    // and inv = 1 / arg.
    const double v = -std::pow(base, g) * std::log(log_arg);
    double d = std::pow(base, g) * inv;
    if (g != 0.0) d -= g * std::pow(base, g - 1.0) * std::log(log_arg);
    return std::pair{v, d};
  };
  switch (cfg.kind) {
    case LossKind::kBce:
      value = positive ? -std::log(s) : -std::log(sc);
      d_score = positive ? -1.0 / s : 1.0 / sc;
      break;
    case LossKind::kFocal:
    case LossKind::kAsl: {
      const double g_pos = cfg.gamma_pos;
      const double g_neg = cfg.kind == LossKind::kAsl ? cfg.gamma_neg : cfg.gamma_pos;
      const double mu = cfg.kind == LossKind::kAsl ? cfg.mu : 0.0;
      if (positive) {
        // -(1 - s)^g log(s): mirror of the negative form with base 1 - s.
        const auto [v, d] = modulated_log(sc, g_pos, s, 1.0 / s);
        value = v;
        d_score = -d;
      } else {
        const double t = s - mu;
        if (t > 0.0) {
          const auto [v, d] = modulated_log(t, g_neg, sc + mu, 1.0 / (sc + mu));
          value = v;
          d_score = d;
        }
      }
      break;
    }
  }
  return {value, clamped ? 0.0 : d_score * s * sc};
}

}  // namespace

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "asl") return LossKind::kAsl;
  if (name == "bce") return LossKind::kBce;
  if (name == "focal") return LossKind::kFocal;
  throw ArgumentError("unknown loss '" + name + "' (expected asl, bce or focal)");
}

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kAsl:
      return "asl";
    case LossKind::kBce:
      return "bce";
    case LossKind::kFocal:
      return "focal";
  }
  return "asl";
}

double asl_loss(std::span<const double> scores, std::span<const double> labels, const AslConfig& cfg) {
  validate(scores, labels, cfg.eps);
  validate_gamma(cfg.gamma_pos, "gamma_pos");
  validate_gamma(cfg.gamma_neg, "gamma_neg");
  if (!(cfg.mu >= 0.0 && cfg.mu < 1.0)) throw ArgumentError("asl: mu must lie in [0, 1)");
  double total = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double s = clamp_score(scores[j], cfg.eps);
    if (labels[j] == 1.0) {
      total += positive_term(s, cfg.gamma_pos);
    } else {
      total += negative_term(std::max(s - cfg.mu, 0.0), cfg.gamma_neg);
    }
  }
  return total;
}

std::vector<double> asl_grad(std::span<const double> scores, std::span<const double> labels, const AslConfig& cfg) {
  validate(scores, labels, cfg.eps);
  validate_gamma(cfg.gamma_pos, "gamma_pos");
  validate_gamma(cfg.gamma_neg, "gamma_neg");
  if (!(cfg.mu >= 0.0 && cfg.mu < 1.0)) throw ArgumentError("asl: mu must lie in [0, 1)");
  std::vector<double> grad(scores.size(), 0.0);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!inside(scores[j], cfg.eps)) continue;
    const double s = scores[j];
    if (labels[j] == 1.0) {
      grad[j] = positive_derivative(s, cfg.gamma_pos);
    } else {
      // Subgradient 0 at the kink s == mu.
      grad[j] = negative_derivative(std::max(s - cfg.mu, 0.0), cfg.gamma_neg);
    }
  }
  return grad;
}

double bce_loss(std::span<const double> scores, std::span<const double> labels, double eps) {
  validate(scores, labels, eps);
  double total = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double s = clamp_score(scores[j], eps);
    total -= labels[j] == 1.0 ? std::log(s) : std::log1p(-s);
  }
  return total;
}

std::vector<double> bce_grad(std::span<const double> scores, std::span<const double> labels, double eps) {
  validate(scores, labels, eps);
  std::vector<double> grad(scores.size(), 0.0);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!inside(scores[j], eps)) continue;
    grad[j] = labels[j] == 1.0 ? -1.0 / scores[j] : 1.0 / (1.0 - scores[j]);
  }
  return grad;
}

double focal_loss(std::span<const double> scores, std::span<const double> labels, double gamma, double eps) {
  validate(scores, labels, eps);
  validate_gamma(gamma, "gamma");
  double total = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double s = clamp_score(scores[j], eps);
    if (labels[j] == 1.0) {
      total -= std::pow(1.0 - s, gamma) * std::log(s);
    } else {
      total -= std::pow(s, gamma) * std::log1p(-s);
    }
  }
  return total;
}

std::vector<double> focal_grad(std::span<const double> scores, std::span<const double> labels, double gamma,
                               double eps) {
  validate(scores, labels, eps);
  validate_gamma(gamma, "gamma");
  std::vector<double> grad(scores.size(), 0.0);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!inside(scores[j], eps)) continue;
    const double s = scores[j];
    if (labels[j] == 1.0) {
      double d = -std::pow(1.0 - s, gamma) / s;
      if (gamma != 0.0) d += gamma * std::pow(1.0 - s, gamma - 1.0) * std::log(s);
      grad[j] = d;
    } else {
      double d = std::pow(s, gamma) / (1.0 - s);
      if (gamma != 0.0) d -= gamma * std::pow(s, gamma - 1.0) * std::log1p(-s);
      grad[j] = d;
    }
  }
  return grad;
}

double loss_value(std::span<const double> scores, std::span<const double> labels, const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::kAsl:
      return asl_loss(scores, labels, cfg.asl());
    case LossKind::kBce:
      return bce_loss(scores, labels, cfg.eps);
    case LossKind::kFocal:
      return focal_loss(scores, labels, cfg.gamma_pos, cfg.eps);
  }
  throw ArgumentError("unknown loss kind");
}

std::vector<double> loss_grad(std::span<const double> scores, std::span<const double> labels, const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::kAsl:
      return asl_grad(scores, labels, cfg.asl());
    case LossKind::kBce:
      return bce_grad(scores, labels, cfg.eps);
    case LossKind::kFocal:
      return focal_grad(scores, labels, cfg.gamma_pos, cfg.eps);
  }
  throw ArgumentError("unknown loss kind");
}

Tensor batch_loss(Graph& graph, const Tensor& scores, std::span<const double> labels, const LossConfig& cfg) {
  if (labels.size() != scores.size()) {
    throw DimensionError("batch_loss: " + std::to_string(labels.size()) + " labels for scores " +
                         shape_to_string(scores.shape()));
  }
  const std::size_t n = scores.rows(), c = scores.cols();
  const auto S = scores.data();
  std::vector<double> grad(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row_s = S.subspan(i * c, c);
    auto row_y = labels.subspan(i * c, c);
    total += loss_value(row_s, row_y, cfg);
    auto g = loss_grad(row_s, row_y, cfg);
    std::copy(g.begin(), g.end(), grad.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (auto& v : grad) v *= inv_n;
  return graph.custom({scores}, {1}, {total * inv_n},
                      [scores, grad = std::move(grad)](std::span<const double> out_grad) mutable {
                        auto gs = scores.grad_buffer();
                        for (std::size_t k = 0; k < gs.size(); ++k) gs[k] += out_grad[0] * grad[k];
                      },
                      loss_kind_name(cfg.kind));
}

Tensor batch_loss_from_logits(Graph& graph, const Tensor& logits, std::span<const double> labels,
                              const LossConfig& cfg) {
  if (labels.size() != logits.size()) {
    throw DimensionError("batch_loss_from_logits: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_to_string(logits.shape()));
  }
  if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw ArgumentError("loss: eps must lie in (0, 0.5)");
  validate_gamma(cfg.gamma_pos, "gamma_pos");
  validate_gamma(cfg.gamma_neg, "gamma_neg");
  if (!(cfg.mu >= 0.0 && cfg.mu < 1.0)) throw ArgumentError("asl: mu must lie in [0, 1)");
  const auto Z = logits.data();
  const std::size_t n = logits.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> grad(Z.size());
  double total = 0.0;
  for (std::size_t k = 0; k < Z.size(); ++k) {
    if (labels[k] != 0.0 && labels[k] != 1.0) throw ArgumentError("loss: label " + std::to_string(k) + " is not binary");
    if (!std::isfinite(Z[k])) throw NonFiniteError("loss: logit " + std::to_string(k) + " is not finite");
    const auto el = element_from_logit(Z[k], labels[k] == 1.0, cfg);
    total += el.value;
    grad[k] = el.d_logit * inv_n;
  }
  return graph.custom({logits}, {1}, {total * inv_n},
                      [logits, grad = std::move(grad)](std::span<const double> out_grad) mutable {
                        auto gz = logits.grad_buffer();
                        for (std::size_t k = 0; k < gz.size(); ++k) gz[k] += out_grad[0] * grad[k];
                      },
                      loss_kind_name(cfg.kind) + "_logits");
}

}  // namespace cprfl
