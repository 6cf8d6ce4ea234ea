// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "cprfl/data.hpp"
#include "cprfl/errors.hpp"

namespace cprfl {

std::string group_name(Group g) {
  switch (g) {
    case Group::kHead:
      return "head";
    case Group::kMedium:
      return "medium";
    case Group::kTail:
      return "tail";
  }
  return "medium";
}

std::size_t LongTailDataset::tokens() const { return samples.empty() ? 0 : samples.front().features.rows(); }
std::size_t LongTailDataset::feature_dim() const { return samples.empty() ? 0 : samples.front().features.cols(); }

void LongTailDataset::refresh_statistics(std::size_t head_min, std::size_t tail_max) {
  class_counts.assign(classes(), 0);
  for (const auto& s : samples) {
    for (std::size_t j = 0; j < s.labels.size() && j < class_counts.size(); ++j) class_counts[j] += s.labels[j];
  }
  groups = split_groups(class_counts, head_min, tail_max);
}

std::vector<double> LongTailDataset::label_matrix() const {
  std::vector<double> out;
  out.reserve(samples.size() * classes());
  for (const auto& s : samples)
    for (auto y : s.labels) out.push_back(static_cast<double>(y));
  return out;
}

std::vector<Group> split_groups(std::span<const std::size_t> class_counts, std::size_t head_min,
                                std::size_t tail_max) {
  if (!(head_min > tail_max && tail_max >= 1)) {
    throw ArgumentError("split_groups: need head_min > tail_max >= 1, got " + std::to_string(head_min) + ", " +
                        std::to_string(tail_max));
  }
  std::vector<Group> out;
  out.reserve(class_counts.size());
  for (auto n : class_counts) {
    if (n > head_min) {
      out.push_back(Group::kHead);
    } else if (n < tail_max) {
      out.push_back(Group::kTail);
    } else {
      out.push_back(Group::kMedium);
    }
  }
  return out;
}

void GeneratorConfig::validate() const {
  if (c == 0 || v == 0 || d0 == 0) throw ArgumentError("generator: c, v and d0 must be >= 1");
  if (n_max == 0) throw ArgumentError("generator: n_max must be >= 1");
  if (!(pareto_exponent > 0.0) || !std::isfinite(pareto_exponent)) {
    throw ArgumentError("generator: pareto_exponent must be positive");
  }
  if (!(rank_offset > -1.0) || !std::isfinite(rank_offset)) throw ArgumentError("generator: rank_offset must be > -1");
  if (!(co_occurrence_strength >= 0.0 && co_occurrence_strength <= 1.0)) {
    throw ArgumentError("generator: co_occurrence_strength must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ArgumentError("generator: noise_sigma must be >= 0");
  if (test_per_class == 0) throw ArgumentError("generator: test_per_class must be >= 1");
  if (!(head_min > tail_max && tail_max >= 1)) throw ArgumentError("generator: need head_min > tail_max >= 1");
}

std::vector<std::size_t> target_class_counts(const GeneratorConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> counts(cfg.c);
  const double base = 1.0 + cfg.rank_offset;
  for (std::size_t i = 1; i <= cfg.c; ++i) {
    const double ratio = base / (static_cast<double>(i) + cfg.rank_offset);
    const double n = static_cast<double>(cfg.n_max) * std::pow(ratio, cfg.pareto_exponent);
    counts[i - 1] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n)));
  }
  return counts;
}

namespace {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::vector<std::string> default_class_names(std::size_t c) {
  std::vector<std::string> names;
  names.reserve(c);
  for (std::size_t i = 0; i < c; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "class_%02zu", i);
    names.emplace_back(buf);
  }
  return names;
}

struct Context {
  const GeneratorConfig& cfg;
  const std::vector<std::vector<double>>& prototypes;
  const std::vector<std::vector<double>>& affinity;
};

// Draws samples until every class has used up its quota. Each sample gets a
// primary class drawn in proportion to the remaining quota, then co-occurring
// classes by affinity, capped at v positives so every positive owns a token.
LongTailDataset draw_split(const Context& ctx, std::vector<std::size_t> quota, std::mt19937_64& rng,
                           std::vector<std::vector<double>>* token_sums, std::vector<std::size_t>* token_counts) {
  const auto& cfg = ctx.cfg;
  LongTailDataset out;
  out.class_names = default_class_names(cfg.c);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::size_t remaining = std::accumulate(quota.begin(), quota.end(), std::size_t{0});
  while (remaining > 0) {
    // Primary class, proportional to the outstanding quota.
    double pick = unit(rng) * static_cast<double>(remaining);
    std::size_t primary = 0;
    for (std::size_t j = 0; j < cfg.c; ++j) {
      if (quota[j] == 0) continue;
      primary = j;
      if (pick < static_cast<double>(quota[j])) break;
      pick -= static_cast<double>(quota[j]);
    }
    std::vector<std::size_t> positives{primary};
    for (std::size_t j = 0; j < cfg.c && positives.size() < cfg.v; ++j) {
      if (j == primary || quota[j] == 0) continue;
      if (unit(rng) < cfg.co_occurrence_strength * ctx.affinity[primary][j]) positives.push_back(j);
    }
    std::vector<std::uint8_t> labels(cfg.c, 0);
    for (auto j : positives) {
      labels[j] = 1;
      --quota[j];
      --remaining;
    }

    // Token slots: every positive gets one slot, the rest are filled at random.
    std::vector<std::size_t> slots = positives;
    std::uniform_int_distribution<std::size_t> pick_pos(0, positives.size() - 1);
    while (slots.size() < cfg.v) slots.push_back(positives[pick_pos(rng)]);
    std::shuffle(slots.begin(), slots.end(), rng);

    std::vector<double> features(cfg.v * cfg.d0);
    for (std::size_t t = 0; t < cfg.v; ++t) {
      const auto& proto = ctx.prototypes[slots[t]];
      for (std::size_t k = 0; k < cfg.d0; ++k) {
        const double x = proto[k] + cfg.noise_sigma * noise(rng);
        features[t * cfg.d0 + k] = static_cast<double>(static_cast<float>(x));
      }
      if (token_sums) {
        for (std::size_t k = 0; k < cfg.d0; ++k) (*token_sums)[slots[t]][k] += features[t * cfg.d0 + k];
        ++(*token_counts)[slots[t]];
      }
    }
    out.samples.push_back(Sample{Tensor::from({cfg.v, cfg.d0}, std::move(features)), std::move(labels)});
  }
  out.refresh_statistics(cfg.head_min, cfg.tail_max);
  return out;
}

}  // namespace

SyntheticSplit generate_synthetic_lt(const GeneratorConfig& cfg) {
  const auto targets = target_class_counts(cfg);

  auto proto_rng = make_stream(cfg.seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> prototypes(cfg.c, std::vector<double>(cfg.d0));
  std::vector<double> proto_flat;
  proto_flat.reserve(cfg.c * cfg.d0);
  for (auto& p : prototypes) {
    for (auto& x : p) {
      x = static_cast<double>(static_cast<float>(normal(proto_rng)));
      proto_flat.push_back(x);
    }
  }

  auto affinity_rng = make_stream(cfg.seed, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> affinity(cfg.c, std::vector<double>(cfg.c, 0.0));
  for (std::size_t i = 0; i < cfg.c; ++i) {
    for (std::size_t j = i + 1; j < cfg.c; ++j) {
      const double u = unit(affinity_rng);
      affinity[i][j] = affinity[j][i] = u * u * u;
    }
  }

  Context ctx{cfg, prototypes, affinity};
  std::vector<std::vector<double>> token_sums(cfg.c, std::vector<double>(cfg.d0, 0.0));
  std::vector<std::size_t> token_counts(cfg.c, 0);

  SyntheticSplit out;
  auto train_rng = make_stream(cfg.seed, 3);
  out.train = draw_split(ctx, targets, train_rng, &token_sums, &token_counts);
  auto test_rng = make_stream(cfg.seed, 4);
  out.test = draw_split(ctx, std::vector<std::size_t>(cfg.c, cfg.test_per_class), test_rng, nullptr, nullptr);
  // Test groups follow the training frequencies.
  out.test.groups = out.train.groups;

  std::vector<double> means;
  means.reserve(cfg.c * cfg.d0);
  for (std::size_t i = 0; i < cfg.c; ++i) {
    for (std::size_t k = 0; k < cfg.d0; ++k) {
      const double mean = token_sums[i][k] / static_cast<double>(token_counts[i]);
      means.push_back(static_cast<double>(static_cast<float>(mean)));
    }
  }
  out.prototypes = Tensor::from({cfg.c, cfg.d0}, std::move(proto_flat));
  out.prototype_means = Tensor::from({cfg.c, cfg.d0}, std::move(means));
  return out;
}

}  // namespace cprfl
