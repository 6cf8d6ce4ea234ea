// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CPRFL_DATA_HPP_
#define CPRFL_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cprfl/model.hpp"
#include "cprfl/tensor.hpp"

namespace cprfl {

/// Frequency group of a class, decided from its training positive count.
enum class Group : std::uint8_t { kHead = 0, kMedium = 1, kTail = 2 };

std::string group_name(Group g);

/// Default split thresholds: more than 100 positives is head, fewer than 20 tail.
inline constexpr std::size_t kHeadMin = 100;
inline constexpr std::size_t kTailMax = 20;

struct Sample {
  Tensor features;                   // v x d0 visual tokens
  std::vector<std::uint8_t> labels;  // length c, values 0/1
};

struct LongTailDataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;
  std::vector<std::size_t> class_counts;
  std::vector<Group> groups;

  std::size_t size() const { return samples.size(); }
  std::size_t classes() const { return class_names.size(); }
  std::size_t tokens() const;
  std::size_t feature_dim() const;

  /// Recounts class_counts from the labels and re-derives groups.
  void refresh_statistics(std::size_t head_min = kHeadMin, std::size_t tail_max = kTailMax);
  /// n x c labels as 0.0/1.0, row-major.
  std::vector<double> label_matrix() const;
};

/// count > head_min -> head, count < tail_max -> tail, otherwise medium.
std::vector<Group> split_groups(std::span<const std::size_t> class_counts, std::size_t head_min = kHeadMin,
                                std::size_t tail_max = kTailMax);

struct GeneratorConfig {
  std::size_t c = 20;
  std::size_t v = 8;
  std::size_t d0 = 16;
  std::size_t n_max = 775;
  // Class i (1-based rank) targets round(n_max * ((1 + offset) / (i + offset))^exponent).
  double pareto_exponent = 5.2;
  double rank_offset = 10.0;
  double co_occurrence_strength = 0.3;
  double noise_sigma = 1.0;
  std::size_t test_per_class = 30;
  std::uint64_t seed = 0;
  std::size_t head_min = kHeadMin;
  std::size_t tail_max = kTailMax;

  void validate() const;
};

struct SyntheticSplit {
  LongTailDataset train;
  LongTailDataset test;
  /// c x d0 latent class prototypes.
  Tensor prototypes;
  /// c x d0 mean of the training tokens drawn from each class: an
  /// informative semantic embedding stand-in.
  Tensor prototype_means;
};

/// Per-class positive-count targets, nonincreasing in class rank.
std::vector<std::size_t> target_class_counts(const GeneratorConfig& cfg);

/// Deterministic long-tailed train split with exactly the target counts and a
/// balanced test split with test_per_class positives for every class.
SyntheticSplit generate_synthetic_lt(const GeneratorConfig& cfg);

/// Feature file: "CPRF" | u32 version | u32 n | u32 v | u32 d0 | u32 c |
/// c NUL-terminated names | per sample v*d0 float32 then c label bytes.
/// Values are stored as float32; datasets produced by the generator are
/// float32-exact, so they round-trip bit for bit.
void save_features(const LongTailDataset& dataset, const std::filesystem::path& path);
LongTailDataset load_features(const std::filesystem::path& path, std::size_t head_min = kHeadMin,
                              std::size_t tail_max = kTailMax);

/// Embedding file: "CPRE" | u32 version | u32 c | u32 m | c names | c*m float32.
void save_embedding(const SemanticEmbedding& embedding, const std::filesystem::path& path);
SemanticEmbedding load_embedding(const std::filesystem::path& path);

enum class EmbeddingMode { kRandom, kFile };

EmbeddingMode embedding_mode_from_name(const std::string& name);
std::string embedding_mode_name(EmbeddingMode mode);

/// Seeded standard-normal c x m embedding.
SemanticEmbedding random_embedding(std::span<const std::string> class_names, std::size_t m, std::uint64_t seed);

/// Random mode ignores `path`. File mode loads the file and checks that its
/// rows match `class_names` one for one and that its width equals `m`
/// (m == 0 accepts any width).
SemanticEmbedding embedding_provider(EmbeddingMode mode, const std::optional<std::filesystem::path>& path,
                                     std::span<const std::string> class_names, std::size_t m, std::uint64_t seed);

}  // namespace cprfl

#endif  // CPRFL_DATA_HPP_
