// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CPRFL_TRAIN_HPP_
#define CPRFL_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cprfl/data.hpp"
#include "cprfl/eval.hpp"
#include "cprfl/grad_check.hpp"
#include "cprfl/losses.hpp"
#include "cprfl/model.hpp"

namespace cprfl {

struct EmbeddingConfig {
  EmbeddingMode mode = EmbeddingMode::kRandom;
  std::string path;  // file mode only
  std::size_t m = 1024;
  std::uint64_t seed = 0;
};

struct TrainConfig {
  int epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 5e-5;
  double weight_decay = 1e-4;
  LossConfig loss;
  ModelDims dims;  // dims.m mirrors embedding.m
  EmbeddingConfig embedding;
  std::uint64_t seed = 0;
  bool literal_equations = false;
  std::string architecture = "cprfl";

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig from_file(const std::filesystem::path& path);
};

// ---------------------------------------------------------------------------
// Adam with L2 weight decay folded into the gradient.

struct AdamMoments {
  std::string name;
  std::vector<double> first;
  std::vector<double> second;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<AdamMoments> moments;  // same order as the parameter list
};

/// One optimizer step over `params` using their current grads. Tensors with
/// requires_grad == false are skipped. Moments are created on the first step.
void adam_step(std::span<NamedTensor> params, AdamState& state, double learning_rate, double weight_decay);

// ---------------------------------------------------------------------------
// Checkpoints.

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  EvalReport report;
};

struct Checkpoint {
  TrainConfig config;
  std::vector<NamedTensor> tensors;  // learnable then frozen, stable names
  AdamState adam;
  int epoch = -1;  // last completed epoch, -1 before training
  std::vector<EpochRecord> history;
  std::vector<std::string> class_names;
  std::vector<Group> groups;
};

/// "CPRC" | u32 version | u32 count | per tensor: u32-length name, u32 rank,
/// u32 dims, float64 payload | u64 step, f64 beta1/beta2/eps, u32 count, per
/// parameter: name, u32 length, float64 first and second moments | u32-length
/// UTF-8 JSON with config, epoch, history, class names and groups.
std::vector<char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::vector<char> bytes, const std::string& source = "<memory>");
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Rebuilds the classifier described by the checkpoint with its saved values.
std::unique_ptr<Classifier> restore_classifier(const Checkpoint& ckpt);

// ---------------------------------------------------------------------------
// Training and evaluation.

struct TrainData {
  LongTailDataset train;
  LongTailDataset test;  // groups copied from train
};

/// Reads `<prefix>.train.cprf` and `<prefix>.test.cprf`.
TrainData load_train_data(const std::filesystem::path& prefix);
std::filesystem::path train_file(const std::filesystem::path& prefix);
std::filesystem::path test_file(const std::filesystem::path& prefix);
std::filesystem::path embedding_file(const std::filesystem::path& prefix);

struct TrainOptions {
  /// Checkpoints (epoch_XXX.cprc, final.cprc) and history.json go here when set.
  std::optional<std::filesystem::path> out_dir;
  /// Continue from this state instead of a fresh model.
  const Checkpoint* resume = nullptr;
  /// Stop after this many completed epochs in total (not more than cfg.epochs).
  std::optional<int> stop_after;
  /// Used instead of the configured provider when set.
  std::optional<SemanticEmbedding> embedding;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> history;
};

TrainResult train(const TrainConfig& cfg, const TrainData& data, const TrainOptions& options = {});
TrainResult train(const TrainConfig& cfg, const std::filesystem::path& data_prefix,
                  const std::filesystem::path& out_dir);

/// Deterministic inference over a dataset, n x c probabilities row-major.
std::vector<double> predict_scores(const Classifier& model, const LongTailDataset& data,
                                   std::size_t batch_size = 64);
EvalReport evaluate_model(const Classifier& model, const LongTailDataset& data, std::span<const Group> groups);
/// Loads the checkpoint and `<prefix>.test.cprf`; groups come from the checkpoint.
EvalReport evaluate(const std::filesystem::path& checkpoint_path, const std::filesystem::path& data_prefix);

/// Mean over classes of the positive prevalence: the AP of a random ranking.
double prevalence_baseline(const LongTailDataset& data);

// ---------------------------------------------------------------------------
// Gradient check over the whole model.

struct GradCheckReport {
  GradCheckResult result;
  std::size_t parameter_count = 0;
  double tolerance = 0.0;
  bool passed = false;
};

inline constexpr std::size_t kGradCheckParameterCap = 20000;

/// Finite-difference check of every learnable tensor on one seeded synthetic
/// batch. Passes when max relative error < tolerance.
GradCheckReport gradcheck_command(const TrainConfig& cfg, double eps = 1e-5, double tolerance = 1e-4,
                                  std::size_t batch = 3);

}  // namespace cprfl

#endif  // CPRFL_TRAIN_HPP_
