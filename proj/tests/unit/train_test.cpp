// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "cprfl/errors.hpp"
#include "cprfl/train.hpp"

namespace cprfl {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "cprfl_train_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

GeneratorConfig tiny_generator() {
  GeneratorConfig g;
  g.c = 5;
  g.v = 4;
  g.d0 = 6;
  g.n_max = 40;
  g.pareto_exponent = 1.5;
  g.rank_offset = 0.0;
  g.test_per_class = 8;
  g.seed = 2;
  return g;
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  cfg.learning_rate = 3e-3;
  cfg.dims.d0 = 6;
  cfg.dims.d = 8;
  cfg.dims.v = 4;
  cfg.dims.c = 5;
  cfg.dims.heads = 2;
  cfg.dims.ffn = 8;
  cfg.dims.m = 6;
  cfg.embedding.m = 6;
  cfg.seed = 1;
  return cfg;
}

TrainData tiny_data() {
  auto split = generate_synthetic_lt(tiny_generator());
  return {std::move(split.train), std::move(split.test)};
}

std::vector<std::vector<double>> values_of(const std::vector<NamedTensor>& ts) {
  std::vector<std::vector<double>> out;
  for (const auto& t : ts) out.push_back(t.tensor.to_vector());
  return out;
}

TEST(ConfigTest, JsonRoundTripAndValidation) {
  TrainConfig cfg = tiny_config();
  cfg.loss.kind = LossKind::kFocal;
  cfg.literal_equations = true;
  const auto back = TrainConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json(), cfg.to_json());
  EXPECT_THROW(TrainConfig::from_json({{"epochz", 3}}), ArgumentError);
  EXPECT_THROW(TrainConfig::from_json({{"loss", {{"name", "hinge"}}}}), ArgumentError);
  EXPECT_THROW(TrainConfig::from_json({{"batch_size", 0}}), ArgumentError);
  EXPECT_THROW(TrainConfig::from_json({{"dims", {{"d", 10}, {"heads", 3}}}}), ArgumentError);
  EXPECT_THROW(TrainConfig::from_json({{"embedding", {{"mode", "file"}}}}), ArgumentError);
}

TEST(ConfigTest, Defaults) {
  const auto cfg = TrainConfig::from_json(nlohmann::json::object());
  EXPECT_EQ(cfg.epochs, 30);
  EXPECT_EQ(cfg.batch_size, 32u);
  EXPECT_EQ(cfg.loss.kind, LossKind::kAsl);
  EXPECT_EQ(cfg.loss.gamma_neg, 4.0);
  EXPECT_EQ(cfg.loss.mu, 0.05);
  EXPECT_EQ(cfg.dims.m, 1024u);
  EXPECT_FALSE(cfg.literal_equations);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  Tensor w = Tensor::from({4}, {0.5, -1.0, 2.0, 0.0}, true);
  auto g = w.grad_buffer();
  g[0] = 3.0;
  g[1] = -0.01;
  g[2] = 1e-3;
  g[3] = -7.0;
  std::vector<NamedTensor> params{{"w", w}};
  AdamState state;
  adam_step(params, state, 0.1, 0.0);
  EXPECT_NEAR(w.at(0), 0.5 - 0.1, 1e-6);
  EXPECT_NEAR(w.at(1), -1.0 + 0.1, 1e-5);
  EXPECT_NEAR(w.at(2), 2.0 - 0.1, 1e-4);
  EXPECT_NEAR(w.at(3), 0.0 + 0.1, 1e-6);
  EXPECT_EQ(state.step, 1u);
}

TEST(AdamTest, DeterministicOverManySteps) {
  auto run = [] {
    Tensor w = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
    std::vector<NamedTensor> params{{"w", w}};
    AdamState state;
    for (int t = 0; t < 100; ++t) {
      auto g = w.grad_buffer();
      for (std::size_t i = 0; i < 3; ++i) g[i] = 2.0 * w.at(i) + std::sin(double(t + i));
      adam_step(params, state, 1e-2, 1e-4);
    }
    return w.to_vector();
  };
  EXPECT_EQ(run(), run());
}

TEST(AdamTest, SkipsFrozenTensorsAndChecksState) {
  Tensor w = Tensor::from({2}, {1.0, 1.0}, true);
  Tensor frozen = Tensor::from({2}, {3.0, 4.0}, false);
  w.grad_buffer()[0] = 1.0;
  std::vector<NamedTensor> params{{"w", w}, {"frozen", frozen}};
  AdamState state;
  adam_step(params, state, 0.1, 0.5);
  EXPECT_EQ(frozen.to_vector(), (std::vector<double>{3.0, 4.0}));
  std::vector<NamedTensor> fewer{{"w", w}};
  EXPECT_THROW(adam_step(fewer, state, 0.1, 0.0), DimensionError);
}

TEST(CheckpointTest, EncodeDecodeIsByteIdentical) {
  const auto data = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  const auto result = train(cfg, data);
  const auto bytes = encode_checkpoint(result.checkpoint);
  const auto decoded = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(decoded), bytes);
  EXPECT_EQ(decoded.epoch, 0);
  EXPECT_EQ(decoded.class_names, data.train.class_names);
  EXPECT_EQ(decoded.groups, data.train.groups);

  const auto dir = temp_dir("ckpt");
  save_checkpoint(result.checkpoint, dir / "a.cprc");
  const auto loaded = load_checkpoint(dir / "a.cprc");
  EXPECT_EQ(encode_checkpoint(loaded), bytes);

  auto model = restore_classifier(loaded);
  EXPECT_EQ(predict_scores(*model, data.test), predict_scores(*restore_classifier(result.checkpoint), data.test));
}

TEST(CheckpointTest, CorruptionIsReported) {
  const auto data = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 0;
  auto bytes = encode_checkpoint(train(cfg, data).checkpoint);
  auto kind_of = [](std::vector<char> b) {
    try {
      decode_checkpoint(std::move(b));
    } catch (const FormatError& e) {
      return e.kind();
    }
    return FormatError::Kind::kIo;
  };
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_EQ(kind_of(truncated), FormatError::Kind::kTruncated);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(kind_of(magic), FormatError::Kind::kBadMagic);
  auto version = bytes;
  version[4] = 9;
  EXPECT_EQ(kind_of(version), FormatError::Kind::kVersion);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(kind_of(trailing), FormatError::Kind::kInconsistent);
  EXPECT_THROW(load_checkpoint("/nonexistent/x.cprc"), FormatError);
}

TEST(TrainTest, SameSeedSameTrajectory) {
  const auto data = tiny_data();
  const auto a = train(tiny_config(), data);
  const auto b = train(tiny_config(), data);
  ASSERT_EQ(a.history.size(), 4u);
  for (std::size_t e = 0; e < a.history.size(); ++e) EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
  EXPECT_EQ(values_of(a.checkpoint.tensors), values_of(b.checkpoint.tensors));
}

TEST(TrainTest, ResumeReproducesUninterruptedRun) {
  const auto data = tiny_data();
  const auto full = train(tiny_config(), data);
  TrainOptions first;
  first.stop_after = 2;
  const auto half = train(tiny_config(), data, first);
  ASSERT_EQ(half.checkpoint.epoch, 1);
  const auto reloaded = decode_checkpoint(encode_checkpoint(half.checkpoint));
  TrainOptions second;
  second.resume = &reloaded;
  const auto resumed = train(tiny_config(), data, second);
  ASSERT_EQ(resumed.history.size(), full.history.size());
  for (std::size_t e = 0; e < full.history.size(); ++e) {
    EXPECT_EQ(resumed.history[e].train_loss, full.history[e].train_loss);
    EXPECT_EQ(resumed.history[e].report.map_total, full.history[e].report.map_total);
  }
  EXPECT_EQ(values_of(resumed.checkpoint.tensors), values_of(full.checkpoint.tensors));
  EXPECT_EQ(encode_checkpoint(resumed.checkpoint), encode_checkpoint(full.checkpoint));
}

TEST(TrainTest, EmbeddingStaysFrozenAndParametersMove) {
  const auto data = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 0;
  const auto before = train(cfg, data).checkpoint.tensors;
  cfg.epochs = 2;
  const auto after = train(cfg, data).checkpoint.tensors;
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t k = 0; k < before.size(); ++k) {
    if (before[k].name == "embedding.W") {
      EXPECT_EQ(before[k].tensor.to_vector(), after[k].tensor.to_vector());
    } else if (before[k].name == "phi.W") {
      EXPECT_NE(before[k].tensor.to_vector(), after[k].tensor.to_vector());
    }
  }
}

TEST(TrainTest, WritesCheckpointsAndHistory) {
  const auto dir = temp_dir("run");
  const auto prefix = dir / "data";
  auto split = generate_synthetic_lt(tiny_generator());
  save_features(split.train, train_file(prefix));
  save_features(split.test, test_file(prefix));
  TrainConfig cfg = tiny_config();
  cfg.epochs = 2;
  const auto result = train(cfg, prefix, dir / "out");
  EXPECT_TRUE(fs::exists(dir / "out" / "epoch_000.cprc"));
  EXPECT_TRUE(fs::exists(dir / "out" / "epoch_001.cprc"));
  EXPECT_TRUE(fs::exists(dir / "out" / "final.cprc"));
  std::ifstream in(dir / "out" / "history.json");
  const auto history = nlohmann::json::parse(in);
  ASSERT_EQ(history.size(), 2u);
  EXPECT_EQ(history[1].at("epoch").get<int>(), 1);

  const auto report = evaluate(dir / "out" / "final.cprc", prefix);
  EXPECT_EQ(report.map_total, result.history.back().report.map_total);
  EXPECT_EQ(report.per_class_ap.size(), cfg.dims.c);
}

TEST(TrainTest, LinearBaselineTrains) {
  const auto data = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.architecture = "linear_baseline";
  const auto result = train(cfg, data);
  EXPECT_LT(result.history.back().train_loss, result.history.front().train_loss);
  auto model = restore_classifier(result.checkpoint);
  EXPECT_EQ(model->architecture(), "linear_baseline");
}

TEST(TrainTest, UntrainedModelScoresNearPrevalence) {
  const auto data = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 0;
  auto model = restore_classifier(train(cfg, data).checkpoint);
  const auto report = evaluate_model(*model, data.test, data.train.groups);
  EXPECT_NEAR(report.map_total, prevalence_baseline(data.test), 0.15);
}

TEST(TrainTest, DimensionMismatchAndNonFiniteInputs) {
  auto data = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.dims.d0 = 7;
  EXPECT_THROW(train(cfg, data), DimensionError);
  cfg = tiny_config();
  auto values = data.train.samples[0].features.to_vector();
  values[0] = std::numeric_limits<double>::quiet_NaN();
  data.train.samples[0].features = Tensor::from(data.train.samples[0].features.shape(), values);
  EXPECT_THROW(train(cfg, data), NonFiniteError);
}

TEST(GradCheckCommandTest, TinyConfigPasses) {
  TrainConfig cfg = tiny_config();
  cfg.loss.kind = LossKind::kFocal;
  cfg.loss.gamma_pos = 2.0;
  const auto report = gradcheck_command(cfg);
  EXPECT_TRUE(report.passed) << report.result.max_relative_error << " at " << report.result.worst_parameter;
  EXPECT_GT(report.parameter_count, 0u);

  TrainConfig big;
  EXPECT_THROW(gradcheck_command(big), ArgumentError);
}

}  // namespace
}  // namespace cprfl
