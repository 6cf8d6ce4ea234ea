// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "cprfl/errors.hpp"
#include "cprfl/train.hpp"

namespace cprfl {

namespace {

std::mt19937_64 seeded_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kModelInitTag = 0x6d6f64;
constexpr std::uint64_t kShuffleTag = 0x736875;
constexpr std::uint64_t kGradCheckTag = 0x676368;

std::uint64_t model_seed(std::uint64_t seed) { return seeded_stream(seed, kModelInitTag, 0)(); }

// FNV-1a over the raw bytes of every frozen tensor.
std::uint64_t frozen_fingerprint(const Classifier& model) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [name, tensor] : model.all_tensors()) {
    if (tensor.requires_grad()) continue;
    for (double x : tensor.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(x);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ull;
      }
    }
  }
  return h;
}

void check_dims(const ModelDims& dims, const LongTailDataset& data, const std::string& what) {
  if (data.samples.empty()) throw ArgumentError(what + " is empty");
  if (data.classes() != dims.c || data.tokens() != dims.v || data.feature_dim() != dims.d0) {
    throw DimensionError(what + " has c=" + std::to_string(data.classes()) + ", v=" + std::to_string(data.tokens()) +
                         ", d0=" + std::to_string(data.feature_dim()) + " but the model expects c=" +
                         std::to_string(dims.c) + ", v=" + std::to_string(dims.v) + ", d0=" + std::to_string(dims.d0));
  }
}

std::string epoch_file_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03d.cprc", epoch);
  return buf;
}

}  // namespace

std::filesystem::path train_file(const std::filesystem::path& prefix) { return prefix.string() + ".train.cprf"; }
std::filesystem::path test_file(const std::filesystem::path& prefix) { return prefix.string() + ".test.cprf"; }
std::filesystem::path embedding_file(const std::filesystem::path& prefix) { return prefix.string() + ".emb.cpre"; }

TrainData load_train_data(const std::filesystem::path& prefix) {
  TrainData data;
  data.train = load_features(train_file(prefix));
  data.test = load_features(test_file(prefix));
  if (data.test.class_names != data.train.class_names) {
    throw FormatError(FormatError::Kind::kInconsistent, "train and test class names differ for " + prefix.string());
  }
  data.test.groups = data.train.groups;
  return data;
}

std::vector<double> predict_scores(const Classifier& model, const LongTailDataset& data, std::size_t batch_size) {
  check_dims(model.dims(), data, "dataset");
  std::vector<double> scores;
  scores.reserve(data.size() * data.classes());
  std::vector<Tensor> batch;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    batch.clear();
    for (std::size_t i = start; i < std::min(start + batch_size, data.size()); ++i) {
      batch.push_back(data.samples[i].features);
    }
    Graph g(false);
    Tensor s = model.predict(g, batch);
    scores.insert(scores.end(), s.data().begin(), s.data().end());
  }
  return scores;
}

EvalReport evaluate_model(const Classifier& model, const LongTailDataset& data, std::span<const Group> groups) {
  const auto scores = predict_scores(model, data);
  const auto labels = data.label_matrix();
  return map_report(scores, labels, data.size(), data.classes(), groups);
}

double prevalence_baseline(const LongTailDataset& data) {
  const auto counts = [&] {
    std::vector<std::size_t> c(data.classes(), 0);
    for (const auto& s : data.samples)
      for (std::size_t j = 0; j < c.size(); ++j) c[j] += s.labels[j];
    return c;
  }();
  double total = 0.0;
  std::size_t scored = 0;
  for (auto n : counts) {
    if (n == 0) continue;
    total += static_cast<double>(n) / static_cast<double>(data.size());
    ++scored;
  }
  return scored ? total / static_cast<double>(scored) : 0.0;
}

TrainResult train(const TrainConfig& cfg, const TrainData& data, const TrainOptions& options) {
  cfg.validate();
  check_dims(cfg.dims, data.train, "training set");
  check_dims(cfg.dims, data.test, "test set");

  std::unique_ptr<Classifier> model;
  AdamState adam;
  std::vector<EpochRecord> history;
  int start_epoch = 0;
  if (options.resume) {
    model = restore_classifier(*options.resume);
    adam = options.resume->adam;
    history = options.resume->history;
    start_epoch = options.resume->epoch + 1;
  } else {
    SemanticEmbedding embedding;
    if (options.embedding) {
      embedding = *options.embedding;
    } else if (cfg.architecture == "cprfl") {
      std::optional<std::filesystem::path> path;
      if (!cfg.embedding.path.empty()) path = cfg.embedding.path;
      embedding =
          embedding_provider(cfg.embedding.mode, path, data.train.class_names, cfg.embedding.m, cfg.embedding.seed);
    }
    model = make_classifier(cfg.architecture, cfg.dims, std::move(embedding), model_seed(cfg.seed),
                            cfg.literal_equations);
  }

  const std::uint64_t frozen = frozen_fingerprint(*model);
  auto params = model->learnable();
  const auto& groups = data.train.groups;
  const int end_epoch = options.stop_after ? std::min(*options.stop_after, cfg.epochs) : cfg.epochs;
  if (options.out_dir) std::filesystem::create_directories(*options.out_dir);

  auto snapshot = [&](int epoch) {
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.tensors = model->all_tensors();
    ckpt.adam = adam;
    ckpt.epoch = epoch;
    ckpt.history = history;
    ckpt.class_names = data.train.class_names;
    ckpt.groups = groups;
    return ckpt;
  };

  const std::size_t n = data.train.size();
  std::vector<std::size_t> order(n);
  std::vector<Tensor> batch_features;
  std::vector<double> batch_labels;
  for (int epoch = start_epoch; epoch < end_epoch; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    auto rng = seeded_stream(cfg.seed, kShuffleTag, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(start + cfg.batch_size, n);
      batch_features.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const auto& sample = data.train.samples[order[i]];
        batch_features.push_back(sample.features);
        for (auto y : sample.labels) batch_labels.push_back(static_cast<double>(y));
      }
      Graph g;
      Tensor logits = model->logits(g, batch_features);
      Tensor loss = batch_loss_from_logits(g, logits, batch_labels, cfg.loss);
      if (!std::isfinite(loss.item())) {
        throw NonFiniteError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      loss_sum += loss.item() * static_cast<double>(stop - start);
      for (auto& p : params) p.tensor.zero_grad();
      g.backward(loss);
      adam_step(params, adam, cfg.learning_rate, cfg.weight_decay);
    }

    if (frozen_fingerprint(*model) != frozen) {
      throw Error("frozen embedding changed during epoch " + std::to_string(epoch));
    }
    EpochRecord record{epoch, loss_sum / static_cast<double>(n), evaluate_model(*model, data.test, groups)};
    history.push_back(record);
    if (options.out_dir) save_checkpoint(snapshot(epoch), *options.out_dir / epoch_file_name(epoch));
    if (options.on_epoch) options.on_epoch(record);
  }

  TrainResult result;
  result.checkpoint = snapshot(history.empty() ? -1 : history.back().epoch);
  result.history = history;
  if (options.out_dir) {
    save_checkpoint(result.checkpoint, *options.out_dir / "final.cprc");
    nlohmann::json h = nlohmann::json::array();
    for (const auto& rec : history) {
      h.push_back({{"epoch", rec.epoch}, {"train_loss", rec.train_loss}, {"report", report_to_json(rec.report)}});
    }
    std::ofstream out(*options.out_dir / "history.json");
    out << h.dump(2) << '\n';
    if (!out) throw FormatError(FormatError::Kind::kIo, "cannot write history.json");
  }
  return result;
}

TrainResult train(const TrainConfig& cfg, const std::filesystem::path& data_prefix,
                  const std::filesystem::path& out_dir) {
  TrainOptions options;
  options.out_dir = out_dir;
  return train(cfg, load_train_data(data_prefix), options);
}

EvalReport evaluate(const std::filesystem::path& checkpoint_path, const std::filesystem::path& data_prefix) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  auto model = restore_classifier(ckpt);
  const LongTailDataset test = load_features(test_file(data_prefix));
  check_dims(model->dims(), test, "test set");
  if (ckpt.groups.size() != test.classes()) {
    throw DimensionError("checkpoint groups cover " + std::to_string(ckpt.groups.size()) + " classes, test set has " +
                         std::to_string(test.classes()));
  }
  return evaluate_model(*model, test, ckpt.groups);
}

GradCheckReport gradcheck_command(const TrainConfig& cfg, double eps, double tolerance, std::size_t batch) {
  cfg.validate();
  if (!(tolerance >= 0.0)) throw ArgumentError("gradcheck: tolerance must be >= 0");
  if (batch == 0) throw ArgumentError("gradcheck: batch must be >= 1");
  const auto& dims = cfg.dims;

  std::vector<std::string> names;
  for (std::size_t i = 0; i < dims.c; ++i) names.push_back("class_" + std::to_string(i));
  SemanticEmbedding embedding;
  if (cfg.architecture == "cprfl") {
    std::optional<std::filesystem::path> path;
    if (!cfg.embedding.path.empty()) path = cfg.embedding.path;
    if (cfg.embedding.mode == EmbeddingMode::kFile) {
      embedding = load_embedding(*path);
      if (embedding.classes() != dims.c || embedding.width() != dims.m) {
        throw DimensionError("gradcheck: embedding file does not match dims");
      }
    } else {
      embedding = random_embedding(names, dims.m, cfg.embedding.seed);
    }
  }
  auto model = make_classifier(cfg.architecture, dims, std::move(embedding), model_seed(cfg.seed),
                               cfg.literal_equations);
  auto params = model->learnable();
  std::size_t count = 0;
  for (const auto& p : params) count += p.tensor.size();
  if (count > kGradCheckParameterCap) {
    throw ArgumentError("gradcheck: " + std::to_string(count) + " parameters exceed the cap of " +
                        std::to_string(kGradCheckParameterCap) + "; use a tiny config");
  }

  auto rng = seeded_stream(cfg.seed, kGradCheckTag, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution positive(0.4);
  std::vector<Tensor> features;
  std::vector<double> labels;
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<double> f(dims.v * dims.d0);
    for (auto& x : f) x = normal(rng);
    features.push_back(Tensor::from({dims.v, dims.d0}, std::move(f)));
    std::vector<double> y(dims.c);
    bool any = false;
    for (auto& t : y) {
      t = positive(rng) ? 1.0 : 0.0;
      any = any || t == 1.0;
    }
    if (!any) y[b % dims.c] = 1.0;
    labels.insert(labels.end(), y.begin(), y.end());
  }

  const Classifier& net = *model;
  ScalarFunction f = [&](Graph& g) { return batch_loss_from_logits(g, net.logits(g, features), labels, cfg.loss); };
  GradCheckReport report;
  report.result = grad_check(f, params, eps);
  report.parameter_count = count;
  report.tolerance = tolerance;
  report.passed = report.result.max_relative_error < tolerance;
  return report;
}

}  // namespace cprfl
