// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <set>

#include "cprfl/errors.hpp"
#include "cprfl/train.hpp"

namespace cprfl {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ArgumentError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ArgumentError("config: epochs must be >= 0");
  if (batch_size == 0) throw ArgumentError("config: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("config: learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw ArgumentError("config: weight_decay must be >= 0");
  if (dims.m != embedding.m) throw ArgumentError("config: dims.m and embedding.m disagree");
  if (embedding.mode == EmbeddingMode::kFile && embedding.path.empty()) {
    throw ArgumentError("config: embedding mode 'file' needs a path");
  }
  if (architecture != "cprfl" && architecture != "linear_baseline") {
    throw ArgumentError("config: unknown architecture '" + architecture + "'");
  }
  dims.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"epochs", epochs},
      {"batch_size", batch_size},
      {"learning_rate", learning_rate},
      {"weight_decay", weight_decay},
      {"loss",
       {{"name", loss_kind_name(loss.kind)},
        {"gamma_pos", loss.gamma_pos},
        {"gamma_neg", loss.gamma_neg},
        {"mu", loss.mu}}},
      {"dims",
       {{"d0", dims.d0},
        {"d", dims.d},
        {"v", dims.v},
        {"c", dims.c},
        {"heads", dims.heads},
        {"ffn", dims.ffn},
        {"tau", dims.tau}}},
      {"embedding",
       {{"mode", embedding_mode_name(embedding.mode)},
        {"path", embedding.path},
        {"m", embedding.m},
        {"seed", embedding.seed}}},
      {"seed", seed},
      {"literal_equations", literal_equations},
      {"architecture", architecture},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ArgumentError("config: expected a JSON object");
  reject_unknown(j,
                 {"epochs", "batch_size", "learning_rate", "weight_decay", "loss", "dims", "embedding", "seed",
                  "literal_equations", "architecture"},
                 "top level");
  TrainConfig cfg;
  try {
    read(j, "epochs", cfg.epochs);
    read(j, "batch_size", cfg.batch_size);
    read(j, "learning_rate", cfg.learning_rate);
    read(j, "weight_decay", cfg.weight_decay);
    read(j, "seed", cfg.seed);
    read(j, "literal_equations", cfg.literal_equations);
    read(j, "architecture", cfg.architecture);
    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      reject_unknown(l, {"name", "gamma_pos", "gamma_neg", "mu"}, "loss");
      if (l.contains("name")) cfg.loss.kind = loss_kind_from_name(l.at("name").get<std::string>());
      read(l, "gamma_pos", cfg.loss.gamma_pos);
      read(l, "gamma_neg", cfg.loss.gamma_neg);
      read(l, "mu", cfg.loss.mu);
    }
    if (j.contains("dims")) {
      const auto& d = j.at("dims");
      reject_unknown(d, {"d0", "d", "v", "c", "heads", "ffn", "tau"}, "dims");
      read(d, "d0", cfg.dims.d0);
      read(d, "d", cfg.dims.d);
      read(d, "v", cfg.dims.v);
      read(d, "c", cfg.dims.c);
      read(d, "heads", cfg.dims.heads);
      read(d, "ffn", cfg.dims.ffn);
      read(d, "tau", cfg.dims.tau);
    }
    if (j.contains("embedding")) {
      const auto& e = j.at("embedding");
      reject_unknown(e, {"mode", "path", "m", "seed"}, "embedding");
      if (e.contains("mode")) cfg.embedding.mode = embedding_mode_from_name(e.at("mode").get<std::string>());
      if (e.contains("path") && !e.at("path").is_null()) cfg.embedding.path = e.at("path").get<std::string>();
      read(e, "m", cfg.embedding.m);
      read(e, "seed", cfg.embedding.seed);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ArgumentError(std::string("config: ") + ex.what());
  }
  cfg.dims.m = cfg.embedding.m;
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::kIo, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(FormatError::Kind::kInconsistent, path.string() + ": " + ex.what());
  }
  return from_json(j);
}

}  // namespace cprfl
