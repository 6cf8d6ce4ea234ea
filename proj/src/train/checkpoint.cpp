// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iterator>

#include "cprfl/detail/binary_io.hpp"
#include "cprfl/errors.hpp"
#include "cprfl/train.hpp"

namespace cprfl {

namespace {

constexpr std::string_view kCheckpointMagic = "CPRC";
constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json history_to_json(const std::vector<EpochRecord>& history) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& rec : history) {
    out.push_back({{"epoch", rec.epoch}, {"train_loss", rec.train_loss}, {"report", report_to_json(rec.report)}});
  }
  return out;
}

std::vector<EpochRecord> history_from_json(const nlohmann::json& j) {
  std::vector<EpochRecord> out;
  for (const auto& item : j) {
    out.push_back({item.at("epoch").get<int>(), item.at("train_loss").get<double>(), report_from_json(item.at("report"))});
  }
  return out;
}

}  // namespace

std::vector<char> encode_checkpoint(const Checkpoint& ckpt) {
  detail::ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    w.length_prefixed(name);
    w.u32(static_cast<std::uint32_t>(tensor.rank()));
    for (auto dim : tensor.shape()) w.u32(static_cast<std::uint32_t>(dim));
    for (double x : tensor.data()) w.f64(x);
  }

  w.u64(ckpt.adam.step);
  w.f64(ckpt.adam.beta1);
  w.f64(ckpt.adam.beta2);
  w.f64(ckpt.adam.eps);
  w.u32(static_cast<std::uint32_t>(ckpt.adam.moments.size()));
  for (const auto& mom : ckpt.adam.moments) {
    w.length_prefixed(mom.name);
    w.u32(static_cast<std::uint32_t>(mom.first.size()));
    for (double x : mom.first) w.f64(x);
    for (double x : mom.second) w.f64(x);
  }

  nlohmann::json groups = nlohmann::json::array();
  for (auto g : ckpt.groups) groups.push_back(group_name(g));
  const nlohmann::json meta = {
      {"config", ckpt.config.to_json()},
      {"epoch", ckpt.epoch},
      {"history", history_to_json(ckpt.history)},
      {"class_names", ckpt.class_names},
      {"groups", groups},
  };
  w.length_prefixed(meta.dump());
  return w.buffer();
}

Checkpoint decode_checkpoint(std::vector<char> bytes, const std::string& source) {
  detail::ByteReader r(std::move(bytes), source);
  r.expect_magic(kCheckpointMagic);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(FormatError::Kind::kVersion, source + ": unsupported checkpoint version " +
                                                       std::to_string(version));
  }
  auto bad = [&](const std::string& what) { throw FormatError(FormatError::Kind::kInconsistent, source + ": " + what); };

  Checkpoint ckpt;
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t k = 0; k < n_tensors; ++k) {
    std::string name = r.length_prefixed();
    const std::uint32_t rank = r.u32();
    if (rank < 1 || rank > 2) bad("tensor '" + name + "' has rank " + std::to_string(rank));
    Shape shape;
    std::size_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape.push_back(r.u32());
      if (shape.back() == 0) bad("tensor '" + name + "' has a zero dimension");
      numel *= shape.back();
    }
    if (r.remaining() / 8 < numel) {
      throw FormatError(FormatError::Kind::kTruncated, source + ": truncated payload for '" + name + "'");
    }
    std::vector<double> values(numel);
    for (auto& x : values) x = r.f64();
    ckpt.tensors.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values))});
  }

  ckpt.adam.step = r.u64();
  ckpt.adam.beta1 = r.f64();
  ckpt.adam.beta2 = r.f64();
  ckpt.adam.eps = r.f64();
  const std::uint32_t n_moments = r.u32();
  for (std::uint32_t k = 0; k < n_moments; ++k) {
    AdamMoments mom;
    mom.name = r.length_prefixed();
    const std::uint32_t len = r.u32();
    if (r.remaining() / 16 < len) {
      throw FormatError(FormatError::Kind::kTruncated, source + ": truncated moments for '" + mom.name + "'");
    }
    mom.first.resize(len);
    mom.second.resize(len);
    for (auto& x : mom.first) x = r.f64();
    for (auto& x : mom.second) x = r.f64();
    ckpt.adam.moments.push_back(std::move(mom));
  }

  const std::string meta_text = r.length_prefixed();
  if (!r.at_end()) bad("trailing bytes after metadata");
  try {
    const auto meta = nlohmann::json::parse(meta_text);
    ckpt.config = TrainConfig::from_json(meta.at("config"));
    ckpt.epoch = meta.at("epoch").get<int>();
    ckpt.history = history_from_json(meta.at("history"));
    ckpt.class_names = meta.at("class_names").get<std::vector<std::string>>();
    for (const auto& g : meta.at("groups")) {
      const auto name = g.get<std::string>();
      ckpt.groups.push_back(name == "head" ? Group::kHead : name == "tail" ? Group::kTail : Group::kMedium);
    }
  } catch (const nlohmann::json::exception& ex) {
    bad(std::string("bad metadata: ") + ex.what());
  } catch (const ArgumentError& ex) {
    bad(std::string("bad metadata: ") + ex.what());
  }

  // Restore requires_grad from the architecture's parameter list.
  for (auto& [name, tensor] : ckpt.tensors) tensor.set_requires_grad(name != "embedding.W");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::kIo, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::kIo, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::kIo, "cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(std::move(bytes), path.string());
}

std::unique_ptr<Classifier> restore_classifier(const Checkpoint& ckpt) {
  const auto& cfg = ckpt.config;
  SemanticEmbedding embedding;
  if (cfg.architecture == "cprfl") {
    for (const auto& [name, tensor] : ckpt.tensors) {
      if (name == "embedding.W") embedding.weights = tensor.detach();
    }
    if (!embedding.weights.defined()) throw FormatError(FormatError::Kind::kInconsistent, "checkpoint lacks embedding.W");
    embedding.class_names = ckpt.class_names;
  }
  auto model = make_classifier(cfg.architecture, cfg.dims, std::move(embedding), cfg.seed, cfg.literal_equations);
  auto slots = model->all_tensors();
  if (slots.size() != ckpt.tensors.size()) {
    throw FormatError(FormatError::Kind::kInconsistent, "checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                                                            " tensors, architecture expects " +
                                                            std::to_string(slots.size()));
  }
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& saved = ckpt.tensors[k];
    if (saved.name != slots[k].name || saved.tensor.shape() != slots[k].tensor.shape()) {
      throw FormatError(FormatError::Kind::kInconsistent,
                        "checkpoint tensor '" + saved.name + "' " + shape_to_string(saved.tensor.shape()) +
                            " does not match '" + slots[k].name + "' " + shape_to_string(slots[k].tensor.shape()));
    }
    auto dst = slots[k].tensor.mutable_data();
    auto src = saved.tensor.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return model;
}

}  // namespace cprfl
