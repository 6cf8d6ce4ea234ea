// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "cprfl/data.hpp"
#include "cprfl/detail/binary_io.hpp"
#include "cprfl/errors.hpp"

namespace cprfl {

namespace {

constexpr std::string_view kEmbeddingMagic = "CPRE";
constexpr std::uint32_t kEmbeddingVersion = 1;

}  // namespace

EmbeddingMode embedding_mode_from_name(const std::string& name) {
  if (name == "random") return EmbeddingMode::kRandom;
  if (name == "file") return EmbeddingMode::kFile;
  throw ArgumentError("unknown embedding mode '" + name + "' (expected random or file)");
}

std::string embedding_mode_name(EmbeddingMode mode) { return mode == EmbeddingMode::kFile ? "file" : "random"; }

void save_embedding(const SemanticEmbedding& embedding, const std::filesystem::path& path) {
  const std::size_t c = embedding.classes(), m = embedding.width();
  if (embedding.class_names.size() != c) throw DimensionError("save_embedding: names do not match rows");
  detail::ByteWriter w;
  w.bytes(kEmbeddingMagic);
  w.u32(kEmbeddingVersion);
  w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(m));
  for (const auto& name : embedding.class_names) w.cstring(name);
  for (double x : embedding.weights.data()) w.f32(static_cast<float>(x));
  w.write_file(path);
}

SemanticEmbedding load_embedding(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  const auto& src = r.source();
  r.expect_magic(kEmbeddingMagic);
  const auto version = r.u32();
  if (version != kEmbeddingVersion) {
    throw FormatError(FormatError::Kind::kVersion, src + ": unsupported embedding version " + std::to_string(version));
  }
  const std::size_t c = r.u32(), m = r.u32();
  if (c == 0 || m == 0) throw FormatError(FormatError::Kind::kInconsistent, src + ": zero-sized embedding");
  SemanticEmbedding out;
  for (std::size_t i = 0; i < c; ++i) out.class_names.push_back(r.cstring());
  if (r.remaining() < c * m * 4) {
    throw FormatError(FormatError::Kind::kTruncated, src + ": truncated embedding payload");
  }
  std::vector<double> values(c * m);
  for (auto& x : values) {
    x = static_cast<double>(r.f32());
    if (!std::isfinite(x)) throw FormatError(FormatError::Kind::kInconsistent, src + ": non-finite embedding value");
  }
  if (!r.at_end()) throw FormatError(FormatError::Kind::kInconsistent, src + ": trailing bytes");
  out.weights = Tensor::from({c, m}, std::move(values), false);
  return out;
}

SemanticEmbedding random_embedding(std::span<const std::string> class_names, std::size_t m, std::uint64_t seed) {
  if (class_names.empty() || m == 0) throw ArgumentError("random_embedding: c and m must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(class_names.size() * m);
  for (auto& x : values) x = normal(rng);
  SemanticEmbedding out;
  out.class_names.assign(class_names.begin(), class_names.end());
  out.weights = Tensor::from({class_names.size(), m}, std::move(values), false);
  return out;
}

SemanticEmbedding embedding_provider(EmbeddingMode mode, const std::optional<std::filesystem::path>& path,
                                     std::span<const std::string> class_names, std::size_t m, std::uint64_t seed) {
  if (mode == EmbeddingMode::kRandom) return random_embedding(class_names, m, seed);
  if (!path) throw ArgumentError("embedding_provider: file mode needs a path");
  SemanticEmbedding loaded = load_embedding(*path);
  if (loaded.classes() != class_names.size()) {
    throw DimensionError("embedding " + path->string() + " has " + std::to_string(loaded.classes()) +
                         " classes, dataset has " + std::to_string(class_names.size()));
  }
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    if (loaded.class_names[i] != class_names[i]) {
      throw DimensionError("embedding " + path->string() + " row " + std::to_string(i) + " is '" +
                           loaded.class_names[i] + "', dataset expects '" + class_names[i] + "'");
    }
  }
  if (m != 0 && loaded.width() != m) {
    throw DimensionError("embedding " + path->string() + " width " + std::to_string(loaded.width()) +
                         " differs from configured m=" + std::to_string(m));
  }
  return loaded;
}

}  // namespace cprfl
