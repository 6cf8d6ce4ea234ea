// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "cprfl/data.hpp"
#include "cprfl/detail/binary_io.hpp"
#include "cprfl/errors.hpp"

namespace cprfl {

namespace {

constexpr std::string_view kFeatureMagic = "CPRF";
constexpr std::uint32_t kFeatureVersion = 1;

[[noreturn]] void inconsistent(const std::string& source, const std::string& what) {
  throw FormatError(FormatError::Kind::kInconsistent, source + ": " + what);
}

}  // namespace

void save_features(const LongTailDataset& dataset, const std::filesystem::path& path) {
  const std::size_t c = dataset.classes();
  if (dataset.samples.empty() || c == 0) throw ArgumentError("save_features: dataset is empty");
  const std::size_t v = dataset.tokens(), d0 = dataset.feature_dim();

  detail::ByteWriter w;
  w.bytes(kFeatureMagic);
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(dataset.samples.size()));
  w.u32(static_cast<std::uint32_t>(v));
  w.u32(static_cast<std::uint32_t>(d0));
  w.u32(static_cast<std::uint32_t>(c));
  for (const auto& name : dataset.class_names) w.cstring(name);
  for (const auto& s : dataset.samples) {
    if (s.features.rows() != v || s.features.cols() != d0 || s.labels.size() != c) {
      throw DimensionError("save_features: sample shape differs from the first sample");
    }
    for (double x : s.features.data()) w.f32(static_cast<float>(x));
    for (auto y : s.labels) w.u8(y);
  }
  w.write_file(path);
}

LongTailDataset load_features(const std::filesystem::path& path, std::size_t head_min, std::size_t tail_max) {
  auto r = detail::ByteReader::from_file(path);
  const auto& src = r.source();
  r.expect_magic(kFeatureMagic);
  const auto version = r.u32();
  if (version != kFeatureVersion) {
    throw FormatError(FormatError::Kind::kVersion,
                      src + ": unsupported feature file version " + std::to_string(version));
  }
  const std::size_t n = r.u32(), v = r.u32(), d0 = r.u32(), c = r.u32();
  if (n == 0 || v == 0 || d0 == 0 || c == 0) inconsistent(src, "zero-sized header field");

  LongTailDataset out;
  out.class_names.reserve(c);
  for (std::size_t i = 0; i < c; ++i) out.class_names.push_back(r.cstring());

  const std::size_t per_sample = v * d0 * 4 + c;
  if (r.remaining() < n * per_sample) {
    throw FormatError(FormatError::Kind::kTruncated, src + ": truncated, " + std::to_string(n) + " samples need " +
                                                         std::to_string(n * per_sample) + " bytes, have " +
                                                         std::to_string(r.remaining()));
  }
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> features(v * d0);
    for (auto& x : features) {
      x = static_cast<double>(r.f32());
      if (!std::isfinite(x)) inconsistent(src, "non-finite feature in sample " + std::to_string(i));
    }
    std::vector<std::uint8_t> labels(c);
    bool any = false;
    for (auto& y : labels) {
      y = r.u8();
      if (y > 1) inconsistent(src, "non-binary label in sample " + std::to_string(i));
      any = any || y == 1;
    }
    if (!any) inconsistent(src, "sample " + std::to_string(i) + " has no positive label");
    out.samples.push_back(Sample{Tensor::from({v, d0}, std::move(features)), std::move(labels)});
  }
  if (!r.at_end()) inconsistent(src, std::to_string(r.remaining()) + " trailing bytes");
  out.refresh_statistics(head_min, tail_max);
  return out;
}

}  // namespace cprfl
