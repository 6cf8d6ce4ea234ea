// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "cprfl/errors.hpp"
#include "cprfl/model.hpp"

namespace cprfl {

LinearBaseline::LinearBaseline(const ModelDims& dims, std::uint64_t seed) : dims_(dims) {
  if (dims.d0 == 0 || dims.c == 0 || dims.v == 0) throw ArgumentError("linear baseline: sizes must be >= 1");
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims.d0));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(dims.d0 * dims.c);
  for (auto& x : w) x = dist(rng);
  weight_ = Tensor::from({dims.d0, dims.c}, std::move(w), true);
  bias_ = Tensor::zeros({dims.c}, true);
}

Tensor LinearBaseline::logits(Graph& g, std::span<const Tensor> features) const {
  if (features.empty()) throw DimensionError("linear baseline: empty batch");
  std::vector<Tensor> pooled;
  pooled.reserve(features.size());
  for (const auto& f : features) {
    if (f.rank() != 2 || f.cols() != dims_.d0) {
      throw DimensionError("linear baseline: features " + shape_to_string(f.shape()) + " do not have d0=" +
                           std::to_string(dims_.d0) + " columns");
    }
    pooled.push_back(g.mean_rows(f));
  }
  Tensor stacked = g.stack_rows(pooled);
  return g.add_row_bias(g.matmul(stacked, weight_), bias_);
}

std::vector<NamedTensor> LinearBaseline::learnable() const {
  return {{"baseline.W", weight_}, {"baseline.b", bias_}};
}

std::unique_ptr<Classifier> make_classifier(const std::string& architecture, const ModelDims& dims,
                                            SemanticEmbedding embedding, std::uint64_t seed,
                                            bool literal_equations) {
  if (architecture == "cprfl") {
    return std::make_unique<CprflClassifier>(init_model(dims, std::move(embedding), seed, literal_equations));
  }
  if (architecture == "linear_baseline") return std::make_unique<LinearBaseline>(dims, seed);
  throw ArgumentError("unknown architecture '" + architecture + "' (expected cprfl or linear_baseline)");
}

}  // namespace cprfl
