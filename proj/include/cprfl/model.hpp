// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CPRFL_MODEL_HPP_
#define CPRFL_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cprfl/graph.hpp"
#include "cprfl/losses.hpp"
#include "cprfl/tensor.hpp"

namespace cprfl {

/// Sizes of every part of the network.
struct ModelDims {
  std::size_t d0 = 2048;   // backbone channels of a visual token
  std::size_t d = 512;     // visual-semantic joint space width
  std::size_t v = 49;      // visual tokens per sample
  std::size_t c = 20;      // classes
  std::size_t heads = 8;   // attention heads
  std::size_t ffn = 2048;  // encoder feed-forward width
  std::size_t m = 1024;    // semantic embedding width
  double tau = 0.5;        // prompt-initializer expansion coefficient

  /// Hidden width of the prompt initializer, round(tau * d).
  std::size_t prompt_hidden() const;
  /// Throws ArgumentError when a size is zero, heads does not divide d, or
  /// the prompt hidden width rounds to zero.
  void validate() const;
};

/// Per-class semantic vectors. Never trained.
struct SemanticEmbedding {
  Tensor weights;  // c x m, requires_grad == false
  std::vector<std::string> class_names;

  std::size_t classes() const { return weights.rows(); }
  std::size_t width() const { return weights.cols(); }
};

/// Two-layer prompt initializer: P = GELU(W W1 + b1) W2 + b2.
struct PromptInitParams {
  Tensor w1;  // m x t
  Tensor b1;  // t
  Tensor w2;  // t x d
  Tensor b2;  // d
};

/// One transformer encoder layer over visual tokens and prompts.
struct InteractionParams {
  Tensor wq, wk, wv;  // d x d, split column-wise across heads
  Tensor wo;          // d x d attention output projection
  Tensor ln1_gain, ln1_bias;
  Tensor wr;  // d x ffn
  Tensor b3;  // ffn
  Tensor wf;  // ffn x d
  Tensor b4;  // d
  Tensor ln2_gain, ln2_bias;
};

struct ModelParams {
  ModelDims dims;
  bool literal_equations = false;
  Tensor phi_w;  // d0 x d
  Tensor phi_b;  // d
  PromptInitParams prompt_init;
  InteractionParams interaction;
  SemanticEmbedding embedding;

  /// Learnable tensors with stable names, in a fixed order.
  std::vector<NamedTensor> learnable() const;
  /// Learnable tensors followed by the frozen embedding ("embedding.W").
  std::vector<NamedTensor> all_tensors() const;
};

/// Uniform(+-1/sqrt(fan_in)) weights, zero biases, unit layer-norm gains.
ModelParams init_model(const ModelDims& dims, SemanticEmbedding embedding, std::uint64_t seed,
                       bool literal_equations = false);

/// F = f_loc phi_w + phi_b.
Tensor project_features(Graph& g, const Tensor& f_loc, const ModelParams& params);

/// P = GELU(W W1 + b1) W2 + b2; depends only on the embedding and weights.
Tensor init_prompts(Graph& g, const SemanticEmbedding& embedding, const PromptInitParams& params);

/// Runs the encoder layer on [F; P] and returns the refined prompt rows.
///
/// Default path: multi-head attention scaled by 1/sqrt(d/heads), output
/// projection, residual + layer norm, GELU feed-forward, residual + layer
/// norm. With `literal_equations` the block is single-head attention scaled by
/// 1/sqrt(d) followed directly by the feed-forward, with no residuals, no
/// output projection and no normalization. Only the prompt rows are used as
/// queries; since every stage after attention is row-wise, this yields the
/// same prompt outputs as running all v + c rows.
Tensor vsi_forward(Graph& g, const Tensor& features, const Tensor& prompts, const InteractionParams& params,
                   std::size_t heads, bool literal_equations);

/// s_i = sigmoid(p'_i . p_i), one score per class.
Tensor classify(Graph& g, const Tensor& refined, const Tensor& prompts);
/// The pre-sigmoid values p'_i . p_i.
Tensor classify_logits(Graph& g, const Tensor& refined, const Tensor& prompts);

/// Full pipeline for one sample (v x d0 features) -> c probabilities.
Tensor forward(Graph& g, const Tensor& features, const ModelParams& params);

/// Pipeline with separately supplied prompt handles for the encoder input and
/// the classifier weights. Passing the same tensor twice is the normal model.
Tensor forward_with_prompts(Graph& g, const Tensor& features, const ModelParams& params,
                            const Tensor& prompts_for_encoder, const Tensor& prompts_for_classifier);

/// Logits for one sample with separately supplied prompt handles.
Tensor forward_logits_with_prompts(Graph& g, const Tensor& features, const ModelParams& params,
                                   const Tensor& prompts_for_encoder, const Tensor& prompts_for_classifier);

/// Batched forward: n x c probabilities. Prompts are computed once and shared.
Tensor forward_batch(Graph& g, std::span<const Tensor> features, const ModelParams& params);
/// Batched forward returning the n x c logits.
Tensor forward_batch_logits(Graph& g, std::span<const Tensor> features, const ModelParams& params);

/// Gradients of the loss with respect to the prompt matrix P, split by route.
struct DualPathGrads {
  std::vector<double> total;     // both uses connected
  std::vector<double> direct;    // encoder input detached; classifier route only
  std::vector<double> via_encoder;  // classifier weights detached; encoder route only
  std::size_t rows = 0;
  std::size_t cols = 0;
};

DualPathGrads dual_path_grads(const Tensor& features, std::span<const double> labels, const ModelParams& params,
                              const LossConfig& loss);

/// Common surface the trainer drives: CPRFL or the pooled linear baseline.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::string architecture() const = 0;
  virtual const ModelDims& dims() const = 0;
  /// n x c logits; training losses consume these.
  virtual Tensor logits(Graph& g, std::span<const Tensor> features) const = 0;
  /// n x c probabilities.
  Tensor predict(Graph& g, std::span<const Tensor> features) const { return g.sigmoid(logits(g, features)); }
  virtual std::vector<NamedTensor> learnable() const = 0;
  /// Everything persisted in a checkpoint, frozen tensors included.
  virtual std::vector<NamedTensor> all_tensors() const = 0;
};

class CprflClassifier final : public Classifier {
 public:
  explicit CprflClassifier(ModelParams params) : params_(std::move(params)) {}

  std::string architecture() const override { return "cprfl"; }
  const ModelDims& dims() const override { return params_.dims; }
  Tensor logits(Graph& g, std::span<const Tensor> features) const override {
    return forward_batch_logits(g, features, params_);
  }
  std::vector<NamedTensor> learnable() const override { return params_.learnable(); }
  std::vector<NamedTensor> all_tensors() const override { return params_.all_tensors(); }

  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }

 private:
  ModelParams params_;
};

/// Mean-pools the v tokens, then one linear layer and a sigmoid per class.
class LinearBaseline final : public Classifier {
 public:
  LinearBaseline(const ModelDims& dims, std::uint64_t seed);

  std::string architecture() const override { return "linear_baseline"; }
  const ModelDims& dims() const override { return dims_; }
  Tensor logits(Graph& g, std::span<const Tensor> features) const override;
  std::vector<NamedTensor> learnable() const override;
  std::vector<NamedTensor> all_tensors() const override { return learnable(); }

 private:
  ModelDims dims_;
  Tensor weight_;  // d0 x c
  Tensor bias_;    // c
};

/// Builds "cprfl" or "linear_baseline". The embedding is ignored by the baseline.
std::unique_ptr<Classifier> make_classifier(const std::string& architecture, const ModelDims& dims,
                                            SemanticEmbedding embedding, std::uint64_t seed,
                                            bool literal_equations);

}  // namespace cprfl

#endif  // CPRFL_MODEL_HPP_
