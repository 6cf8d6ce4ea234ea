// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cprfl/model.hpp"

#include <cmath>
#include <random>

#include "cprfl/errors.hpp"

namespace cprfl {

std::size_t ModelDims::prompt_hidden() const {
  return static_cast<std::size_t>(std::llround(tau * static_cast<double>(d)));
}

void ModelDims::validate() const {
  if (d0 == 0 || d == 0 || v == 0 || c == 0 || heads == 0 || ffn == 0 || m == 0) {
    throw ArgumentError("model dims: every size must be at least 1");
  }
  if (d % heads != 0) {
    throw ArgumentError("model dims: d=" + std::to_string(d) + " is not divisible by heads=" + std::to_string(heads));
  }
  if (!(tau > 0.0) || prompt_hidden() < 1) throw ArgumentError("model dims: round(tau * d) must be >= 1");
}

std::vector<NamedTensor> ModelParams::learnable() const {
  const auto& pi = prompt_init;
  const auto& e = interaction;
  if (literal_equations) {
    // The literal block has no output projection and no normalization.
    return {
        {"phi.W", phi_w},  {"phi.b", phi_b},  {"pi.W1", pi.w1}, {"pi.b1", pi.b1}, {"pi.W2", pi.w2},
        {"pi.b2", pi.b2},  {"vsi.Wq", e.wq},  {"vsi.Wk", e.wk}, {"vsi.Wv", e.wv}, {"vsi.Wr", e.wr},
        {"vsi.b3", e.b3},  {"vsi.Wf", e.wf},  {"vsi.b4", e.b4},
    };
  }
  return {
      {"phi.W", phi_w},          {"phi.b", phi_b},          {"pi.W1", pi.w1},
      {"pi.b1", pi.b1},          {"pi.W2", pi.w2},          {"pi.b2", pi.b2},
      {"vsi.Wq", e.wq},          {"vsi.Wk", e.wk},          {"vsi.Wv", e.wv},
      {"vsi.Wo", e.wo},          {"vsi.ln1.gain", e.ln1_gain}, {"vsi.ln1.bias", e.ln1_bias},
      {"vsi.Wr", e.wr},          {"vsi.b3", e.b3},          {"vsi.Wf", e.wf},
      {"vsi.b4", e.b4},          {"vsi.ln2.gain", e.ln2_gain}, {"vsi.ln2.bias", e.ln2_bias},
  };
}

std::vector<NamedTensor> ModelParams::all_tensors() const {
  auto out = learnable();
  out.push_back({"embedding.W", embedding.weights});
  return out;
}

namespace {

Tensor uniform_weight(std::mt19937_64& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(fan_in * fan_out);
  for (auto& x : values) x = dist(rng);
  return Tensor::from({fan_in, fan_out}, std::move(values), true);
}

Tensor zero_vector(std::size_t n) { return Tensor::zeros({n}, true); }
Tensor one_vector(std::size_t n) { return Tensor::filled({n}, 1.0, true); }

constexpr double kLayerNormEps = 1e-5;

}  // namespace

ModelParams init_model(const ModelDims& dims, SemanticEmbedding embedding, std::uint64_t seed,
                       bool literal_equations) {
  dims.validate();
  if (embedding.weights.rank() != 2 || embedding.classes() != dims.c || embedding.width() != dims.m) {
    throw DimensionError("init_model: embedding " + shape_to_string(embedding.weights.shape()) + " does not match c=" +
                         std::to_string(dims.c) + ", m=" + std::to_string(dims.m));
  }
  embedding.weights.set_requires_grad(false);

  std::mt19937_64 rng(seed);
  ModelParams p;
  p.dims = dims;
  p.literal_equations = literal_equations;
  p.phi_w = uniform_weight(rng, dims.d0, dims.d);
  p.phi_b = zero_vector(dims.d);

  const std::size_t t = dims.prompt_hidden();
  p.prompt_init.w1 = uniform_weight(rng, dims.m, t);
  p.prompt_init.b1 = zero_vector(t);
  p.prompt_init.w2 = uniform_weight(rng, t, dims.d);
  p.prompt_init.b2 = zero_vector(dims.d);

  auto& e = p.interaction;
  e.wq = uniform_weight(rng, dims.d, dims.d);
  e.wk = uniform_weight(rng, dims.d, dims.d);
  e.wv = uniform_weight(rng, dims.d, dims.d);
  e.wo = uniform_weight(rng, dims.d, dims.d);
  e.ln1_gain = one_vector(dims.d);
  e.ln1_bias = zero_vector(dims.d);
  e.wr = uniform_weight(rng, dims.d, dims.ffn);
  e.b3 = zero_vector(dims.ffn);
  e.wf = uniform_weight(rng, dims.ffn, dims.d);
  e.b4 = zero_vector(dims.d);
  e.ln2_gain = one_vector(dims.d);
  e.ln2_bias = zero_vector(dims.d);

  p.embedding = std::move(embedding);
  return p;
}

Tensor project_features(Graph& g, const Tensor& f_loc, const ModelParams& params) {
  if (f_loc.rank() != 2 || f_loc.cols() != params.phi_w.rows()) {
    throw DimensionError("project_features: features " + shape_to_string(f_loc.shape()) + " do not have d0=" +
                         std::to_string(params.phi_w.rows()) + " columns");
  }
  return g.add_row_bias(g.matmul(f_loc, params.phi_w), params.phi_b);
}

Tensor init_prompts(Graph& g, const SemanticEmbedding& embedding, const PromptInitParams& params) {
  if (embedding.weights.rank() != 2 || embedding.width() != params.w1.rows()) {
    throw DimensionError("init_prompts: embedding " + shape_to_string(embedding.weights.shape()) +
                         " does not match W1 " + shape_to_string(params.w1.shape()));
  }
  Tensor hidden = g.gelu(g.add_row_bias(g.matmul(embedding.weights, params.w1), params.b1));
  return g.add_row_bias(g.matmul(hidden, params.w2), params.b2);
}

Tensor vsi_forward(Graph& g, const Tensor& features, const Tensor& prompts, const InteractionParams& params,
                   std::size_t heads, bool literal_equations) {
  if (features.rank() != 2 || prompts.rank() != 2 || features.cols() != prompts.cols()) {
    throw DimensionError("vsi_forward: features " + shape_to_string(features.shape()) + " and prompts " +
                         shape_to_string(prompts.shape()) + " must share the column count");
  }
  const std::size_t d = prompts.cols();
  if (params.wq.rows() != d) {
    throw DimensionError("vsi_forward: encoder width " + std::to_string(params.wq.rows()) + " vs inputs " +
                         std::to_string(d));
  }
  if (heads == 0 || d % heads != 0) {
    throw DimensionError("vsi_forward: d=" + std::to_string(d) + " not divisible by heads=" + std::to_string(heads));
  }
  const std::size_t v = features.rows();
  const std::size_t c = prompts.rows();

  Tensor tokens = g.concat_rows(features, prompts);
  Tensor queries_in = g.slice_rows(tokens, v, v + c);
  Tensor q = g.matmul(queries_in, params.wq);
  Tensor k = g.matmul(tokens, params.wk);
  Tensor val = g.matmul(tokens, params.wv);

  if (literal_equations) {
    Tensor logits = g.scale(g.matmul(q, g.transpose(k)), 1.0 / std::sqrt(static_cast<double>(d)));
    Tensor attended = g.matmul(g.softmax_rows(logits), val);
    Tensor hidden = g.gelu(g.add_row_bias(g.matmul(attended, params.wr), params.b3));
    return g.add_row_bias(g.matmul(hidden, params.wf), params.b4);
  }

  const std::size_t head_dim = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Tensor> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t lo = h * head_dim, hi = lo + head_dim;
    Tensor qh = heads == 1 ? q : g.slice_cols(q, lo, hi);
    Tensor kh = heads == 1 ? k : g.slice_cols(k, lo, hi);
    Tensor vh = heads == 1 ? val : g.slice_cols(val, lo, hi);
    Tensor weights = g.softmax_rows(g.scale(g.matmul(qh, g.transpose(kh)), scale));
    head_out.push_back(g.matmul(weights, vh));
  }
  Tensor attended = heads == 1 ? head_out[0] : g.concat_cols(head_out);
  Tensor mixed = g.matmul(attended, params.wo);
  Tensor h1 = g.layer_norm_rows(g.add(queries_in, mixed), params.ln1_gain, params.ln1_bias, kLayerNormEps);
  Tensor ffn = g.add_row_bias(g.matmul(g.gelu(g.add_row_bias(g.matmul(h1, params.wr), params.b3)), params.wf),
                              params.b4);
  return g.layer_norm_rows(g.add(h1, ffn), params.ln2_gain, params.ln2_bias, kLayerNormEps);
}

Tensor classify(Graph& g, const Tensor& refined, const Tensor& prompts) {
  return g.sigmoid(classify_logits(g, refined, prompts));
}

Tensor classify_logits(Graph& g, const Tensor& refined, const Tensor& prompts) {
  if (refined.shape() != prompts.shape()) {
    throw DimensionError("classify: refined " + shape_to_string(refined.shape()) + " vs prompts " +
                         shape_to_string(prompts.shape()));
  }
  return g.row_dot(refined, prompts);
}

Tensor forward_logits_with_prompts(Graph& g, const Tensor& features, const ModelParams& params,
                                   const Tensor& prompts_for_encoder, const Tensor& prompts_for_classifier) {
  Tensor projected = project_features(g, features, params);
  Tensor refined = vsi_forward(g, projected, prompts_for_encoder, params.interaction, params.dims.heads,
                               params.literal_equations);
  return classify_logits(g, refined, prompts_for_classifier);
}

Tensor forward_with_prompts(Graph& g, const Tensor& features, const ModelParams& params,
                            const Tensor& prompts_for_encoder, const Tensor& prompts_for_classifier) {
  return g.sigmoid(forward_logits_with_prompts(g, features, params, prompts_for_encoder, prompts_for_classifier));
}

Tensor forward(Graph& g, const Tensor& features, const ModelParams& params) {
  Tensor prompts = init_prompts(g, params.embedding, params.prompt_init);
  return forward_with_prompts(g, features, params, prompts, prompts);
}

Tensor forward_batch_logits(Graph& g, std::span<const Tensor> features, const ModelParams& params) {
  if (features.empty()) throw DimensionError("forward_batch: empty batch");
  Tensor prompts = init_prompts(g, params.embedding, params.prompt_init);
  std::vector<Tensor> rows;
  rows.reserve(features.size());
  for (const auto& f : features) rows.push_back(forward_logits_with_prompts(g, f, params, prompts, prompts));
  return g.stack_rows(rows);
}

Tensor forward_batch(Graph& g, std::span<const Tensor> features, const ModelParams& params) {
  return g.sigmoid(forward_batch_logits(g, features, params));
}

DualPathGrads dual_path_grads(const Tensor& features, std::span<const double> labels, const ModelParams& params,
                              const LossConfig& loss) {
  enum class Route { kBoth, kDirect, kViaEncoder };
  auto run = [&](Route route) {
    Graph g;
    Tensor prompts = init_prompts(g, params.embedding, params.prompt_init);
    Tensor encoder_in = route == Route::kDirect ? prompts.detach() : prompts;
    Tensor classifier_in = route == Route::kViaEncoder ? prompts.detach() : prompts;
    Tensor logits = forward_logits_with_prompts(g, features, params, encoder_in, classifier_in);
    Tensor objective = batch_loss_from_logits(g, logits, labels, loss);
    g.backward(objective);
    auto grad = prompts.grad();
    return std::vector<double>(grad.begin(), grad.end());
  };
  DualPathGrads out;
  out.total = run(Route::kBoth);
  out.direct = run(Route::kDirect);
  out.via_encoder = run(Route::kViaEncoder);
  out.rows = params.dims.c;
  out.cols = params.dims.d;
  return out;
}

}  // namespace cprfl
