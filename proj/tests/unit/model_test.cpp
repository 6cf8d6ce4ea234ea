// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cprfl/errors.hpp"
#include "cprfl/grad_check.hpp"
#include "cprfl/model.hpp"

namespace cprfl {
namespace {

// Straight-line reference implementation on plain row-major matrices.
struct Mat {
  std::size_t r = 0, c = 0;
  std::vector<double> v;
  Mat(std::size_t rows, std::size_t cols) : r(rows), c(cols), v(rows * cols, 0.0) {}
  explicit Mat(const Tensor& t) : r(t.rows()), c(t.cols()), v(t.to_vector()) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * c + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * c + j]; }
};

Mat mm(const Mat& a, const Mat& b) {
  Mat out(a.r, b.c);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < b.c; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.c; ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Mat plus_bias(Mat x, const Tensor& b) {
  for (std::size_t i = 0; i < x.r; ++i)
    for (std::size_t j = 0; j < x.c; ++j) x(i, j) += b.at(j);
  return x;
}

Mat plus(Mat a, const Mat& b) {
  for (std::size_t k = 0; k < a.v.size(); ++k) a.v[k] += b.v[k];
  return a;
}

double ref_gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

Mat gelu_all(Mat x) {
  for (auto& e : x.v) e = ref_gelu(e);
  return x;
}

Mat layer_norm(const Mat& x, const Tensor& gain, const Tensor& bias) {
  Mat out(x.r, x.c);
  for (std::size_t i = 0; i < x.r; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < x.c; ++j) mean += x(i, j);
    mean /= double(x.c);
    for (std::size_t j = 0; j < x.c; ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= double(x.c);
    for (std::size_t j = 0; j < x.c; ++j) out(i, j) = (x(i, j) - mean) / std::sqrt(var + 1e-5) * gain.at(j) + bias.at(j);
  }
  return out;
}

// Attention of every row of z over every row of z, restricted to columns [lo, hi).
Mat attention(const Mat& q, const Mat& k, const Mat& val, std::size_t lo, std::size_t hi, double scale) {
  Mat out(q.r, hi - lo);
  for (std::size_t i = 0; i < q.r; ++i) {
    std::vector<double> w(k.r);
    for (std::size_t j = 0; j < k.r; ++j) {
      double s = 0.0;
      for (std::size_t t = lo; t < hi; ++t) s += q(i, t) * k(j, t);
      w[j] = s * scale;
    }
    const double mx = *std::max_element(w.begin(), w.end());
    double z = 0.0;
    for (auto& e : w) z += (e = std::exp(e - mx));
    for (std::size_t j = 0; j < k.r; ++j)
      for (std::size_t t = lo; t < hi; ++t) out(i, t - lo) += w[j] / z * val(j, t);
  }
  return out;
}

// Full encoder over all v + c rows; the prompt rows of the result are returned.
std::vector<double> reference_logits(const Tensor& features, const ModelParams& p) {
  const auto& d = p.dims;
  const auto& e = p.interaction;
  Mat f = plus_bias(mm(Mat(features), Mat(p.phi_w)), p.phi_b);
  Mat prompts = plus_bias(
      mm(gelu_all(plus_bias(mm(Mat(p.embedding.weights), Mat(p.prompt_init.w1)), p.prompt_init.b1)),
         Mat(p.prompt_init.w2)),
      p.prompt_init.b2);
  Mat z(d.v + d.c, d.d);
  std::copy(f.v.begin(), f.v.end(), z.v.begin());
  std::copy(prompts.v.begin(), prompts.v.end(), z.v.begin() + static_cast<std::ptrdiff_t>(f.v.size()));
  Mat q = mm(z, Mat(e.wq)), k = mm(z, Mat(e.wk)), val = mm(z, Mat(e.wv));
  Mat out(z.r, d.d);
  if (p.literal_equations) {
    Mat att = attention(q, k, val, 0, d.d, 1.0 / std::sqrt(double(d.d)));
    out = plus_bias(mm(gelu_all(plus_bias(mm(att, Mat(e.wr)), e.b3)), Mat(e.wf)), e.b4);
  } else {
    const std::size_t hd = d.d / d.heads;
    Mat att(z.r, d.d);
    for (std::size_t h = 0; h < d.heads; ++h) {
      Mat part = attention(q, k, val, h * hd, (h + 1) * hd, 1.0 / std::sqrt(double(hd)));
      for (std::size_t i = 0; i < z.r; ++i)
        for (std::size_t t = 0; t < hd; ++t) att(i, h * hd + t) = part(i, t);
    }
    Mat h1 = layer_norm(plus(z, mm(att, Mat(e.wo))), e.ln1_gain, e.ln1_bias);
    Mat ffn = plus_bias(mm(gelu_all(plus_bias(mm(h1, Mat(e.wr)), e.b3)), Mat(e.wf)), e.b4);
    out = layer_norm(plus(h1, ffn), e.ln2_gain, e.ln2_bias);
  }
  std::vector<double> logits(d.c);
  for (std::size_t i = 0; i < d.c; ++i)
    for (std::size_t j = 0; j < d.d; ++j) logits[i] += out(d.v + i, j) * prompts(i, j);
  return logits;
}

Tensor random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(r * c);
  for (auto& x : v) x = n(rng);
  return Tensor::from({r, c}, std::move(v));
}

SemanticEmbedding test_embedding(std::mt19937_64& rng, std::size_t c, std::size_t m) {
  SemanticEmbedding e;
  e.weights = random_matrix(rng, c, m);
  for (std::size_t i = 0; i < c; ++i) e.class_names.push_back("class" + std::to_string(i));
  return e;
}

ModelDims small_dims() {
  ModelDims d;
  d.c = 3;
  d.v = 4;
  d.d0 = 5;
  d.d = 8;
  d.heads = 2;
  d.ffn = 6;
  d.m = 7;
  d.tau = 0.5;
  return d;
}

// Init leaves biases at zero and gains at one; perturb them so they matter.
void randomize_all(ModelParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& nt : p.learnable()) {
    for (auto& x : nt.tensor.mutable_data()) x += n(rng);
  }
}

TEST(ModelDimsTest, PromptHiddenWidth) {
  ModelDims d;
  d.tau = 0.5;
  d.d = 512;
  EXPECT_EQ(d.prompt_hidden(), 256u);
}

TEST(ModelDimsTest, ValidateRejectsBadSizes) {
  ModelDims d = small_dims();
  d.heads = 3;
  EXPECT_THROW(d.validate(), ArgumentError);
  d = small_dims();
  d.v = 0;
  EXPECT_THROW(d.validate(), ArgumentError);
  d = small_dims();
  d.tau = 0.01;
  EXPECT_THROW(d.validate(), ArgumentError);
}

TEST(PromptInitTest, HandCase) {
  SemanticEmbedding e;
  e.weights = Tensor::from({2, 3}, {1, 0, -1, 0.5, 2, 0});
  PromptInitParams p{Tensor::from({3, 2}, {1, 0, 0, 1, 1, 1}), Tensor::from({2}, {0, -1}),
                     Tensor::from({2, 2}, {1, 2, 3, -1}), Tensor::from({2}, {0.1, 0.2})};
  Graph g;
  Tensor prompts = init_prompts(g, e, p);
  ASSERT_EQ(prompts.shape(), (Shape{2, 2}));
  EXPECT_NEAR(prompts.at(0, 0), -0.036500791689075246, 1e-12);
  EXPECT_NEAR(prompts.at(0, 1), 0.24550026389635843, 1e-12);
  EXPECT_NEAR(prompts.at(1, 0), 2.9697654688426356, 1e-12);
  EXPECT_NEAR(prompts.at(1, 1), 0.050117715205470204, 1e-12);
}

InteractionParams hand_interaction() {
  InteractionParams e;
  const auto eye = [] { return Tensor::from({2, 2}, {1, 0, 0, 1}); };
  e.wq = eye();
  e.wk = eye();
  e.wv = eye();
  e.wo = eye();
  e.ln1_gain = Tensor::filled({2}, 1.0);
  e.ln1_bias = Tensor::zeros({2});
  e.wr = Tensor::from({2, 1}, {1, -1});
  e.b3 = Tensor::from({1}, {0.5});
  e.wf = Tensor::from({1, 2}, {2, 0});
  e.b4 = Tensor::from({2}, {0, 0.3});
  e.ln2_gain = Tensor::filled({2}, 1.0);
  e.ln2_bias = Tensor::zeros({2});
  return e;
}

TEST(InteractionTest, HandCaseDefault) {
  Graph g;
  const Tensor f = Tensor::from({1, 2}, {1, 0});
  const Tensor p = Tensor::from({1, 2}, {0.5, 1});
  Tensor out = vsi_forward(g, f, p, hand_interaction(), 1, false);
  EXPECT_NEAR(out.at(0), -0.9999968007081873, 1e-12);
  EXPECT_NEAR(out.at(1), 0.9999968007081873, 1e-12);
  EXPECT_NEAR(classify_logits(g, out, p).item(), 0.49999840035409365, 1e-12);
}

TEST(InteractionTest, HandCaseLiteral) {
  Graph g;
  const Tensor f = Tensor::from({1, 2}, {1, 0});
  const Tensor p = Tensor::from({1, 2}, {0.5, 1});
  Tensor out = vsi_forward(g, f, p, hand_interaction(), 1, true);
  EXPECT_NEAR(out.at(0), 0.7899019332123867, 1e-12);
  EXPECT_NEAR(out.at(1), 0.3, 1e-12);
  EXPECT_NEAR(classify(g, out, p).item(), 1.0 / (1.0 + std::exp(-0.6949509666061933)), 1e-12);
}

class ForwardOracleTest : public ::testing::TestWithParam<bool> {};

TEST_P(ForwardOracleTest, MatchesReference) {
  const bool literal = GetParam();
  std::mt19937_64 rng(21);
  const ModelDims d = small_dims();
  ModelParams p = init_model(d, test_embedding(rng, d.c, d.m), 5, literal);
  randomize_all(p, 6);
  for (int trial = 0; trial < 3; ++trial) {
    const Tensor x = random_matrix(rng, d.v, d.d0);
    Graph g;
    Tensor prompts = init_prompts(g, p.embedding, p.prompt_init);
    const auto got = forward_logits_with_prompts(g, x, p, prompts, prompts).to_vector();
    const auto want = reference_logits(x, p);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-10) << "class " << i;
    const auto probs = forward(g, x, p).to_vector();
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(probs[i], 1.0 / (1.0 + std::exp(-want[i])), 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(BothPaths, ForwardOracleTest, ::testing::Bool());

TEST(ForwardTest, BatchMatchesPerSample) {
  std::mt19937_64 rng(22);
  const ModelDims d = small_dims();
  ModelParams p = init_model(d, test_embedding(rng, d.c, d.m), 1);
  std::vector<Tensor> xs{random_matrix(rng, d.v, d.d0), random_matrix(rng, d.v, d.d0)};
  Graph g;
  Tensor batch = forward_batch(g, xs, p);
  ASSERT_EQ(batch.shape(), (Shape{2, d.c}));
  for (std::size_t i = 0; i < 2; ++i) {
    Tensor single = forward(g, xs[i], p);
    for (std::size_t j = 0; j < d.c; ++j) EXPECT_EQ(batch.at(i, j), single.at(j));
  }
}

TEST(ForwardTest, TokenOrderDoesNotMatter) {
  std::mt19937_64 rng(23);
  const ModelDims d = small_dims();
  ModelParams p = init_model(d, test_embedding(rng, d.c, d.m), 2);
  Tensor x = random_matrix(rng, d.v, d.d0);
  auto rows = x.to_vector();
  std::vector<double> reversed;
  for (std::size_t r = d.v; r-- > 0;) reversed.insert(reversed.end(), rows.begin() + r * d.d0, rows.begin() + (r + 1) * d.d0);
  Graph g;
  const auto a = forward(g, x, p).to_vector();
  const auto b = forward(g, Tensor::from({d.v, d.d0}, reversed), p).to_vector();
  for (std::size_t j = 0; j < d.c; ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
}

TEST(ForwardTest, ClassOrderPermutesScores) {
  std::mt19937_64 rng(24);
  const ModelDims d = small_dims();
  SemanticEmbedding e = test_embedding(rng, d.c, d.m);
  ModelParams p = init_model(d, e, 3);
  const Tensor x = random_matrix(rng, d.v, d.d0);
  Graph g;
  const auto base = forward(g, x, p).to_vector();
  // Swap the first and last class rows of the embedding.
  auto w = e.weights.to_vector();
  for (std::size_t j = 0; j < d.m; ++j) std::swap(w[j], w[(d.c - 1) * d.m + j]);
  p.embedding.weights = Tensor::from({d.c, d.m}, w);
  const auto swapped = forward(g, x, p).to_vector();
  EXPECT_NEAR(swapped[0], base[d.c - 1], 1e-12);
  EXPECT_NEAR(swapped[d.c - 1], base[0], 1e-12);
  EXPECT_NEAR(swapped[1], base[1], 1e-12);
}

TEST(ForwardTest, PromptsDoNotDependOnFeatures) {
  std::mt19937_64 rng(25);
  const ModelDims d = small_dims();
  ModelParams p = init_model(d, test_embedding(rng, d.c, d.m), 4);
  Graph g;
  const auto a = init_prompts(g, p.embedding, p.prompt_init).to_vector();
  forward(g, random_matrix(rng, d.v, d.d0), p);
  const auto b = init_prompts(g, p.embedding, p.prompt_init).to_vector();
  EXPECT_EQ(a, b);
}

TEST(ForwardTest, WrongFeatureWidthThrows) {
  std::mt19937_64 rng(26);
  const ModelDims d = small_dims();
  ModelParams p = init_model(d, test_embedding(rng, d.c, d.m), 4);
  Graph g;
  EXPECT_THROW(forward(g, random_matrix(rng, d.v, d.d0 + 1), p), DimensionError);
  EXPECT_THROW(init_model(d, test_embedding(rng, d.c + 1, d.m), 0), DimensionError);
}

TEST(InitTest, SeededAndBounded) {
  std::mt19937_64 rng(27);
  const ModelDims d = small_dims();
  SemanticEmbedding e = test_embedding(rng, d.c, d.m);
  ModelParams a = init_model(d, e, 9);
  ModelParams b = init_model(d, e, 9);
  ModelParams c = init_model(d, e, 10);
  EXPECT_EQ(a.phi_w.to_vector(), b.phi_w.to_vector());
  EXPECT_NE(a.phi_w.to_vector(), c.phi_w.to_vector());
  const double bound = 1.0 / std::sqrt(double(d.d0));
  for (double x : a.phi_w.data()) EXPECT_LE(std::abs(x), bound);
  for (double x : a.phi_b.data()) EXPECT_EQ(x, 0.0);
  for (double x : a.interaction.ln1_gain.data()) EXPECT_EQ(x, 1.0);
  EXPECT_FALSE(a.embedding.weights.requires_grad());
}

TEST(InitTest, LearnableNames) {
  std::mt19937_64 rng(28);
  const ModelDims d = small_dims();
  const auto names = [](const std::vector<NamedTensor>& ts) {
    std::vector<std::string> out;
    for (const auto& t : ts) out.push_back(t.name);
    return out;
  };
  ModelParams std_p = init_model(d, test_embedding(rng, d.c, d.m), 0, false);
  ModelParams lit_p = init_model(d, test_embedding(rng, d.c, d.m), 0, true);
  const auto s = names(std_p.learnable());
  const auto l = names(lit_p.learnable());
  EXPECT_EQ(s.size(), 18u);
  EXPECT_EQ(l.size(), 13u);
  EXPECT_NE(std::find(s.begin(), s.end(), "vsi.Wo"), s.end());
  EXPECT_EQ(std::find(l.begin(), l.end(), "vsi.Wo"), l.end());
  EXPECT_EQ(names(std_p.all_tensors()).back(), "embedding.W");
  for (const auto& t : std_p.learnable()) EXPECT_TRUE(t.tensor.requires_grad()) << t.name;
}

TEST(GradientTest, SmallModelMatchesFiniteDifferences) {
  for (bool literal : {false, true}) {
    std::mt19937_64 rng(29);
    const ModelDims d = small_dims();
    ModelParams p = init_model(d, test_embedding(rng, d.c, d.m), 7, literal);
    randomize_all(p, 8);
    const Tensor x = random_matrix(rng, d.v, d.d0);
    const std::vector<double> weights{0.7, -1.3, 0.4};
    auto params = p.learnable();
    auto f = [&](Graph& g) {
      Tensor prompts = init_prompts(g, p.embedding, p.prompt_init);
      Tensor logits = forward_logits_with_prompts(g, x, p, prompts, prompts);
      return g.sum(g.mul(logits, Tensor::from({d.c}, weights)));
    };
    const auto r = grad_check(f, params, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-5) << (literal ? "literal " : "default ") << r.worst_parameter << "["
                                          << r.worst_index << "]";
  }
}

TEST(DualPathTest, RoutesSumToTotal) {
  for (bool literal : {false, true}) {
    std::mt19937_64 rng(30);
    const ModelDims d = small_dims();
    ModelParams p = init_model(d, test_embedding(rng, d.c, d.m), 11, literal);
    randomize_all(p, 12);
    const Tensor x = random_matrix(rng, d.v, d.d0);
    const std::vector<double> labels{1.0, 0.0, 1.0};
    for (LossKind kind : {LossKind::kAsl, LossKind::kBce}) {
      LossConfig cfg;
      cfg.kind = kind;
      const auto g = dual_path_grads(x, labels, p, cfg);
      ASSERT_EQ(g.total.size(), d.c * d.d);
      double via_norm = 0.0;
      for (std::size_t k = 0; k < g.total.size(); ++k) {
        EXPECT_NEAR(g.total[k], g.direct[k] + g.via_encoder[k], 1e-10);
        via_norm += std::abs(g.via_encoder[k]);
      }
      EXPECT_GT(via_norm, 0.0);
    }
  }
}

TEST(DualPathTest, EncoderRouteVanishesWhenEncoderIgnoresPrompts) {
  std::mt19937_64 rng(31);
  const ModelDims d = small_dims();
  ModelParams p = init_model(d, test_embedding(rng, d.c, d.m), 13, true);
  auto& e = p.interaction;
  for (Tensor* t : {&e.wq, &e.wk, &e.wv, &e.wr, &e.b3, &e.wf}) {
    for (auto& x : t->mutable_data()) x = 0.0;
  }
  for (auto& x : e.b4.mutable_data()) x = 0.5;
  const auto g = dual_path_grads(random_matrix(rng, d.v, d.d0), std::vector<double>{1, 0, 0}, p, LossConfig{});
  for (double x : g.via_encoder) EXPECT_EQ(x, 0.0);
  double direct = 0.0;
  for (double x : g.direct) direct += std::abs(x);
  EXPECT_GT(direct, 0.0);
}

TEST(BaselineTest, PooledLinearLogits) {
  std::mt19937_64 rng(32);
  const ModelDims d = small_dims();
  auto model = make_classifier("linear_baseline", d, SemanticEmbedding{}, 3, false);
  const auto params = model->learnable();
  ASSERT_EQ(params.size(), 2u);
  const Tensor& w = params[0].tensor;
  const Tensor& b = params[1].tensor;
  const Tensor x = random_matrix(rng, d.v, d.d0);
  Graph g;
  const std::vector<Tensor> batch{x};
  const auto got = model->logits(g, batch).to_vector();
  for (std::size_t j = 0; j < d.c; ++j) {
    double want = b.at(j);
    for (std::size_t k = 0; k < d.d0; ++k) {
      double pooled = 0.0;
      for (std::size_t r = 0; r < d.v; ++r) pooled += x.at(r, k);
      want += pooled / double(d.v) * w.at(k * d.c + j);
    }
    EXPECT_NEAR(got[j], want, 1e-12);
  }
  const auto probs = model->predict(g, batch).to_vector();
  for (std::size_t j = 0; j < d.c; ++j) EXPECT_NEAR(probs[j], 1.0 / (1.0 + std::exp(-got[j])), 1e-15);
}

TEST(BaselineTest, UnknownArchitectureThrows) {
  EXPECT_THROW(make_classifier("resnet", small_dims(), SemanticEmbedding{}, 0, false), ArgumentError);
}

}  // namespace
}  // namespace cprfl
