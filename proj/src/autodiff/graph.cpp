// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cprfl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cprfl/errors.hpp"

namespace cprfl {

namespace {

void require_rank2(const Tensor& x, const char* op) {
  if (x.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " + shape_to_string(x.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
}

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return cdf + x * pdf;
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor Graph::record(const char* name, std::vector<Tensor> inputs, Tensor output, BackwardFn backward) {
  if (!recording_) return output;
  const bool needs_grad =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (!needs_grad) return output;
  output.set_requires_grad(true);
  nodes_.push_back(Node{name, std::move(inputs), output, std::move(backward)});
  return output;
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  return record("matmul", {a, b}, Tensor::from({m, n}, std::move(out)),
                [a, b, m, k, n](std::span<const double> g) mutable {
                  if (a.requires_grad()) {
                    auto ga = a.grad_buffer();
                    const auto B = b.data();
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * B[p * n + j];
                        ga[i * k + p] += acc;
                      }
                    }
                  }
                  if (b.requires_grad()) {
                    auto gb = b.grad_buffer();
                    const auto A = a.data();
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        const double aip = A[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
                      }
                    }
                  }
                });
}

Tensor Graph::transpose(const Tensor& x) {
  require_rank2(x, "transpose");
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  std::vector<double> out(r * c);
  const auto X = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = X[i * c + j];
  return record("transpose", {x}, Tensor::from({c, r}, std::move(out)),
                [x, r, c](std::span<const double> g) mutable {
                  auto gx = x.grad_buffer();
                  for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
                });
}

Tensor Graph::add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto A = a.data(), B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
  return record("add", {a, b}, Tensor::from(a.shape(), std::move(out)),
                [a, b](std::span<const double> g) mutable {
                  if (a.requires_grad()) {
                    auto ga = a.grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                  }
                  if (b.requires_grad()) {
                    auto gb = b.grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                  }
                });
}

Tensor Graph::sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  const auto A = a.data(), B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] - B[i];
  return record("sub", {a, b}, Tensor::from(a.shape(), std::move(out)),
                [a, b](std::span<const double> g) mutable {
                  if (a.requires_grad()) {
                    auto ga = a.grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                  }
                  if (b.requires_grad()) {
                    auto gb = b.grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                  }
                });
}

Tensor Graph::add_row_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t r = x.rows(), n = x.cols();
  if (bias.size() != n || (bias.rank() == 2 && bias.shape()[0] != 1)) {
    throw DimensionError("add_row_bias: bias " + shape_to_string(bias.shape()) + " does not match columns of " +
                         shape_to_string(x.shape()));
  }
  std::vector<double> out(x.size());
  const auto X = x.data(), B = bias.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = X[i * n + j] + B[j];
  return record("add_row_bias", {x, bias}, Tensor::from(x.shape(), std::move(out)),
                [x, bias, r, n](std::span<const double> g) mutable {
                  if (x.requires_grad()) {
                    auto gx = x.grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                  }
                  if (bias.requires_grad()) {
                    auto gb = bias.grad_buffer();
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
                  }
                });
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto A = a.data(), B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return record("mul", {a, b}, Tensor::from(a.shape(), std::move(out)),
                [a, b](std::span<const double> g) mutable {
                  if (a.requires_grad()) {
                    auto ga = a.grad_buffer();
                    const auto B = b.data();
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
                  }
                  if (b.requires_grad()) {
                    auto gb = b.grad_buffer();
                    const auto A = a.data();
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
                  }
                });
}

Tensor Graph::scale(const Tensor& x, double factor) {
  std::vector<double> out(x.size());
  const auto X = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i] * factor;
  return record("scale", {x}, Tensor::from(x.shape(), std::move(out)),
                [x, factor](std::span<const double> g) mutable {
                  auto gx = x.grad_buffer();
                  for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
                });
}

Tensor Graph::gelu(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto X = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gelu_value(X[i]);
  return record("gelu", {x}, Tensor::from(x.shape(), std::move(out)), [x](std::span<const double> g) mutable {
    auto gx = x.grad_buffer();
    const auto X = x.data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * gelu_derivative(X[i]);
  });
}

Tensor Graph::sigmoid(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto X = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_value(X[i]);
  Tensor y = Tensor::from(x.shape(), std::move(out));
  return record("sigmoid", {x}, y, [x, y](std::span<const double> g) mutable {
    auto gx = x.grad_buffer();
    const auto Y = y.data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * Y[i] * (1.0 - Y[i]);
  });
}

Tensor Graph::softmax_rows(const Tensor& x) {
  const std::size_t r = x.rows(), n = x.cols();
  std::vector<double> out(x.size());
  const auto X = x.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = X.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      total += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= total;
  }
  Tensor y = Tensor::from(x.shape(), std::move(out));
  return record("softmax_rows", {x}, y, [x, y, r, n](std::span<const double> g) mutable {
    auto gx = x.grad_buffer();
    const auto Y = y.data();
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * Y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += Y[i * n + j] * (g[i * n + j] - dot);
    }
  });
}

Tensor Graph::layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t r = x.rows(), n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm_rows: gain/bias " + shape_to_string(gain.shape()) + "/" +
                         shape_to_string(bias.shape()) + " do not match columns of " + shape_to_string(x.shape()));
  }
  if (!(eps >= 0.0)) throw ArgumentError("layer_norm_rows: eps must be non-negative");
  std::vector<double> normalized(x.size());
  std::vector<double> inv_std(r);
  const auto X = x.data(), G = gain.data(), B = bias.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = X.data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      normalized[i * n + j] = (row[j] - mean) * inv_std[i];
      out[i * n + j] = normalized[i * n + j] * G[j] + B[j];
    }
  }
  return record("layer_norm_rows", {x, gain, bias}, Tensor::from(x.shape(), std::move(out)),
                [x, gain, bias, r, n, normalized = std::move(normalized),
                 inv_std = std::move(inv_std)](std::span<const double> g) mutable {
                  const auto G = gain.data();
                  if (gain.requires_grad()) {
                    auto gg = gain.grad_buffer();
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < n; ++j) gg[j] += g[i * n + j] * normalized[i * n + j];
                  }
                  if (bias.requires_grad()) {
                    auto gb = bias.grad_buffer();
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
                  }
                  if (x.requires_grad()) {
                    auto gx = x.grad_buffer();
                    const double inv_n = 1.0 / static_cast<double>(n);
                    for (std::size_t i = 0; i < r; ++i) {
                      double mean_d = 0.0, mean_dx = 0.0;
                      for (std::size_t j = 0; j < n; ++j) {
                        const double d = g[i * n + j] * G[j];
                        mean_d += d;
                        mean_dx += d * normalized[i * n + j];
                      }
                      mean_d *= inv_n;
                      mean_dx *= inv_n;
                      for (std::size_t j = 0; j < n; ++j) {
                        const double d = g[i * n + j] * G[j];
                        gx[i * n + j] += inv_std[i] * (d - mean_d - normalized[i * n + j] * mean_dx);
                      }
                    }
                  }
                });
}

Tensor Graph::row_dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "row_dot");
  const std::size_t r = a.rows(), n = a.cols();
  std::vector<double> out(r, 0.0);
  const auto A = a.data(), B = b.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += A[i * n + j] * B[i * n + j];
  return record("row_dot", {a, b}, Tensor::from({r}, std::move(out)), [a, b, r, n](std::span<const double> g) mutable {
    if (a.requires_grad()) {
      auto ga = a.grad_buffer();
      const auto B = b.data();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i] * B[i * n + j];
    }
    if (b.requires_grad()) {
      auto gb = b.grad_buffer();
      const auto A = a.data();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[i * n + j] += g[i] * A[i * n + j];
    }
  });
}

Tensor Graph::mean_rows(const Tensor& x) {
  const std::size_t r = x.rows(), n = x.cols();
  std::vector<double> out(n, 0.0);
  const auto X = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += X[i * n + j];
  for (auto& v : out) v /= static_cast<double>(r);
  return record("mean_rows", {x}, Tensor::from({1, n}, std::move(out)), [x, r, n](std::span<const double> g) mutable {
    auto gx = x.grad_buffer();
    const double inv = 1.0 / static_cast<double>(r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[j] * inv;
  });
}

Tensor Graph::sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return record("sum", {x}, Tensor::scalar(total), [x](std::span<const double> g) mutable {
    auto gx = x.grad_buffer();
    for (auto& v : gx) v += g[0];
  });
}

Tensor Graph::concat_rows(const Tensor& a, const Tensor& b) {
  require_rank2(a, "concat_rows");
  require_rank2(b, "concat_rows");
  if (a.cols() != b.cols()) {
    throw DimensionError("concat_rows: column mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t split = a.size();
  return record("concat_rows", {a, b}, Tensor::from({a.rows() + b.rows(), a.cols()}, std::move(out)),
                [a, b, split](std::span<const double> g) mutable {
                  if (a.requires_grad()) {
                    auto ga = a.grad_buffer();
                    for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
                  }
                  if (b.requires_grad()) {
                    auto gb = b.grad_buffer();
                    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[split + i];
                  }
                });
}

Tensor Graph::slice_rows(const Tensor& x, std::size_t from, std::size_t to) {
  require_rank2(x, "slice_rows");
  if (from >= to || to > x.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(from) + ", " + std::to_string(to) +
                         ") invalid for shape " + shape_to_string(x.shape()));
  }
  const std::size_t n = x.cols();
  std::vector<double> out(x.data().begin() + from * n, x.data().begin() + to * n);
  return record("slice_rows", {x}, Tensor::from({to - from, n}, std::move(out)),
                [x, from, n](std::span<const double> g) mutable {
                  auto gx = x.grad_buffer();
                  for (std::size_t i = 0; i < g.size(); ++i) gx[from * n + i] += g[i];
                });
}

Tensor Graph::concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != r) {
      throw DimensionError("concat_cols: row mismatch " + shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(p.shape()));
    }
    total += p.cols();
  }
  std::vector<double> out(r * total);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t w = p.cols();
    const auto P = p.data();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * total + offset + j] = P[i * w + j];
    offset += w;
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return record("concat_cols", inputs, Tensor::from({r, total}, std::move(out)),
                [inputs, offsets, r, total](std::span<const double> g) mutable {
                  for (std::size_t k = 0; k < inputs.size(); ++k) {
                    auto& p = inputs[k];
                    if (!p.requires_grad()) continue;
                    auto gp = p.grad_buffer();
                    const std::size_t w = p.cols();
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += g[i * total + offsets[k] + j];
                  }
                });
}

Tensor Graph::slice_cols(const Tensor& x, std::size_t from, std::size_t to) {
  require_rank2(x, "slice_cols");
  if (from >= to || to > x.cols()) {
    throw DimensionError("slice_cols: range [" + std::to_string(from) + ", " + std::to_string(to) +
                         ") invalid for shape " + shape_to_string(x.shape()));
  }
  const std::size_t r = x.rows(), n = x.cols(), w = to - from;
  std::vector<double> out(r * w);
  const auto X = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = X[i * n + from + j];
  return record("slice_cols", {x}, Tensor::from({r, w}, std::move(out)),
                [x, from, r, n, w](std::span<const double> g) mutable {
                  auto gx = x.grad_buffer();
                  for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < w; ++j) gx[i * n + from + j] += g[i * w + j];
                });
}

Tensor Graph::stack_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("stack_rows: no inputs");
  const std::size_t n = parts[0].size();
  std::vector<double> out;
  out.reserve(parts.size() * n);
  for (const auto& p : parts) {
    if (p.size() != n || p.rows() != 1) {
      throw DimensionError("stack_rows: expected vectors of length " + std::to_string(n) + ", got " +
                           shape_to_string(p.shape()));
    }
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return record("stack_rows", inputs, Tensor::from({parts.size(), n}, std::move(out)),
                [inputs, n](std::span<const double> g) mutable {
                  for (std::size_t k = 0; k < inputs.size(); ++k) {
                    if (!inputs[k].requires_grad()) continue;
                    auto gp = inputs[k].grad_buffer();
                    for (std::size_t j = 0; j < n; ++j) gp[j] += g[k * n + j];
                  }
                });
}

Tensor Graph::reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
  }
  return record("reshape", {x}, Tensor::from(std::move(shape), x.to_vector()), [x](std::span<const double> g) mutable {
    auto gx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Tensor Graph::custom(std::vector<Tensor> inputs, Shape shape, std::vector<double> value, BackwardFn backward,
                     std::string name) {
  Tensor out = Tensor::from(std::move(shape), std::move(value));
  if (!recording_) return out;
  const bool needs_grad =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (!needs_grad) return out;
  out.set_requires_grad(true);
  nodes_.push_back(Node{std::move(name), std::move(inputs), out, std::move(backward)});
  return out;
}

void Graph::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw DimensionError("backward: loss must be a scalar, got shape " + shape_to_string(loss.shape()));
  }
  visit_order_.clear();
  if (!loss.requires_grad()) return;
  for (auto& node : nodes_) {
    node.output.grad_buffer();
    node.output.zero_grad();
    for (auto& in : node.inputs) {
      if (in.requires_grad()) {
        in.grad_buffer();
        in.zero_grad();
      }
    }
  }
  Tensor seed = loss;
  seed.grad_buffer()[0] = 1.0;
  visit_order_.reserve(nodes_.size());
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    visit_order_.push_back(i);
    nodes_[i].backward(nodes_[i].output.grad());
  }
}

}  // namespace cprfl
