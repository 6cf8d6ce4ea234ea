// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CPRFL_GRAPH_HPP_
#define CPRFL_GRAPH_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cprfl/tensor.hpp"

namespace cprfl {

/// Define-by-run tape for reverse-mode differentiation.
///
/// Every primitive called on a Graph computes its value eagerly and, when any
/// input requires a gradient, appends a node holding the backward rule. A
/// Graph is built once per forward pass and thrown away afterwards. Instances
/// are independent; nothing is shared between graphs except the tensors the
/// caller passes in.
class Graph {
 public:
  /// Backward rule: receives the output gradient and adds into input grads.
  using BackwardFn = std::function<void(std::span<const double> out_grad)>;

  Graph() = default;
  /// `record == false` builds an inference-only graph: values are computed but
  /// no nodes are kept and outputs never require gradients.
  explicit Graph(bool record) : recording_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Linear algebra.
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& x);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  /// x (r x n) plus a length-n bias added to every row. The only broadcast.
  Tensor add_row_bias(const Tensor& x, const Tensor& bias);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& x, double factor);

  // Elementwise nonlinearities.
  Tensor gelu(const Tensor& x);
  Tensor sigmoid(const Tensor& x);

  // Row-wise reductions and normalizations.
  Tensor softmax_rows(const Tensor& x);
  Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);
  /// Length-r vector of row dot products of two r x n matrices.
  Tensor row_dot(const Tensor& a, const Tensor& b);
  /// 1 x n vector of column means of an r x n matrix.
  Tensor mean_rows(const Tensor& x);
  Tensor sum(const Tensor& x);

  // Structural.
  Tensor concat_rows(const Tensor& a, const Tensor& b);
  Tensor slice_rows(const Tensor& x, std::size_t from, std::size_t to);
  Tensor concat_cols(std::span<const Tensor> parts);
  Tensor slice_cols(const Tensor& x, std::size_t from, std::size_t to);
  /// Stacks equal-length vectors (or 1 x n rows) into an n_parts x n matrix.
  Tensor stack_rows(std::span<const Tensor> parts);
  Tensor reshape(const Tensor& x, Shape shape);

  /// Extension point for fused operations whose value and derivative are
  /// computed outside the engine (the losses use this). `backward` receives
  /// dLoss/dOutput and must add into the gradient buffers of `inputs`.
  Tensor custom(std::vector<Tensor> inputs, Shape shape, std::vector<double> value,
                BackwardFn backward, std::string name = "custom");

  /// Populates grad on every tensor that requires one and took part in this
  /// graph. Gradients of graph-reachable tensors are reset first, so after the
  /// call each holds exactly dLoss/dTensor for this graph; a tensor used at
  /// several sites receives the sum of all contributions.
  void backward(const Tensor& loss);

  std::size_t num_nodes() const { return nodes_.size(); }
  const std::string& node_name(std::size_t i) const { return nodes_.at(i).name; }
  /// Node indices in the order the most recent backward() visited them.
  const std::vector<std::size_t>& last_backward_order() const { return visit_order_; }

 private:
  struct Node {
    std::string name;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  /// Records a node when any input needs a gradient and marks the output.
  Tensor record(const char* name, std::vector<Tensor> inputs, Tensor output, BackwardFn backward);

  bool recording_ = true;
  std::vector<Node> nodes_;
  std::vector<std::size_t> visit_order_;
};

}  // namespace cprfl

#endif  // CPRFL_GRAPH_HPP_
