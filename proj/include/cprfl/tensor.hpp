// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CPRFL_TENSOR_HPP_
#define CPRFL_TENSOR_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cprfl {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient accumulator.
///
/// A Tensor is a cheap handle: copies share the same storage, so a parameter
/// handed to a Graph is the same object the optimizer later updates. Values are
/// treated as immutable once a tensor has been used in a graph; only the
/// gradient buffer is written by backward().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  /// Row count for rank-2 tensors; 1 for vectors.
  std::size_t rows() const;
  /// Column count for rank-2 tensors; length for vectors.
  std::size_t cols() const;

  std::span<const double> data() const;
  /// Write access for optimizers and initializers. Must not be used on
  /// tensors that an unfinished graph still depends on.
  std::span<double> mutable_data();

  double item() const;
  double at(std::size_t i) const { return data()[i]; }
  double at(std::size_t r, std::size_t c) const { return data()[r * cols() + c]; }

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  /// Gradient values; all zeros when nothing has been accumulated yet.
  std::span<const double> grad() const;
  /// Gradient buffer, allocated (zeroed) on first access.
  /// Handle semantics: writable through a const handle, like shared_ptr.
  std::span<double> grad_buffer() const;
  void zero_grad();

  /// New tensor holding a copy of the values, cut off from any graph.
  Tensor detach() const;
  /// Deep copy including the requires_grad flag, without gradient.
  Tensor clone() const;

  bool all_finite() const;
  std::vector<double> to_vector() const;

  /// True when both handles point at the same storage.
  bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  struct Storage;
  explicit Tensor(std::shared_ptr<Storage> impl) : impl_(std::move(impl)) {}
  Storage& storage() const;

  std::shared_ptr<Storage> impl_;
};

/// A tensor together with a stable, checkpoint-facing name.
struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace cprfl

#endif  // CPRFL_TENSOR_HPP_
