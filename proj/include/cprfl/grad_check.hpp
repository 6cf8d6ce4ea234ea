// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CPRFL_GRAD_CHECK_HPP_
#define CPRFL_GRAD_CHECK_HPP_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cprfl/graph.hpp"
#include "cprfl/tensor.hpp"

namespace cprfl {

/// Builds a scalar loss from the current parameter values on a fresh graph.
using ScalarFunction = std::function<Tensor(Graph&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares backward() against central differences for every entry of every
/// parameter. Relative error per entry is |a - n| / max(|a|, |n|, 1e-8).
/// Parameters are perturbed in place and restored bit-exactly.
GradCheckResult grad_check(const ScalarFunction& f, std::vector<NamedTensor>& params, double eps);

}  // namespace cprfl

#endif  // CPRFL_GRAD_CHECK_HPP_
