// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cprfl/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "cprfl/errors.hpp"

namespace cprfl {

namespace {

double evaluate(const ScalarFunction& f, const std::string& name) {
  Graph g;
  const double value = f(g).item();
  if (!std::isfinite(value)) throw NonFiniteError("grad_check: non-finite loss while perturbing " + name);
  return value;
}

}  // namespace

GradCheckResult grad_check(const ScalarFunction& f, std::vector<NamedTensor>& params, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ArgumentError("grad_check: eps must be positive and finite");

  std::vector<std::vector<double>> analytic;
  {
    Graph g;
    Tensor loss = f(g);
    if (!std::isfinite(loss.item())) throw NonFiniteError("grad_check: non-finite loss at the base point");
    for (auto& p : params) p.tensor.zero_grad();
    g.backward(loss);
    for (auto& p : params) {
      auto grad = p.tensor.grad();
      for (double v : grad) {
        if (!std::isfinite(v)) throw NonFiniteError("grad_check: non-finite analytic gradient for " + p.name);
      }
      analytic.emplace_back(grad.begin(), grad.end());
    }
  }

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    auto values = p.tensor.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + eps;
      const double plus = evaluate(f, p.name);
      values[i] = original - eps;
      const double minus = evaluate(f, p.name);
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++result.entries_checked;
      if (result.worst_parameter.empty() || rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p.name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace cprfl
