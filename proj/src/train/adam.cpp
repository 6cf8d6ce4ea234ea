// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "cprfl/errors.hpp"
#include "cprfl/train.hpp"

namespace cprfl {

void adam_step(std::span<NamedTensor> params, AdamState& state, double learning_rate, double weight_decay) {
  if (state.step == std::numeric_limits<std::uint64_t>::max()) throw ArgumentError("adam: step counter overflow");
  if (state.moments.empty()) {
    for (const auto& p : params) {
      state.moments.push_back({p.name, std::vector<double>(p.tensor.size(), 0.0),
                               std::vector<double>(p.tensor.size(), 0.0)});
    }
  }
  if (state.moments.size() != params.size()) {
    throw DimensionError("adam: state tracks " + std::to_string(state.moments.size()) + " tensors, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& mom = state.moments[k];
    if (mom.name != params[k].name || mom.first.size() != params[k].tensor.size() ||
        mom.second.size() != params[k].tensor.size()) {
      throw DimensionError("adam: moment record '" + mom.name + "' does not match parameter '" + params[k].name +
                           "' " + shape_to_string(params[k].tensor.shape()));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& tensor = params[k].tensor;
    if (!tensor.requires_grad()) continue;
    auto& mom = state.moments[k];
    auto theta = tensor.mutable_data();
    auto grad = tensor.grad();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i] + weight_decay * theta[i];
      mom.first[i] = state.beta1 * mom.first[i] + (1.0 - state.beta1) * g;
      mom.second[i] = state.beta2 * mom.second[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = mom.first[i] / correction1;
      const double v_hat = mom.second[i] / correction2;
      theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace cprfl
