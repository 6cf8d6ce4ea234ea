// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CPRFL_EVAL_HPP_
#define CPRFL_EVAL_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "cprfl/data.hpp"

namespace cprfl {

/// Non-interpolated average precision of one ranking.
///
/// Samples are ranked by descending score, ties by ascending original index.
/// AP = (1/P) * sum over positive ranks k of precision@k. Returns nullopt when
/// no label is positive; the caller decides how to treat such classes.
std::optional<double> average_precision(std::span<const double> scores, std::span<const double> labels);

struct EvalReport {
  std::vector<double> per_class_ap;  // NaN for skipped classes
  double map_total = 0.0;
  double map_head = 0.0;    // NaN when the group has no scored class
  double map_medium = 0.0;  // NaN when the group has no scored class
  double map_tail = 0.0;    // NaN when the group has no scored class
  std::array<std::size_t, 3> n_classes_per_group{};  // scored classes: head, medium, tail
  std::vector<std::size_t> skipped_classes;          // classes without test positives
};

/// Per-class AP over the columns of an n x c score matrix and the group means.
EvalReport map_report(std::span<const double> scores, std::span<const double> labels, std::size_t n, std::size_t c,
                      std::span<const Group> groups);

/// Field names match the struct; NaN values are written as null.
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

}  // namespace cprfl

#endif  // CPRFL_EVAL_HPP_
