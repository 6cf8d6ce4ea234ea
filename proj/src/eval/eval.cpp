// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cprfl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cprfl/errors.hpp"

namespace cprfl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_or_nan(const std::vector<double>& xs) {
  if (xs.empty()) return kNaN;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

nlohmann::json number_or_null(double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); }

double number_or_nan(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

}  // namespace

std::optional<double> average_precision(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("average_precision: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(labels.size()) + " labels");
  }
  std::size_t positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) throw ArgumentError("average_precision: labels must be 0 or 1");
    if (std::isnan(scores[i])) throw ArgumentError("average_precision: NaN score");
    positives += labels[i] == 1.0;
  }
  if (positives == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double hits = 0.0, total = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1.0) {
      hits += 1.0;
      total += hits / static_cast<double>(rank + 1);
    }
  }
  return total / static_cast<double>(positives);
}

EvalReport map_report(std::span<const double> scores, std::span<const double> labels, std::size_t n, std::size_t c,
                      std::span<const Group> groups) {
  if (scores.size() != n * c || labels.size() != n * c) {
    throw DimensionError("map_report: expected " + std::to_string(n) + "x" + std::to_string(c) + " matrices");
  }
  if (groups.size() != c) {
    throw DimensionError("map_report: " + std::to_string(groups.size()) + " groups for " + std::to_string(c) +
                         " classes");
  }
  EvalReport report;
  report.per_class_ap.assign(c, kNaN);
  std::vector<double> all;
  std::array<std::vector<double>, 3> by_group;
  std::vector<double> col_s(n), col_y(n);
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      col_s[i] = scores[i * c + j];
      col_y[i] = labels[i * c + j];
    }
    auto ap = average_precision(col_s, col_y);
    if (!ap) {
      report.skipped_classes.push_back(j);
      continue;
    }
    report.per_class_ap[j] = *ap;
    all.push_back(*ap);
    by_group[static_cast<std::size_t>(groups[j])].push_back(*ap);
  }
  report.map_total = mean_or_nan(all);
  report.map_head = mean_or_nan(by_group[0]);
  report.map_medium = mean_or_nan(by_group[1]);
  report.map_tail = mean_or_nan(by_group[2]);
  for (std::size_t g = 0; g < 3; ++g) report.n_classes_per_group[g] = by_group[g].size();
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json per_class = nlohmann::json::array();
  for (double ap : report.per_class_ap) per_class.push_back(number_or_null(ap));
  return {
      {"per_class_ap", per_class},
      {"map_total", number_or_null(report.map_total)},
      {"map_head", number_or_null(report.map_head)},
      {"map_medium", number_or_null(report.map_medium)},
      {"map_tail", number_or_null(report.map_tail)},
      {"n_classes_per_group", report.n_classes_per_group},
      {"skipped_classes", report.skipped_classes},
  };
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  for (const auto& ap : j.at("per_class_ap")) r.per_class_ap.push_back(number_or_nan(ap));
  r.map_total = number_or_nan(j.at("map_total"));
  r.map_head = number_or_nan(j.at("map_head"));
  r.map_medium = number_or_nan(j.at("map_medium"));
  r.map_tail = number_or_nan(j.at("map_tail"));
  r.n_classes_per_group = j.at("n_classes_per_group").get<std::array<std::size_t, 3>>();
  r.skipped_classes = j.at("skipped_classes").get<std::vector<std::size_t>>();
  return r;
}

}  // namespace cprfl
