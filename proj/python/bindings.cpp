// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

// Python bindings. Structured values cross the boundary as JSON text; the
// package wrapper turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "json.hpp"

#include "cprfl/errors.hpp"
#include "cprfl/train.hpp"

namespace py = pybind11;

namespace {

using nlohmann::json;

std::string generate(const std::string& out_prefix, const std::string& generator_json) {
  const auto j = json::parse(generator_json);
  cprfl::GeneratorConfig cfg;
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("c", cfg.c);
  read("v", cfg.v);
  read("d0", cfg.d0);
  read("n_max", cfg.n_max);
  read("pareto_exponent", cfg.pareto_exponent);
  read("rank_offset", cfg.rank_offset);
  read("co_occurrence_strength", cfg.co_occurrence_strength);
  read("noise_sigma", cfg.noise_sigma);
  read("test_per_class", cfg.test_per_class);
  read("seed", cfg.seed);
  const auto split = cprfl::generate_synthetic_lt(cfg);
  cprfl::save_features(split.train, cprfl::train_file(out_prefix));
  cprfl::save_features(split.test, cprfl::test_file(out_prefix));
  cprfl::save_embedding({split.prototype_means, split.train.class_names}, cprfl::embedding_file(out_prefix));
  json groups = json::array();
  for (auto g : split.train.groups) groups.push_back(cprfl::group_name(g));
  return json{{"class_counts", split.train.class_counts},
              {"groups", groups},
              {"train_samples", split.train.size()},
              {"test_samples", split.test.size()}}
      .dump();
}

std::string train(const std::string& config_json, const std::string& data_prefix, const std::string& out_dir) {
  const auto cfg = cprfl::TrainConfig::from_json(json::parse(config_json));
  cprfl::TrainResult result;
  {
    py::gil_scoped_release release;
    result = cprfl::train(cfg, data_prefix, out_dir);
  }
  json history = json::array();
  for (const auto& rec : result.history) {
    history.push_back(
        {{"epoch", rec.epoch}, {"train_loss", rec.train_loss}, {"report", cprfl::report_to_json(rec.report)}});
  }
  return history.dump();
}

std::string evaluate(const std::string& checkpoint, const std::string& data_prefix) {
  return cprfl::report_to_json(cprfl::evaluate(checkpoint, data_prefix)).dump();
}

std::string gradcheck(const std::string& config_json, double eps, double tolerance) {
  const auto cfg = cprfl::TrainConfig::from_json(json::parse(config_json));
  const auto rep = cprfl::gradcheck_command(cfg, eps, tolerance);
  return json{{"passed", rep.passed},
              {"max_relative_error", rep.result.max_relative_error},
              {"worst_parameter", rep.result.worst_parameter},
              {"parameters", rep.parameter_count}}
      .dump();
}

std::optional<double> average_precision(const std::vector<double>& scores, const std::vector<double>& labels) {
  return cprfl::average_precision(scores, labels);
}

std::vector<std::string> split_groups(const std::vector<std::size_t>& counts) {
  std::vector<std::string> out;
  for (auto g : cprfl::split_groups(counts)) out.push_back(cprfl::group_name(g));
  return out;
}

double loss(const std::string& name, const std::vector<double>& scores, const std::vector<double>& labels,
            double gamma_pos, double gamma_neg, double mu) {
  cprfl::LossConfig cfg;
  cfg.kind = cprfl::loss_kind_from_name(name);
  cfg.gamma_pos = gamma_pos;
  cfg.gamma_neg = gamma_neg;
  cfg.mu = mu;
  return cprfl::loss_value(scores, labels, cfg);
}

}  // namespace

PYBIND11_MODULE(_cprfl, m) {
  m.doc() = "Category-prompt refined feature learning for long-tailed multi-label classification";

  auto base = py::register_exception<cprfl::Error>(m, "Error");
  py::register_exception<cprfl::DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<cprfl::ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<cprfl::NonFiniteError>(m, "NonFiniteError", base.ptr());
  py::register_exception<cprfl::FormatError>(m, "FormatError", base.ptr());

  m.def("_generate", &generate, py::arg("out_prefix"), py::arg("generator_json"));
  m.def("_train", &train, py::arg("config_json"), py::arg("data_prefix"), py::arg("out_dir"));
  m.def("_evaluate", &evaluate, py::arg("checkpoint"), py::arg("data_prefix"));
  m.def("_gradcheck", &gradcheck, py::arg("config_json"), py::arg("eps"), py::arg("tolerance"));
  m.def("average_precision", &average_precision, py::arg("scores"), py::arg("labels"),
        "Average precision of one ranking, or None without positives.");
  m.def("split_groups", &split_groups, py::arg("class_counts"), "Head/medium/tail group of each class.");
  m.def("loss", &loss, py::arg("name"), py::arg("scores"), py::arg("labels"), py::arg("gamma_pos") = 0.0,
        py::arg("gamma_neg") = 4.0, py::arg("mu") = 0.05, "Per-sample loss summed over classes.");
}
