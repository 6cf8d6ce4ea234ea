// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: gen-data, train, eval and gradcheck.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "cprfl/errors.hpp"
#include "cprfl/train.hpp"

namespace {

using nlohmann::json;

constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 3;

std::string error_kind(const std::exception& ex) {
  if (const auto* f = dynamic_cast<const cprfl::FormatError*>(&ex)) {
    switch (f->kind()) {
      case cprfl::FormatError::Kind::kBadMagic: return "format.bad_magic";
      case cprfl::FormatError::Kind::kVersion: return "format.version";
      case cprfl::FormatError::Kind::kTruncated: return "format.truncated";
      case cprfl::FormatError::Kind::kInconsistent: return "format.inconsistent";
      case cprfl::FormatError::Kind::kIo: return "io";
    }
  }
  if (dynamic_cast<const cprfl::DimensionError*>(&ex)) return "dimension";
  if (dynamic_cast<const cprfl::ArgumentError*>(&ex)) return "argument";
  if (dynamic_cast<const cprfl::NonFiniteError*>(&ex)) return "non_finite";
  return "internal";
}

void report_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw cprfl::FormatError(cprfl::FormatError::Kind::kIo, "cannot write " + path);
}

struct GenDataArgs {
  std::string out;
  cprfl::GeneratorConfig cfg;
};

int run_gen_data(const GenDataArgs& args) {
  const auto split = cprfl::generate_synthetic_lt(args.cfg);
  cprfl::save_features(split.train, cprfl::train_file(args.out));
  cprfl::save_features(split.test, cprfl::test_file(args.out));
  cprfl::SemanticEmbedding emb{split.prototype_means, split.train.class_names};
  cprfl::save_embedding(emb, cprfl::embedding_file(args.out));
  json groups = json::array();
  for (auto g : split.train.groups) groups.push_back(cprfl::group_name(g));
  std::cout << json{{"train", cprfl::train_file(args.out).string()},
                    {"test", cprfl::test_file(args.out).string()},
                    {"embedding", cprfl::embedding_file(args.out).string()},
                    {"class_counts", split.train.class_counts},
                    {"groups", groups}}
                   .dump()
            << '\n';
  return 0;
}

struct TrainArgs {
  std::string config, data, out_dir, resume;
};

int run_train(const TrainArgs& args) {
  const auto cfg = cprfl::TrainConfig::from_file(args.config);
  const auto data = cprfl::load_train_data(args.data);
  cprfl::TrainOptions options;
  options.out_dir = args.out_dir;
  cprfl::Checkpoint resume;
  if (!args.resume.empty()) {
    resume = cprfl::load_checkpoint(args.resume);
    options.resume = &resume;
  }
  options.on_epoch = [](const cprfl::EpochRecord& rec) {
    std::cout << json{{"epoch", rec.epoch},
                      {"train_loss", rec.train_loss},
                      {"map_total", cprfl::report_to_json(rec.report)["map_total"]},
                      {"map_tail", cprfl::report_to_json(rec.report)["map_tail"]}}
                     .dump()
              << std::endl;
  };
  cprfl::train(cfg, data, options);
  return 0;
}

struct EvalArgs {
  std::string checkpoint, data, report;
};

int run_eval(const EvalArgs& args) {
  const auto report = cprfl::evaluate(args.checkpoint, args.data);
  const json j = cprfl::report_to_json(report);
  if (!args.report.empty()) write_json(j, args.report);
  std::cout << j.dump() << '\n';
  return 0;
}

struct GradCheckArgs {
  std::string config;
  double eps = 1e-5;
  double tolerance = 1e-4;
};

int run_gradcheck(const GradCheckArgs& args) {
  const auto cfg = cprfl::TrainConfig::from_file(args.config);
  const auto rep = cprfl::gradcheck_command(cfg, args.eps, args.tolerance);
  std::cout << json{{"passed", rep.passed},
                    {"max_relative_error", rep.result.max_relative_error},
                    {"worst_parameter", rep.result.worst_parameter},
                    {"worst_index", rep.result.worst_index},
                    {"analytic", rep.result.analytic},
                    {"numeric", rep.result.numeric},
                    {"parameters", rep.parameter_count},
                    {"tolerance", rep.tolerance}}
                   .dump()
            << '\n';
  if (!rep.passed) {
    report_error("gradcheck.tolerance", "max relative error " + std::to_string(rep.result.max_relative_error) +
                                            " at " + rep.result.worst_parameter + " exceeds " +
                                            std::to_string(rep.tolerance));
    return kExitCheckFailed;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Category-prompt refined feature learning for long-tailed multi-label classification"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic long-tailed dataset");
  gen_cmd->add_option("--out", gen.out, "Output prefix")->required();
  gen_cmd->add_option("--classes", gen.cfg.c)->capture_default_str();
  gen_cmd->add_option("--n-max", gen.cfg.n_max)->capture_default_str();
  gen_cmd->add_option("--exponent", gen.cfg.pareto_exponent)->capture_default_str();
  gen_cmd->add_option("--rank-offset", gen.cfg.rank_offset)->capture_default_str();
  gen_cmd->add_option("--tokens", gen.cfg.v)->capture_default_str();
  gen_cmd->add_option("--feat-dim", gen.cfg.d0)->capture_default_str();
  gen_cmd->add_option("--cooccur", gen.cfg.co_occurrence_strength)->capture_default_str();
  gen_cmd->add_option("--noise", gen.cfg.noise_sigma)->capture_default_str();
  gen_cmd->add_option("--seed", gen.cfg.seed)->capture_default_str();
  gen_cmd->add_option("--test-per-class", gen.cfg.test_per_class)->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", tr.config, "JSON config")->required();
  train_cmd->add_option("--data", tr.data, "Dataset prefix")->required();
  train_cmd->add_option("--out-dir", tr.out_dir, "Checkpoint directory")->required();
  train_cmd->add_option("--resume", tr.resume, "Checkpoint to continue from");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--data", ev.data, "Dataset prefix")->required();
  eval_cmd->add_option("--report", ev.report, "Write the JSON report here");

  GradCheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full model");
  gc_cmd->add_option("--config", gc.config, "JSON config")->required();
  gc_cmd->add_option("--eps", gc.eps)->capture_default_str();
  gc_cmd->add_option("--tolerance", gc.tolerance)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report_error("usage", e.what());
    return e.get_exit_code();
  }

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*gc_cmd) return run_gradcheck(gc);
  } catch (const std::exception& ex) {
    report_error(error_kind(ex), ex.what());
    return kExitError;
  }
  return kExitError;
}
