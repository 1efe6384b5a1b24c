// Copyright 2026 The glicnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// glicnn: synthetic data, training, evaluation and explanation from the
// command line. Every command prints a JSON summary on stdout; failures
// print one "error: {...}" line on stderr and exit nonzero.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "glicnn/checkpoint.hpp"
#include "glicnn/config.hpp"
#include "glicnn/errors.hpp"
#include "glicnn/explain.hpp"
#include "glicnn/log.hpp"
#include "glicnn/manifest.hpp"
#include "glicnn/parallel.hpp"
#include "glicnn/pipeline.hpp"
#include "glicnn/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string manifest;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string task = "task";
  std::string from_checkpoint;
  std::string checkpoint;
  std::string subject;
  bool group = false;
  std::optional<std::size_t> top_k;
  bool quiet = false;
};

[[noreturn]] void fail(const std::string& code, const std::string& message, int status = 1) {
  std::cerr << "error: " << json{{"code", code}, {"message", message}}.dump() << std::endl;
  std::exit(status);
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw glicnn::ConfigError(std::string("missing required flag ") + flag);
}

glicnn::AppConfig load_config(const Options& o) {
  glicnn::AppConfig c = o.config.empty() ? glicnn::AppConfig{} : glicnn::load_app_config(o.config);
  if (o.seed) {
    c.synth.seed = *o.seed;
    c.train.seed = *o.seed;
  }
  if (o.top_k) c.top_k = *o.top_k;
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw glicnn::DataError("io", "cannot write " + path.string());
  out << text;
}

fs::path output_dir(const Options& o) {
  require(o.out, "--out");
  fs::create_directories(o.out);
  return o.out;
}

void emit(const json& j) { std::cout << j.dump(2) << std::endl; }

json summarize(const glicnn::train::TrainState& s) {
  return {{"epochs_run", s.epochs_run},
          {"best_epoch", s.best_epoch},
          {"best_valid_loss", s.best_loss},
          {"early_stopped", s.early_stopped},
          {"valid_loss_history", s.history}};
}

void cmd_synth(const Options& o) {
  const auto config = load_config(o);
  const auto dir = output_dir(o);
  const auto dataset = glicnn::data::generate_synthetic(config.synth);
  const auto manifest = glicnn::data::write_dataset(dir, dataset);
  emit({{"manifest", manifest.string()}, {"subjects", dataset.size()}, {"seed", config.synth.seed}});
}

void cmd_split(const Options& o) {
  require(o.manifest, "--manifest");
  const auto config = load_config(o);
  const auto dir = output_dir(o);
  const auto entries = glicnn::data::load_manifest(o.manifest);
  std::vector<int> labels;
  for (const auto& e : entries) labels.push_back(e.label);
  const auto idx = glicnn::stats::stratified_split(labels, config.train.seed);
  json summary{{"seed", config.train.seed}};
  const std::pair<const char*, const std::vector<std::size_t>*> parts[] = {
      {"train", &idx.train}, {"valid", &idx.valid}, {"test", &idx.test}};
  for (const auto& [name, rows] : parts) {
    std::vector<glicnn::data::ManifestEntry> subset;
    for (std::size_t i : *rows) {
      subset.push_back(entries[i]);
      subset.back().path = fs::absolute(entries[i].path);
    }
    const auto path = dir / (std::string(name) + ".csv");
    glicnn::data::write_manifest(path, subset);
    summary[name] = {{"manifest", path.string()}, {"subjects", subset.size()}};
  }
  emit(summary);
}

void cmd_train(const Options& o) {
  require(o.manifest, "--manifest");
  require(o.out, "--out");
  auto config = load_config(o);
  const auto dataset = glicnn::data::load_dataset(fs::path(o.manifest));
  const auto split = glicnn::pipeline::split_dataset(dataset, config.train.seed);

  glicnn::train::GlIcnnModel model;
  json summary;
  if (!o.from_checkpoint.empty()) {
    auto base = glicnn::load_checkpoint(o.from_checkpoint);
    if (!o.config.empty()) base.config = config.train;
    base.config.seed = config.train.seed;
    auto result = glicnn::train::finetune(base, split.train, split.valid, base.config);
    model = std::move(result.model);
    summary["mode"] = "finetune";
    summary["training"] = summarize(result.state);
  } else {
    auto run = glicnn::pipeline::fit_glicnn(split.train, split.valid, config);
    model = std::move(run.model);
    summary["mode"] = "train";
    summary["warmup_losses"] = run.warmup_losses;
    summary["training"] = summarize(run.state);
    summary["seconds"] = run.seconds;
  }
  model.task = o.task;
  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  glicnn::save_checkpoint(out, model);

  const auto test_scores = glicnn::pipeline::score(model, split.test);
  summary["checkpoint"] = out.string();
  summary["task"] = model.task;
  summary["seed"] = config.train.seed;
  summary["split"] = {{"train", split.train.size()}, {"valid", split.valid.size()}, {"test", split.test.size()}};
  summary["test_auc"] = glicnn::stats::auc(test_scores);
  emit(summary);
}

void cmd_evaluate(const Options& o) {
  require(o.checkpoint, "--checkpoint");
  require(o.manifest, "--manifest");
  const auto config = load_config(o);
  const auto model = glicnn::load_checkpoint(o.checkpoint);
  const auto dataset = glicnn::data::load_dataset(fs::path(o.manifest));
  const std::vector<glicnn::stats::ModelScores> scores{{"GL-ICNN", glicnn::pipeline::score(model, dataset)}};
  glicnn::stats::BootstrapOptions boot;
  boot.repetitions = config.bootstrap_repetitions;
  boot.seed = config.train.seed;
  const auto report = glicnn::stats::run_comparison(scores, boot);
  if (!o.out.empty()) {
    const auto dir = output_dir(o);
    write_text(dir / "report.csv", report.to_csv());
    write_text(dir / "report.json", report.to_json().dump(2));
    std::string predictions = "subject_id,label,probability\n";
    const auto& s = scores[0].scores;
    for (std::size_t i = 0; i < s.size(); ++i) {
      predictions += s.subject_ids[i] + "," + std::to_string(s.labels[i]) + "," + json(s.scores[i]).dump() + "\n";
    }
    write_text(dir / "predictions.csv", predictions);
  }
  emit(report.to_json());
}

void cmd_explain(const Options& o) {
  require(o.checkpoint, "--checkpoint");
  require(o.manifest, "--manifest");
  if (o.group == !o.subject.empty()) throw glicnn::ConfigError("explain needs exactly one of --subject or --group");
  const auto config = load_config(o);
  const auto model = glicnn::load_checkpoint(o.checkpoint);
  const auto dataset = glicnn::data::load_dataset(fs::path(o.manifest));
  if (!o.subject.empty()) {
    const auto i = dataset.find(o.subject);
    if (i == glicnn::data::Dataset::npos) {
      throw glicnn::DataError("unknown_subject", "subject " + o.subject + " is not in " + o.manifest);
    }
    const auto e = glicnn::explain::explain_subject(model, dataset.volumes[i]);
    if (!o.out.empty()) {
      const auto dir = output_dir(o);
      write_text(dir / (o.subject + ".csv"), e.to_csv());
      write_text(dir / (o.subject + ".json"), e.to_json().dump(2));
    }
    emit(e.to_json());
    return;
  }
  const auto features = glicnn::train::extract_features(model.backbones, dataset);
  const auto report = glicnn::explain::group_importance_report(model.head, features, config.bootstrap_repetitions,
                                                               config.train.seed)
                          .top(config.top_k);
  if (!o.out.empty()) {
    const auto dir = output_dir(o);
    write_text(dir / "group_importance.csv", report.to_csv());
    write_text(dir / "group_importance.json", report.to_json().dump(2));
  }
  emit(report.to_json());
}

void cmd_compare(const Options& o) {
  require(o.manifest, "--manifest");
  const auto config = load_config(o);
  const auto dataset = glicnn::data::load_dataset(fs::path(o.manifest));
  const auto split = glicnn::pipeline::split_dataset(dataset, config.train.seed);
  const auto cmp = glicnn::pipeline::compare_models(split, config);
  if (!o.out.empty()) {
    const auto dir = output_dir(o);
    write_text(dir / "comparison.csv", cmp.report.to_csv());
    write_text(dir / "comparison.json", cmp.report.to_json().dump(2));
  }
  emit(cmp.report.to_json());
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  bool print_config = false;
  CLI::App app{"GL-ICNN: CNN feature extractors with an explainable boosting head"};
  app.set_help_all_flag("--help-all");
  app.add_flag("--print-config", print_config, "Print the effective configuration as JSON and exit");
  app.add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Seed overriding synth.seed and train.seed");
  app.add_flag("-q,--quiet", o.quiet, "No progress messages on stderr");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", o.out, "Output directory")->required();

  auto* split = app.add_subcommand("split", "Write stratified 8:1:1 train/valid/test manifests");
  split->add_option("--manifest", o.manifest, "Dataset manifest")->required();
  split->add_option("--out", o.out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Warm-up plus alternating training; writes a checkpoint");
  train->add_option("--manifest", o.manifest, "Dataset manifest (split 8:1:1 internally)")->required();
  train->add_option("--out", o.out, "Checkpoint path")->required();
  train->add_option("--task", o.task, "Task label stored in the checkpoint");
  train->add_option("--from-checkpoint", o.from_checkpoint, "Fine-tune this checkpoint")
      ->check(CLI::ExistingFile);

  auto* evaluate = app.add_subcommand("evaluate", "AUC with bootstrap CI on a manifest");
  evaluate->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--manifest", o.manifest, "Evaluation manifest")->required();
  evaluate->add_option("--out", o.out, "Report directory");

  auto* explain = app.add_subcommand("explain", "Individual or group feature importance");
  explain->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  explain->add_option("--manifest", o.manifest, "Subjects (the training manifest for --group)")->required();
  explain->add_option("--subject", o.subject, "Explain one subject");
  explain->add_flag("--group", o.group, "Mean absolute importance with bootstrap CIs");
  explain->add_option("--top-k", o.top_k, "Features kept in the group report");
  explain->add_option("--out", o.out, "Output directory for CSV/JSON");

  auto* compare = app.add_subcommand("compare", "Train and compare GL-ICNN, GL-CNN, GL-ICNN-L and Vol-EBM");
  compare->add_option("--manifest", o.manifest, "Dataset manifest (split 8:1:1 internally)")->required();
  compare->add_option("--out", o.out, "Report directory");

  // Global options may also follow the subcommand.
  for (auto* sub : {synth, split, train, evaluate, explain, compare}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (print_config && app.get_subcommands().empty()) {
      // fall through to --print-config below
    } else {
      fail("usage", e.what(), 2);
    }
  }

  try {
    if (print_config) {
      emit(glicnn::to_json(load_config(o)));
      return 0;
    }
    if (!o.quiet) glicnn::set_log_sink([](const std::string& m) { std::cerr << m << std::endl; });
    if (synth->parsed()) cmd_synth(o);
    else if (split->parsed()) cmd_split(o);
    else if (train->parsed()) cmd_train(o);
    else if (evaluate->parsed()) cmd_evaluate(o);
    else if (explain->parsed()) cmd_explain(o);
    else if (compare->parsed()) cmd_compare(o);
    else fail("usage", "no command given; see --help", 2);
  } catch (const glicnn::Error& e) {
    fail(e.code(), e.what());
  } catch (const std::exception& e) {
    fail("internal", e.what());
  }
  return 0;
}
