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
#include "glicnn/pipeline.hpp"

#include <chrono>
#include <random>

#include "glicnn/errors.hpp"
#include "glicnn/log.hpp"
#include "glicnn/loss.hpp"
#include "glicnn/parallel.hpp"

namespace glicnn::pipeline {

SplitData split_dataset(const data::Dataset& dataset, std::uint64_t seed) {
  const auto labels = dataset.labels();
  const auto idx = stats::stratified_split(labels, seed);
  return {dataset.subset(idx.train), dataset.subset(idx.valid), dataset.subset(idx.test)};
}

backbone::PatchGrid make_grid(const data::Dataset& dataset, const AppConfig& config) {
  if (dataset.empty()) throw DataError("empty_dataset", "dataset has no subjects");
  backbone::PatchGrid grid(dataset.volumes.front().shape, config.patch_shape);
  if (!config.patch_names.empty()) grid.load_names(config.patch_names);
  return grid;
}

GlIcnnRun fit_glicnn(const data::Dataset& train, const data::Dataset& valid, const AppConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  backbone::BackboneSet backbones(make_grid(train, config), config.train.backbone, config.train.seed);
  auto warm = train::warmup_glcnn(backbones, train, config.train);
  GlIcnnRun run;
  run.warmup_losses = warm.epoch_losses;
  run.warm_backbones = backbones;
  auto result = train::train_glicnn(std::move(backbones), train, valid, config.train);
  run.model = std::move(result.model);
  run.model.fc_head = std::move(warm.head);
  run.state = std::move(result.state);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

stats::ScoredSet score(const train::GlIcnnModel& model, const data::Dataset& dataset) {
  const auto features = train::extract_features(model.backbones, dataset);
  stats::ScoredSet s;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    s.subject_ids.push_back(dataset.volumes[i].subject_id);
    s.scores.push_back(model.head.predict_proba(features.row(i)));
    s.labels.push_back(dataset.volumes[i].label);
  }
  return s;
}

stats::ScoredSet score_dense(const backbone::BackboneSet& backbones, const backbone::DenseHead& head,
                             const data::Dataset& dataset) {
  const auto features = train::extract_features(backbones, dataset);
  stats::ScoredSet s;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    s.subject_ids.push_back(dataset.volumes[i].subject_id);
    s.scores.push_back(nn::sigmoid(head.forward(features.row(i))));
    s.labels.push_back(dataset.volumes[i].label);
  }
  return s;
}

ebm::FeatureMatrix patch_mean_features(const backbone::PatchGrid& grid, const data::Dataset& dataset) {
  ebm::FeatureMatrix m(dataset.size(), grid.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto patches = backbone::extract_patches(dataset.volumes[i], grid);
    for (std::size_t p = 0; p < patches.size(); ++p) {
      double sum = 0;
      for (float v : patches[p].voxels) sum += v;
      m.at(i, p) = sum / static_cast<double>(patches[p].voxels.size());
    }
  }
  return m;
}

ebm::FeatureMatrix noise_features(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  ebm::FeatureMatrix m(rows, cols);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m.at(i, j) = normal(rng);
  }
  return m;
}

stats::ScoredSet score_ebm(const ebm::EbmHead& head, const ebm::FeatureMatrix& features,
                           const data::Dataset& dataset) {
  stats::ScoredSet s;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    s.subject_ids.push_back(dataset.volumes[i].subject_id);
    s.scores.push_back(head.predict_proba(features.row(i)));
    s.labels.push_back(dataset.volumes[i].label);
  }
  return s;
}

Comparison compare_models(const SplitData& split, const AppConfig& config, const GlIcnnRun* glicnn_run) {
  std::optional<GlIcnnRun> own;
  if (!glicnn_run) {
    log_info("compare: training GL-ICNN");
    own = fit_glicnn(split.train, split.valid, config);
    glicnn_run = &*own;
  }
  Comparison out;
  out.scores.push_back({"GL-ICNN", score(glicnn_run->model, split.test)});

  // GL-CNN: the warm-up FC model, trained further under the same patience rule.
  log_info("compare: training GL-CNN");
  const auto glcnn = train::train_dense(glicnn_run->warm_backbones, *glicnn_run->model.fc_head, split.train,
                                        split.valid, config.train, config.train.max_epochs);
  out.scores.push_back({"GL-CNN", score_dense(glcnn.backbones, glcnn.head, split.test)});

  // GL-ICNN-L: warm-up backbones with the output block replaced by one linear layer.
  log_info("compare: training GL-ICNN-L");
  const backbone::DenseHead linear(backbone::HeadKind::linear, glicnn_run->warm_backbones.feature_count(), 1,
                                   derive_seed(config.train.seed, 0x11));
  const auto glicnn_l = train::train_dense(glicnn_run->warm_backbones, linear, split.train, split.valid,
                                           config.train, config.train.max_epochs);
  out.scores.push_back({"GL-ICNN-L", score_dense(glicnn_l.backbones, glicnn_l.head, split.test)});

  log_info("compare: training Vol-EBM");
  const auto& grid = glicnn_run->model.backbones.grid();
  const auto vol_train = patch_mean_features(grid, split.train);
  const auto train_labels = split.train.labels();
  auto vol_ebm = ebm::fit_ebm(vol_train, train_labels, config.train.ebm, derive_seed(config.train.seed, 0x12));
  vol_ebm.set_names(grid.names());
  out.scores.push_back({"Vol-EBM", score_ebm(vol_ebm, patch_mean_features(grid, split.test), split.test)});

  stats::BootstrapOptions boot;
  boot.repetitions = config.bootstrap_repetitions;
  boot.seed = derive_seed(config.train.seed, 0x13);
  out.report = stats::run_comparison(out.scores, boot);
  return out;
}

}  // namespace glicnn::pipeline
