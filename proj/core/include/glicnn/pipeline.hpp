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
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glicnn/config.hpp"
#include "glicnn/evalstats.hpp"
#include "glicnn/manifest.hpp"
#include "glicnn/trainer.hpp"

namespace glicnn::pipeline {

struct SplitData {
  data::Dataset train;
  data::Dataset valid;
  data::Dataset test;
};

// Stratified 8:1:1 partition of a labelled dataset.
SplitData split_dataset(const data::Dataset& dataset, std::uint64_t seed);

struct GlIcnnRun {
  train::GlIcnnModel model;  // fc_head holds the warm-up FC block
  std::vector<double> warmup_losses;
  train::TrainState state;
  // Backbones right after warm-up, before the alternating loop.
  backbone::BackboneSet warm_backbones;
  double seconds = 0;
};

// Patch grid for a dataset (all volumes must share one shape), with
// optional names from the config's patch-name file.
backbone::PatchGrid make_grid(const data::Dataset& dataset, const AppConfig& config);

// Warm-up of the GL-CNN followed by the alternating loop.
GlIcnnRun fit_glicnn(const data::Dataset& train, const data::Dataset& valid, const AppConfig& config);

// Scores of a model on a subject set, in dataset order.
stats::ScoredSet score(const train::GlIcnnModel& model, const data::Dataset& dataset);
stats::ScoredSet score_dense(const backbone::BackboneSet& backbones, const backbone::DenseHead& head,
                             const data::Dataset& dataset);

// Vol-EBM inputs: mean intensity of every patch.
ebm::FeatureMatrix patch_mean_features(const backbone::PatchGrid& grid, const data::Dataset& dataset);
// Standard normal features unrelated to the labels (chance-level control).
ebm::FeatureMatrix noise_features(std::size_t rows, std::size_t cols, std::uint64_t seed);

stats::ScoredSet score_ebm(const ebm::EbmHead& head, const ebm::FeatureMatrix& features,
                           const data::Dataset& dataset);

struct Comparison {
  stats::EvalReport report;
  std::vector<stats::ModelScores> scores;
};

// Trains GL-ICNN, GL-CNN, GL-ICNN-L and Vol-EBM on split.train/valid and
// evaluates them on split.test. A finished GL-ICNN run can be passed in to
// avoid retraining it.
Comparison compare_models(const SplitData& split, const AppConfig& config,
                          const GlIcnnRun* glicnn_run = nullptr);

}  // namespace glicnn::pipeline
