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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "glicnn/backbones.hpp"
#include "glicnn/ebm.hpp"
#include "glicnn/loss.hpp"
#include "glicnn/manifest.hpp"
#include "glicnn/optim.hpp"

namespace glicnn::train {

struct TrainConfig {
  // N_max: upper bound on alternating epochs.
  std::size_t max_epochs = 15;
  // N_tolerate: non-improving epochs allowed before stopping.
  std::size_t tolerate = 3;
  std::size_t warmup_epochs = 5;
  std::size_t batch_size = 16;
  // CNN optimizer steps per epoch; 0 means one pass over the training set.
  std::size_t steps_per_epoch = 0;
  double warmup_learning_rate = 1e-3;
  double cnn_learning_rate = 5e-4;
  // Unset: inverse class frequency of the training set.
  std::optional<nn::ClassWeights> class_weights;
  std::uint64_t seed = 42;
  ebm::TrainConfig ebm;
  backbone::BackboneConfig backbone;

  void validate() const;
};

// Early-stopping bookkeeping of the alternating loop. An epoch improves
// when its loss is below the best loss seen so far (the loss of the saved
// model); otherwise the stagnation counter grows and training stops once
// it exceeds N_tolerate or N_max epochs have run.
class PatienceTracker {
 public:
  PatienceTracker(std::size_t max_epochs, std::size_t tolerate);

  struct Decision {
    bool improved = false;
    bool stop = false;
  };

  Decision observe(double loss);

  std::size_t epochs_run() const noexcept { return history_.size(); }
  double best_loss() const noexcept { return best_loss_; }
  // 1-based epoch of the saved model; 0 before any epoch.
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  std::size_t stagnation() const noexcept { return stagnation_; }
  bool stopped() const noexcept { return stopped_; }
  const std::vector<double>& history() const noexcept { return history_; }
  const std::vector<double>& saved_losses() const noexcept { return saved_losses_; }

 private:
  std::size_t max_epochs_;
  std::size_t tolerate_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t stagnation_ = 0;
  bool stopped_ = false;
  std::vector<double> history_;
  std::vector<double> saved_losses_;
};

struct TrainState {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stagnation = 0;
  // Stopped because stagnation exceeded N_tolerate (not because of N_max).
  bool early_stopped = false;
  std::vector<double> history;
  std::vector<double> saved_losses;
};

// Drives the epoch loop: run_epoch(i) returns loss_i for 1-based epoch i,
// save(i) is called whenever epoch i becomes the best model.
TrainState run_patience_loop(std::size_t max_epochs, std::size_t tolerate,
                             const std::function<double(std::size_t)>& run_epoch,
                             const std::function<void(std::size_t)>& save);

// Trained GL-ICNN: CNN feature extractors plus the EBM output block. The
// warm-up FC block is kept for the GL-CNN baseline when available.
struct GlIcnnModel {
  backbone::BackboneSet backbones;
  ebm::EbmHead head;
  std::optional<backbone::DenseHead> fc_head;
  std::string task = "task";
  TrainConfig config;

  std::vector<std::string> feature_names() const;
  backbone::FeatureVector features(const data::Volume& volume) const;
  double predict_logit(const data::Volume& volume) const;
  double predict_proba(const data::Volume& volume) const;
};

// Feature names in Out_CNN order: "global", then the patch names.
std::vector<std::string> feature_names(const backbone::BackboneSet& backbones);

ebm::FeatureMatrix extract_features(const backbone::BackboneSet& backbones, const data::Dataset& dataset);

nn::ClassWeights resolve_class_weights(const TrainConfig& config, const data::Dataset& train);

// Mean weighted cross-entropy over a dataset.
double dense_loss(const backbone::BackboneSet& backbones, const backbone::DenseHead& head,
                  const data::Dataset& dataset, nn::ClassWeights weights);
double validation_loss(const backbone::BackboneSet& backbones, const ebm::EbmHead& head,
                       const data::Dataset& dataset, nn::ClassWeights weights);

struct WarmupResult {
  backbone::DenseHead head;
  std::vector<double> epoch_losses;  // mean batch loss per epoch
};

// Trains the GL-CNN (backbones + FC block) end to end. backbones is
// updated in place; with warmup_epochs == 0 it is left untouched.
WarmupResult warmup_glcnn(backbone::BackboneSet& backbones, const data::Dataset& train,
                          const TrainConfig& config);

// Step (1): fit a fresh EBM on Out_CNN of the training set; CNN frozen.
ebm::EbmHead refit_head(const backbone::BackboneSet& backbones, const data::Dataset& train,
                        const TrainConfig& config, std::uint64_t seed);

// Step (2): one epoch of CNN updates through the frozen head, using the
// piecewise-linear surrogate for d logit / d x. Returns the mean batch loss.
double cnn_epoch(backbone::BackboneSet& backbones, const ebm::EbmHead& head, const data::Dataset& train,
                 nn::Adam& optimizer, nn::ClassWeights weights, const TrainConfig& config,
                 std::uint64_t epoch_seed);

// One epoch of end-to-end training of backbones + dense head.
double dense_epoch(backbone::BackboneSet& backbones, backbone::DenseHead& head, const data::Dataset& train,
                   nn::Adam& optimizer, nn::ClassWeights weights, const TrainConfig& config,
                   std::uint64_t epoch_seed);

struct TrainResult {
  GlIcnnModel model;
  TrainState state;
};

// Alternating block-coordinate training from warm-started backbones.
TrainResult train_glicnn(backbone::BackboneSet backbones, const data::Dataset& train,
                         const data::Dataset& valid, const TrainConfig& config);

// The same loop, started from a trained model's CNN weights.
TrainResult finetune(const GlIcnnModel& model, const data::Dataset& train, const data::Dataset& valid,
                     const TrainConfig& config);

struct DenseTrainResult {
  backbone::BackboneSet backbones;
  backbone::DenseHead head;
  TrainState state;
};

// End-to-end training with a dense output block and the same
// validation-loss patience rule (GL-CNN and GL-ICNN-L baselines).
DenseTrainResult train_dense(backbone::BackboneSet backbones, backbone::DenseHead head,
                             const data::Dataset& train, const data::Dataset& valid,
                             const TrainConfig& config, std::size_t max_epochs);

}  // namespace glicnn::train
