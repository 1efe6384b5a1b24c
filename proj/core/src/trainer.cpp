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

#include "glicnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "glicnn/errors.hpp"
#include "glicnn/log.hpp"
#include "glicnn/parallel.hpp"

namespace glicnn::train {
namespace {

using backbone::BackboneSet;
using backbone::DenseHead;
using data::Dataset;
using data::Volume;
using nn::Tensor;

struct HeadOutput {
  double loss = 0;
  std::vector<double> feature_grads;
  std::vector<Tensor> head_grads;
};

using HeadStep = std::function<HeadOutput(std::span<const double> features, int label)>;

HeadOutput dense_head_step(const DenseHead& head, std::span<const double> features, int label,
                           nn::ClassWeights weights) {
  nn::Tape<float> tape;
  Tensor x({1, features.size()});
  for (std::size_t i = 0; i < features.size(); ++i) x[i] = static_cast<float>(features[i]);
  const nn::Var xv = tape.param(std::move(x));
  std::vector<nn::Var> pv;
  const nn::Var logit = head.record(tape, xv, pv);
  const nn::Var loss = tape.weighted_cross_entropy(logit, {label}, weights);
  tape.backward(loss);
  HeadOutput out;
  out.loss = tape.value(loss)[0];
  const Tensor gx = tape.grad(xv);
  out.feature_grads.assign(gx.values().begin(), gx.values().end());
  for (const auto& v : pv) out.head_grads.push_back(tape.grad(v));
  return out;
}

HeadOutput ebm_head_step(const ebm::EbmHead& head, std::span<const double> features, int label,
                         nn::ClassWeights weights) {
  HeadOutput out;
  const double logit = head.predict_logit(features);
  out.loss = weights(label) * nn::binary_cross_entropy_with_logit(logit, label);
  const double dlogit = nn::weighted_cross_entropy_grad(logit, label, weights);
  out.feature_grads = head.surrogate_gradient(features);
  for (double& g : out.feature_grads) g *= dlogit;
  return out;
}

// Mean-over-batch gradients: backbone grads land in Parameter::grad,
// head grads (if any) are returned. Per-sample results are reduced in
// batch order.
double batch_gradients(BackboneSet& backbones, std::span<const Volume* const> batch, const HeadStep& step,
                       std::vector<Tensor>& head_grads) {
  const std::size_t b = batch.size();
  const double scale = 1.0 / static_cast<double>(b);
  std::vector<std::vector<Tensor>> grads(b);
  std::vector<HeadOutput> outs(b);
  const BackboneSet& frozen = backbones;
  parallel_for(b, [&](std::size_t i) {
    auto trace = backbone::trace_features(frozen, *batch[i]);
    HeadOutput out = step(trace.features(), batch[i]->label);
    for (double& g : out.feature_grads) g *= scale;
    trace.backward(out.feature_grads, grads[i]);
    outs[i] = std::move(out);
  });

  auto params = backbones.parameters();
  for (auto* p : params) p->zero_grad();
  head_grads.clear();
  double loss = 0;
  for (std::size_t i = 0; i < b; ++i) {
    loss += outs[i].loss;
    for (std::size_t t = 0; t < params.size(); ++t) {
      auto& acc = params[t]->grad;
      const auto& g = grads[i][t];
      for (std::size_t e = 0; e < g.size(); ++e) acc[e] += g[e];
    }
    if (head_grads.empty()) {
      for (const auto& g : outs[i].head_grads) head_grads.emplace_back(g.shape());
    }
    for (std::size_t t = 0; t < outs[i].head_grads.size(); ++t) {
      const auto& g = outs[i].head_grads[t];
      for (std::size_t e = 0; e < g.size(); ++e) head_grads[t][e] += static_cast<float>(scale * g[e]);
    }
  }
  return loss * scale;
}

// Batches of one epoch: a seeded permutation cut into consecutive slices.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, const TrainConfig& config,
                                                    std::uint64_t epoch_seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t bs = std::min(config.batch_size, n);
  std::vector<std::vector<std::size_t>> batches;
  if (config.steps_per_epoch == 0) {
    for (std::size_t s = 0; s < n; s += bs) {
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                           order.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + bs)));
    }
  } else {
    for (std::size_t s = 0; s < config.steps_per_epoch; ++s) {
      std::vector<std::size_t> batch(bs);
      for (std::size_t t = 0; t < bs; ++t) batch[t] = order[(s * bs + t) % n];
      batches.push_back(std::move(batch));
    }
  }
  return batches;
}

void check_both_classes(const Dataset& ds, const char* what) {
  bool pos = false, neg = false;
  for (const auto& v : ds.volumes) (v.label == 1 ? pos : neg) = true;
  if (!pos || !neg) {
    throw DataError("single_class", std::string(what) + ": both classes must be present");
  }
}

void check_shapes(const BackboneSet& backbones, const Dataset& ds, const char* what) {
  for (const auto& v : ds.volumes) {
    if (v.shape != backbones.grid().volume_shape()) {
      throw ShapeError(std::string(what) + ": subject " + v.subject_id + " has shape " +
                       data::to_string(v.shape) + ", model expects " +
                       data::to_string(backbones.grid().volume_shape()));
    }
  }
}

void check_disjoint(const Dataset& a, const Dataset& b) {
  std::unordered_set<std::string> ids;
  for (const auto& v : a.volumes) ids.insert(v.subject_id);
  for (const auto& v : b.volumes) {
    if (ids.count(v.subject_id)) {
      throw DataError("overlapping_splits", "subject " + v.subject_id + " is in both train and valid sets");
    }
  }
}

std::string format_loss(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("train: max_epochs (N_max) must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(warmup_learning_rate > 0) || !(cnn_learning_rate > 0)) {
    throw ConfigError("train: learning rates must be positive");
  }
  if (class_weights && (!(class_weights->negative > 0) || !(class_weights->positive > 0))) {
    throw ConfigError("train: class weights must be positive");
  }
  ebm.validate();
}

PatienceTracker::PatienceTracker(std::size_t max_epochs, std::size_t tolerate)
    : max_epochs_(max_epochs), tolerate_(tolerate) {
  if (max_epochs < 1) throw ConfigError("patience: max_epochs must be >= 1");
}

PatienceTracker::Decision PatienceTracker::observe(double loss) {
  if (stopped_) throw StateError("patience: observe called after the loop stopped");
  history_.push_back(loss);
  Decision d;
  if (loss < best_loss_) {
    best_loss_ = loss;
    best_epoch_ = history_.size();
    stagnation_ = 0;
    saved_losses_.push_back(loss);
    d.improved = true;
  } else {
    ++stagnation_;
  }
  d.stop = stagnation_ > tolerate_ || history_.size() >= max_epochs_;
  stopped_ = d.stop;
  return d;
}

TrainState run_patience_loop(std::size_t max_epochs, std::size_t tolerate,
                             const std::function<double(std::size_t)>& run_epoch,
                             const std::function<void(std::size_t)>& save) {
  PatienceTracker tracker(max_epochs, tolerate);
  for (std::size_t epoch = 1;; ++epoch) {
    const double loss = run_epoch(epoch);
    const auto d = tracker.observe(loss);
    if (d.improved) save(epoch);
    if (d.stop) break;
  }
  TrainState s;
  s.epochs_run = tracker.epochs_run();
  s.best_epoch = tracker.best_epoch();
  s.best_loss = tracker.best_loss();
  s.stagnation = tracker.stagnation();
  s.early_stopped = tracker.stagnation() > tolerate;
  s.history = tracker.history();
  s.saved_losses = tracker.saved_losses();
  return s;
}

std::vector<std::string> feature_names(const BackboneSet& backbones) {
  std::vector<std::string> names{"global"};
  for (const auto& n : backbones.grid().names()) names.push_back(n);
  return names;
}

std::vector<std::string> GlIcnnModel::feature_names() const { return train::feature_names(backbones); }

backbone::FeatureVector GlIcnnModel::features(const Volume& volume) const {
  return backbone::forward_features(backbones, volume);
}

double GlIcnnModel::predict_logit(const Volume& volume) const {
  return head.predict_logit(features(volume).values);
}

double GlIcnnModel::predict_proba(const Volume& volume) const {
  return head.predict_proba(features(volume).values);
}

ebm::FeatureMatrix extract_features(const BackboneSet& backbones, const Dataset& dataset) {
  check_shapes(backbones, dataset, "extract_features");
  ebm::FeatureMatrix m(dataset.size(), backbones.feature_count());
  parallel_for(dataset.size(), [&](std::size_t i) {
    const auto fv = backbone::forward_features(backbones, dataset.volumes[i]);
    std::copy(fv.values.begin(), fv.values.end(), m.row(i).begin());
  });
  return m;
}

nn::ClassWeights resolve_class_weights(const TrainConfig& config, const Dataset& train) {
  if (config.class_weights) return *config.class_weights;
  const auto labels = train.labels();
  return nn::inverse_frequency_weights(labels);
}

double dense_loss(const BackboneSet& backbones, const DenseHead& head, const Dataset& dataset,
                  nn::ClassWeights weights) {
  if (dataset.empty()) throw DataError("empty_dataset", "dense_loss: empty dataset");
  const auto features = extract_features(backbones, dataset);
  std::vector<double> logits(dataset.size());
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = head.forward(features.row(i));
  const auto labels = dataset.labels();
  return nn::weighted_cross_entropy(logits, labels, weights);
}

double validation_loss(const BackboneSet& backbones, const ebm::EbmHead& head, const Dataset& dataset,
                       nn::ClassWeights weights) {
  if (dataset.empty()) throw DataError("empty_dataset", "validation set is empty");
  const auto features = extract_features(backbones, dataset);
  std::vector<double> logits(dataset.size());
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = head.predict_logit(features.row(i));
  const auto labels = dataset.labels();
  return nn::weighted_cross_entropy(logits, labels, weights);
}

double dense_epoch(BackboneSet& backbones, DenseHead& head, const Dataset& train, nn::Adam& optimizer,
                   nn::ClassWeights weights, const TrainConfig& config, std::uint64_t epoch_seed) {
  const auto batches = epoch_batches(train.size(), config, epoch_seed);
  const HeadStep step = [&](std::span<const double> f, int y) { return dense_head_step(head, f, y, weights); };
  double total = 0;
  std::vector<Tensor> head_grads;
  std::vector<const Volume*> batch;
  for (const auto& idx : batches) {
    batch.clear();
    for (std::size_t i : idx) batch.push_back(&train.volumes[i]);
    total += batch_gradients(backbones, batch, step, head_grads);
    auto params = backbones.parameters();
    for (std::size_t t = 0; t < head.parameters().size(); ++t) {
      head.parameters()[t].grad = head_grads[t];
      params.push_back(&head.parameters()[t]);
    }
    optimizer.step(params);
  }
  return total / static_cast<double>(batches.size());
}

double cnn_epoch(BackboneSet& backbones, const ebm::EbmHead& head, const Dataset& train, nn::Adam& optimizer,
                 nn::ClassWeights weights, const TrainConfig& config, std::uint64_t epoch_seed) {
  if (head.feature_count() != backbones.feature_count()) {
    throw ShapeError("cnn_epoch: head has " + std::to_string(head.feature_count()) + " features, backbones " +
                     std::to_string(backbones.feature_count()));
  }
  const auto batches = epoch_batches(train.size(), config, epoch_seed);
  const HeadStep step = [&](std::span<const double> f, int y) { return ebm_head_step(head, f, y, weights); };
  double total = 0;
  std::vector<Tensor> head_grads;
  std::vector<const Volume*> batch;
  for (const auto& idx : batches) {
    batch.clear();
    for (std::size_t i : idx) batch.push_back(&train.volumes[i]);
    total += batch_gradients(backbones, batch, step, head_grads);
    optimizer.step(backbones.parameters());
  }
  return total / static_cast<double>(batches.size());
}

WarmupResult warmup_glcnn(BackboneSet& backbones, const Dataset& train, const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw DataError("empty_dataset", "warm-up: empty training set");
  check_both_classes(train, "warm-up training set");
  check_shapes(backbones, train, "warm-up");
  WarmupResult result{DenseHead(backbone::HeadKind::fully_connected, backbones.feature_count(),
                                config.backbone.fc_hidden, derive_seed(config.seed, 7)),
                      {}};
  if (config.warmup_epochs == 0) return result;
  const auto weights = resolve_class_weights(config, train);
  nn::Adam adam({config.warmup_learning_rate});
  for (std::size_t e = 0; e < config.warmup_epochs; ++e) {
    const double loss = dense_epoch(backbones, result.head, train, adam, weights, config,
                                    derive_seed(config.seed, 10 + e));
    result.epoch_losses.push_back(loss);
    log_info("warm-up epoch " + std::to_string(e + 1) + "/" + std::to_string(config.warmup_epochs) +
             " train loss " + format_loss(loss));
  }
  return result;
}

ebm::EbmHead refit_head(const BackboneSet& backbones, const Dataset& train, const TrainConfig& config,
                        std::uint64_t seed) {
  const auto features = extract_features(backbones, train);
  const auto labels = train.labels();
  auto head = ebm::fit_ebm(features, labels, config.ebm, seed);
  head.set_names(feature_names(backbones));
  return head;
}

namespace {

TrainResult alternate(BackboneSet backbones, std::optional<DenseHead> fc_head, std::string task,
                      const Dataset& train, const Dataset& valid, const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw DataError("empty_dataset", "training set is empty");
  if (valid.empty()) throw DataError("empty_dataset", "validation set is empty");
  check_both_classes(train, "training set");
  check_shapes(backbones, train, "training set");
  check_shapes(backbones, valid, "validation set");
  check_disjoint(train, valid);

  const auto weights = resolve_class_weights(config, train);
  nn::Adam adam({config.cnn_learning_rate});
  ebm::EbmHead head;
  TrainResult result;
  result.model.fc_head = std::move(fc_head);
  result.model.task = std::move(task);
  result.model.config = config;

  result.state = run_patience_loop(
      config.max_epochs, config.tolerate,
      [&](std::size_t epoch) {
        head = refit_head(backbones, train, config, derive_seed(config.seed, 100 + epoch));
        const double train_loss =
            cnn_epoch(backbones, head, train, adam, weights, config, derive_seed(config.seed, 200 + epoch));
        const double loss = validation_loss(backbones, head, valid, weights);
        log_info("epoch " + std::to_string(epoch) + "/" + std::to_string(config.max_epochs) +
                 " train loss " + format_loss(train_loss) + " valid loss " + format_loss(loss));
        return loss;
      },
      [&](std::size_t) {
        result.model.backbones = backbones;
        result.model.head = head;
      });
  return result;
}

}  // namespace

TrainResult train_glicnn(BackboneSet backbones, const Dataset& train, const Dataset& valid,
                         const TrainConfig& config) {
  return alternate(std::move(backbones), std::nullopt, "task", train, valid, config);
}

TrainResult finetune(const GlIcnnModel& model, const Dataset& train, const Dataset& valid,
                     const TrainConfig& config) {
  if (config.max_epochs < 1) throw ConfigError("finetune: max_epochs must be >= 1");
  if (model.head.feature_count() != model.backbones.feature_count()) {
    throw ShapeError("finetune: checkpoint head has " + std::to_string(model.head.feature_count()) +
                     " features but backbones produce " + std::to_string(model.backbones.feature_count()));
  }
  check_shapes(model.backbones, train, "finetune training set");
  check_shapes(model.backbones, valid, "finetune validation set");
  return alternate(model.backbones, model.fc_head, model.task, train, valid, config);
}

DenseTrainResult train_dense(BackboneSet backbones, DenseHead head, const Dataset& train, const Dataset& valid,
                             const TrainConfig& config, std::size_t max_epochs) {
  config.validate();
  if (valid.empty()) throw DataError("empty_dataset", "validation set is empty");
  check_both_classes(train, "training set");
  check_shapes(backbones, train, "training set");
  check_shapes(backbones, valid, "validation set");
  const auto weights = resolve_class_weights(config, train);
  nn::Adam adam({config.warmup_learning_rate});
  DenseTrainResult result{backbones, head, {}};
  result.state = run_patience_loop(
      max_epochs, config.tolerate,
      [&](std::size_t epoch) {
        dense_epoch(backbones, head, train, adam, weights, config, derive_seed(config.seed, 300 + epoch));
        const double loss = dense_loss(backbones, head, valid, weights);
        log_info("dense epoch " + std::to_string(epoch) + " valid loss " + format_loss(loss));
        return loss;
      },
      [&](std::size_t) {
        result.backbones = backbones;
        result.head = head;
      });
  return result;
}

}  // namespace glicnn::train
