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
#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "glicnn/checkpoint.hpp"
#include "glicnn/errors.hpp"
#include "glicnn/parallel.hpp"
#include "glicnn/pipeline.hpp"
#include "glicnn/trainer.hpp"
#include "support/oracles.hpp"
#include "support/small_setup.hpp"
#include "support/temp_dir.hpp"

namespace glicnn::train {
namespace {

using testing::small_app_config;
using testing::small_split;

std::vector<float> flat_weights(const backbone::BackboneSet& set) {
  std::vector<float> out;
  for (const auto* p : set.parameters()) out.insert(out.end(), p->value.values().begin(), p->value.values().end());
  return out;
}

backbone::BackboneSet fresh_backbones(const AppConfig& c) {
  return backbone::BackboneSet(pipeline::make_grid(small_split().train, c), c.train.backbone, c.train.seed);
}

TEST(PatienceTest, ToleranceZeroStopsAtFirstMiss) {
  const auto s = run_patience_loop(10, 0, [](std::size_t i) { return std::vector{5.0, 4.0, 4.5, 1.0}[i - 1]; },
                                   [](std::size_t) {});
  EXPECT_EQ(s.epochs_run, 3u);
  EXPECT_EQ(s.best_epoch, 2u);
  EXPECT_TRUE(s.early_stopped);
}

TEST(PatienceTest, SingleEpochBudget) {
  std::size_t saved = 0;
  const auto s = run_patience_loop(1, 3, [](std::size_t) { return 7.0; }, [&](std::size_t i) { saved = i; });
  EXPECT_EQ(s.epochs_run, 1u);
  EXPECT_EQ(s.best_epoch, 1u);
  EXPECT_EQ(saved, 1u);
  EXPECT_FALSE(s.early_stopped);
}

TEST(PatienceTest, ComparesAgainstTheSavedLoss) {
  // 3.0 is worse than the saved 2.0 even though it beats 3.5.
  PatienceTracker t(10, 1);
  EXPECT_TRUE(t.observe(2.0).improved);
  EXPECT_FALSE(t.observe(3.5).improved);
  const auto d = t.observe(3.0);
  EXPECT_FALSE(d.improved);
  EXPECT_TRUE(d.stop);
  EXPECT_EQ(t.stagnation(), 2u);
  EXPECT_THROW(t.observe(1.0), StateError);
}

TEST(PatienceTest, MatchesDirectSimulationOnRandomSequences) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t max_epochs = 1 + rng() % 20;
    const std::size_t tolerate = rng() % 5;
    std::vector<double> losses(max_epochs);
    for (auto& l : losses) l = trial % 3 == 0 ? std::round(u(rng) * 4) / 4 : u(rng);
    std::vector<std::size_t> saves;
    const auto s = run_patience_loop(
        max_epochs, tolerate, [&](std::size_t i) { return losses[i - 1]; }, [&](std::size_t i) { saves.push_back(i); });
    const auto o = testing::simulate_patience(losses, max_epochs, tolerate);
    EXPECT_EQ(s.epochs_run, o.stop_epoch);
    EXPECT_EQ(s.best_epoch, o.best_epoch);
    ASSERT_FALSE(saves.empty());
    EXPECT_EQ(saves.back(), o.best_epoch);
    EXPECT_EQ(s.best_loss, *std::min_element(s.history.begin(), s.history.end()));
    for (std::size_t i = 1; i < s.saved_losses.size(); ++i) EXPECT_LT(s.saved_losses[i], s.saved_losses[i - 1]);
  }
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.cnn_learning_rate = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.class_weights = nn::ClassWeights{1.0, -1.0};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(WarmupTest, ZeroEpochsLeavesBackbonesUntouched) {
  auto c = small_app_config();
  c.train.warmup_epochs = 0;
  auto set = fresh_backbones(c);
  const auto before = flat_weights(set);
  const auto r = warmup_glcnn(set, small_split().train, c.train);
  EXPECT_TRUE(r.epoch_losses.empty());
  EXPECT_EQ(flat_weights(set), before);
}

TEST(WarmupTest, DeterministicAndReducesTrainingLoss) {
  const auto c = small_app_config();
  const auto& train = small_split().train;
  auto a = fresh_backbones(c);
  const backbone::DenseHead initial(backbone::HeadKind::fully_connected, a.feature_count(), c.train.backbone.fc_hidden,
                          derive_seed(c.train.seed, 7));
  const auto weights = resolve_class_weights(c.train, train);
  const double before = dense_loss(a, initial, train, weights);
  const auto ra = warmup_glcnn(a, train, c.train);
  auto b = fresh_backbones(c);
  warmup_glcnn(b, train, c.train);
  EXPECT_EQ(flat_weights(a), flat_weights(b));
  EXPECT_LE(dense_loss(a, ra.head, train, weights), before);
}

TEST(WarmupTest, SingleClassTrainingSetIsRejected) {
  const auto c = small_app_config();
  data::Dataset one;
  for (const auto& v : small_split().train.volumes)
    if (v.label == 1) one.volumes.push_back(v);
  auto set = fresh_backbones(c);
  EXPECT_THROW(warmup_glcnn(set, one, c.train), DataError);
}

class AlternatingTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto c = small_app_config();
    run_ = new pipeline::GlIcnnRun(pipeline::fit_glicnn(small_split().train, small_split().valid, c));
  }
  static void TearDownTestSuite() {
    delete run_;
    run_ = nullptr;
  }
  static pipeline::GlIcnnRun* run_;
};

pipeline::GlIcnnRun* AlternatingTest::run_ = nullptr;

TEST_F(AlternatingTest, ReturnsTheArgminCheckpoint) {
  const auto& s = run_->state;
  ASSERT_GE(s.epochs_run, 1u);
  EXPECT_LE(s.epochs_run, 3u);
  EXPECT_EQ(s.best_loss, *std::min_element(s.history.begin(), s.history.end()));
  const auto weights = resolve_class_weights(run_->model.config, small_split().train);
  EXPECT_EQ(validation_loss(run_->model.backbones, run_->model.head, small_split().valid, weights), s.best_loss);
  EXPECT_EQ(run_->model.head.names().front(), "global");
  EXPECT_TRUE(run_->model.fc_head.has_value());
}

TEST_F(AlternatingTest, LearnsThePlantedSignal) {
  const auto scores = pipeline::score(run_->model, small_split().test);
  EXPECT_GE(stats::auc(scores), 0.8);
}

TEST_F(AlternatingTest, EbmRefitLeavesCnnWeightsAlone) {
  const auto c = small_app_config();
  const auto before = flat_weights(run_->model.backbones);
  refit_head(run_->model.backbones, small_split().train, c.train, 5);
  EXPECT_EQ(flat_weights(run_->model.backbones), before);
}

TEST_F(AlternatingTest, CnnStepLeavesEbmAloneAndMovesWeights) {
  const auto c = small_app_config();
  auto set = run_->model.backbones;
  const auto head = run_->model.head;
  const auto copy = head;
  const auto before = flat_weights(set);
  nn::Adam adam({1e-2});
  cnn_epoch(set, head, small_split().train, adam, resolve_class_weights(c.train, small_split().train), c.train, 1);
  EXPECT_EQ(head, copy);
  EXPECT_NE(flat_weights(set), before);
}

TEST_F(AlternatingTest, SingleEpochBudgetReturnsEpochOneModel) {
  auto c = small_app_config();
  c.train.max_epochs = 1;
  const auto r = train_glicnn(run_->warm_backbones, small_split().train, small_split().valid, c.train);
  EXPECT_EQ(r.state.epochs_run, 1u);
  EXPECT_EQ(r.state.best_epoch, 1u);
}

TEST_F(AlternatingTest, InvalidSplitsAreRejected) {
  const auto c = small_app_config();
  EXPECT_THROW(train_glicnn(run_->warm_backbones, small_split().train, data::Dataset{}, c.train), DataError);
  EXPECT_THROW(train_glicnn(run_->warm_backbones, small_split().train, small_split().train, c.train), DataError);
}

TEST_F(AlternatingTest, CheckpointRoundTripPredictsIdentically) {
  testing::TempDir dir;
  save_checkpoint(dir / "m.glic", run_->model);
  EXPECT_FALSE(std::filesystem::exists(dir / "m.glic.tmp"));
  const auto back = load_checkpoint(dir / "m.glic");
  EXPECT_EQ(back.head, run_->model.head);
  EXPECT_EQ(back.backbones.grid(), run_->model.backbones.grid());
  EXPECT_EQ(flat_weights(back.backbones), flat_weights(run_->model.backbones));
  ASSERT_TRUE(back.fc_head.has_value());
  for (const auto& v : small_split().test.volumes) {
    EXPECT_EQ(back.predict_logit(v), run_->model.predict_logit(v));
    EXPECT_EQ(glcnn_forward(back.backbones, *back.fc_head, v),
              glcnn_forward(run_->model.backbones, *run_->model.fc_head, v));
  }
  const auto meta = read_checkpoint_metadata(dir / "m.glic");
  EXPECT_EQ(meta["seed"], run_->model.config.seed);
  EXPECT_EQ(meta["head"]["link"], "logit");
}

TEST_F(AlternatingTest, CorruptCheckpointsAreRejected) {
  testing::TempDir dir;
  save_checkpoint(dir / "m.glic", run_->model);
  std::ifstream in(dir / "m.glic", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  auto write = [&](const std::string& name, const std::string& b) {
    std::ofstream(dir / name, std::ios::binary) << b;
    return dir / name;
  };
  EXPECT_THROW(load_checkpoint(write("short.glic", bytes.substr(0, bytes.size() - 3))), DataError);
  EXPECT_THROW(load_checkpoint(write("long.glic", bytes + "x")), DataError);
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(load_checkpoint(write("magic.glic", magic)), DataError);
  EXPECT_THROW(load_checkpoint(dir / "missing.glic"), DataError);
}

TEST_F(AlternatingTest, FinetuneWithTinyStepsKeepsValidationLoss) {
  // Every epoch refits the head, so the baseline is the refit on the loaded weights.
  auto cfg = run_->model.config;
  cfg.max_epochs = 1;
  cfg.cnn_learning_rate = 1e-7;
  const auto weights = resolve_class_weights(cfg, small_split().train);
  const auto refit = refit_head(run_->model.backbones, small_split().train, cfg, derive_seed(cfg.seed, 101));
  const double baseline = validation_loss(run_->model.backbones, refit, small_split().valid, weights);
  const auto r = finetune(run_->model, small_split().train, small_split().valid, cfg);
  EXPECT_NEAR(r.state.best_loss, baseline, 0.05 * baseline);
  EXPECT_EQ(r.model.task, run_->model.task);
  cfg.max_epochs = 0;
  EXPECT_THROW(finetune(run_->model, small_split().train, small_split().valid, cfg), ConfigError);
}

TEST_F(AlternatingTest, FinetuneRejectsFeatureCountMismatch) {
  auto model = run_->model;
  model.head = ebm::EbmHead::zeros(3);
  EXPECT_THROW(finetune(model, small_split().train, small_split().valid, model.config), ShapeError);
}

}  // namespace
}  // namespace glicnn::train
