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
#include <random>

#include "glicnn/parallel.hpp"

#include <gtest/gtest.h>

#include "glicnn/ebm.hpp"
#include "glicnn/errors.hpp"
#include "glicnn/evalstats.hpp"
#include "glicnn/loss.hpp"
#include "support/oracles.hpp"

namespace glicnn::ebm {
namespace {

EbmHead example_head() {
  // beta = 0.3; f1: (-inf,0) -> -0.5, [0,inf) -> +0.5; f2 = 0.
  return EbmHead(0.3, {ShapeFunction({0.0}, {-0.5, 0.5}, -1, 1), ShapeFunction({}, {0.0}, 0, 0)});
}

FeatureMatrix random_matrix(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  FeatureMatrix m(n, k);
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) m.at(i, j) = g(rng);
  return m;
}

std::vector<int> labels_from(const FeatureMatrix& m, std::mt19937_64& rng) {
  std::vector<int> y(m.rows());
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double z = 2.0 * m.at(i, 0) - std::abs(m.at(i, m.cols() - 1));
    y[i] = u(rng) < nn::sigmoid(z) ? 1 : 0;
  }
  return y;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.max_rounds = 300;
  c.bag_count = 2;
  return c;
}

TEST(BinEdgesTest, MidpointsBetweenDistinctValues) {
  const std::vector<double> v{3, 1, 2, 2, 1};
  EXPECT_EQ(compute_bin_edges(v, 64), (std::vector<double>{1.5, 2.5}));
  const std::vector<double> constant(7, 4.0);
  EXPECT_TRUE(compute_bin_edges(constant, 64).empty());
}

TEST(BinEdgesTest, QuantileCutsRespectMaxBins) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 250);
  const auto e = compute_bin_edges(v, 8);
  EXPECT_LE(e.size() + 1, 8u);
  EXPECT_GE(e.size(), 6u);
  EXPECT_TRUE(std::is_sorted(e.begin(), e.end()));
}

TEST(ShapeFunctionTest, ClampsOutOfRangeToEdgeBins) {
  const ShapeFunction f({0.0, 1.0}, {-2.0, 0.5, 3.0}, -1.0, 2.0);
  EXPECT_EQ(f(-100.0), -2.0);
  EXPECT_EQ(f(100.0), 3.0);
  EXPECT_EQ(f(0.0), 0.5);  // an edge belongs to the bin above it
  EXPECT_EQ(f(0.999), 0.5);
}

TEST(ShapeFunctionTest, SurrogateSlopeBetweenCentres) {
  // Outer centres use the training range: (-1+0)/2 = -0.5, (1+2)/2 = 1.5.
  const ShapeFunction f({0.0, 1.0}, {-2.0, 0.5, 3.0}, -1.0, 2.0);
  EXPECT_DOUBLE_EQ(f.bin_center(0), -0.5);
  EXPECT_DOUBLE_EQ(f.bin_center(1), 0.5);
  EXPECT_DOUBLE_EQ(f.bin_center(2), 1.5);
  EXPECT_DOUBLE_EQ(f.slope(0.0), (0.5 - -2.0) / (0.5 - -0.5));
  EXPECT_DOUBLE_EQ(f.slope(1.2), (3.0 - 0.5) / (1.5 - 0.5));
  EXPECT_EQ(f.slope(-3.0), 0.0);
  EXPECT_EQ(f.slope(5.0), 0.0);
  EXPECT_EQ(ShapeFunction({0.0}, {1.0, 1.0}, -1, 1).slope(0.1), 0.0);
}

TEST(ShapeFunctionTest, SlopeMatchesFiniteDifferencesOfInterpolation) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<double> edges{-1.0, -0.2, 0.4, 1.7};
  std::vector<double> values{0.3, -0.1, 0.9, 0.2, -0.4};
  const ShapeFunction f(edges, values, -2.5, 2.5);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    const double h = 1e-7;
    bool near_centre = false;
    for (std::size_t b = 0; b < values.size(); ++b) near_centre |= std::abs(x - f.bin_center(b)) < 2 * h;
    if (near_centre) continue;
    EXPECT_NEAR(f.slope(x), (f.interpolate(x + h) - f.interpolate(x - h)) / (2 * h), 1e-6);
  }
}

TEST(EbmHeadTest, ZeroHeadPredictsOneHalf) {
  const auto head = EbmHead::zeros(3);
  const std::vector<double> x{1.0, -2.0, 3.0};
  EXPECT_EQ(head.predict_proba(x), 0.5);
  EXPECT_EQ(head.individual_importance(x), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(head.names(), (std::vector<std::string>{"x1", "x2", "x3"}));
}

TEST(EbmHeadTest, WorkedExample) {
  const auto head = example_head();
  const std::vector<double> x{1.2, 7.0};
  EXPECT_NEAR(head.predict_logit(x), 0.8, 1e-15);
  EXPECT_NEAR(head.predict_proba(x), 0.68997, 5e-6);
  EXPECT_EQ(head.individual_importance(x), (std::vector<double>{0.5, 0.0}));
  const std::vector<double> low{-9.0, 0.0};
  EXPECT_EQ(head.individual_importance(low)[0], -0.5);
}

TEST(EbmHeadTest, LengthMismatchIsAShapeError) {
  const auto head = example_head();
  const std::vector<double> x{1.0};
  EXPECT_THROW(head.predict_logit(x), ShapeError);
  EXPECT_THROW(head.individual_importance(x), ShapeError);
  EXPECT_THROW(head.surrogate_gradient(x), ShapeError);
}

TEST(EbmHeadTest, JsonRoundTripIsExact) {
  std::mt19937_64 rng(3);
  const auto m = random_matrix(200, 4, rng);
  const auto y = labels_from(m, rng);
  auto head = fit_ebm(m, y, quick_config(), 1);
  head.set_names({"a", "b", "c", "d"});
  const auto back = EbmHead::from_json(nlohmann::json::parse(head.to_json().dump()));
  EXPECT_EQ(back, head);
  for (std::size_t i = 0; i < m.rows(); ++i) EXPECT_EQ(back.predict_logit(m.row(i)), head.predict_logit(m.row(i)));
  EXPECT_THROW(EbmHead::from_json(nlohmann::json::parse(R"({"intercept": 0})")), DataError);
}

TEST(FitEbmTest, AllPositiveLabels) {
  std::mt19937_64 rng(4);
  const auto m = random_matrix(50, 2, rng);
  const std::vector<int> y(50, 1);
  const auto head = fit_ebm(m, y, quick_config(), 1);
  EXPECT_DOUBLE_EQ(head.intercept(), 15.0);
  for (const auto& s : head.shapes())
    for (double v : s.values()) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) EXPECT_GE(head.predict_proba(m.row(i)), 0.99);
}

TEST(FitEbmTest, SeparatingFeatureGetsTheRightSign) {
  std::mt19937_64 rng(5);
  FeatureMatrix m(60, 1);
  std::vector<int> y(60);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (std::size_t i = 0; i < 60; ++i) {
    y[i] = i % 2;
    m.at(i, 0) = y[i] ? u(rng) : -u(rng);
  }
  auto cfg = quick_config();
  cfg.max_rounds = 2000;
  const auto head = fit_ebm(m, y, cfg, 2);
  std::vector<double> scores;
  for (std::size_t i = 0; i < 60; ++i) {
    const double f = head.shape(0)(m.at(i, 0));
    EXPECT_EQ(f > 0, m.at(i, 0) > 0) << i;
    scores.push_back(head.predict_proba(m.row(i)));
  }
  EXPECT_EQ(stats::auc(scores, y), 1.0);
}

TEST(FitEbmTest, SingleFeatureMatchesBoostedStumpsOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto m = random_matrix(120 + 10 * seed, 1, rng);
    std::vector<int> y(m.rows());
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t i = 0; i < m.rows(); ++i) y[i] = u(rng) < nn::sigmoid(1.5 * m.at(i, 0)) ? 1 : 0;
    TrainConfig cfg;
    cfg.bag_count = 1;
    cfg.max_rounds = 400;
    cfg.learning_rate = 0.05;
    cfg.max_bins = 16;
    const auto head = fit_ebm(m, y, cfg, seed);
    const auto x = m.column(0);
    const auto split = inner_split(y, cfg.validation_fraction, derive_seed(seed, 0));
    const auto oracle = testing::boosted_stumps_oracle(x, y, head.shape(0).edges(), split, cfg);
    ASSERT_EQ(oracle.values.size(), head.shape(0).bin_count());
    for (std::size_t b = 0; b < oracle.values.size(); ++b) {
      EXPECT_NEAR(head.shape(0).values()[b], oracle.values[b], 1e-9) << "seed " << seed << " bin " << b;
    }
    EXPECT_NEAR(head.intercept(), oracle.intercept, 1e-9);
  }
}

TEST(FitEbmTest, ShapesAreCentredOverTrainingRows) {
  std::mt19937_64 rng(6);
  const auto m = random_matrix(150, 3, rng);
  const auto y = labels_from(m, rng);
  const auto head = fit_ebm(m, y, quick_config(), 3);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) mean += head.shape(j)(m.at(i, j));
    EXPECT_LE(std::abs(mean / m.rows()), 1e-9);
  }
}

TEST(FitEbmTest, DegenerateFeatureHasZeroShape) {
  std::mt19937_64 rng(7);
  auto m = random_matrix(80, 2, rng);
  for (std::size_t i = 0; i < m.rows(); ++i) m.at(i, 1) = 3.0;
  const auto y = labels_from(m, rng);
  const auto head = fit_ebm(m, y, quick_config(), 4);
  for (double v : head.shape(1).values()) EXPECT_EQ(v, 0.0);
}

TEST(FitEbmTest, DeterministicPerSeed) {
  std::mt19937_64 rng(8);
  const auto m = random_matrix(100, 3, rng);
  const auto y = labels_from(m, rng);
  auto cfg = quick_config();
  cfg.bag_count = 1;
  EXPECT_EQ(fit_ebm(m, y, cfg, 9), fit_ebm(m, y, cfg, 9));
}

TEST(FitEbmTest, IdenticalBagsAverageToTheSingleBagHead) {
  std::mt19937_64 rng(9);
  const auto m = random_matrix(100, 3, rng);
  const auto y = labels_from(m, rng);
  auto one = quick_config();
  one.bag_count = 1;
  auto many = one;
  many.bag_count = 4;
  many.resample_bags = false;
  const auto a = fit_ebm(m, y, one, 11);
  const auto b = fit_ebm(m, y, many, 11);
  EXPECT_NEAR(a.intercept(), b.intercept(), 1e-12);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t t = 0; t < a.shape(j).bin_count(); ++t)
      EXPECT_NEAR(a.shape(j).values()[t], b.shape(j).values()[t], 1e-12);
}

TEST(FitEbmTest, RejectsBadInputs) {
  std::mt19937_64 rng(10);
  const auto m = random_matrix(9, 2, rng);
  EXPECT_THROW(fit_ebm(m, std::vector<int>(9, 0), quick_config(), 1), DataError);
  auto big = random_matrix(20, 2, rng);
  EXPECT_THROW(fit_ebm(big, std::vector<int>(19, 0), quick_config(), 1), ShapeError);
  big.at(3, 1) = std::nan("");
  EXPECT_THROW(fit_ebm(big, std::vector<int>(20, 0), quick_config(), 1), DataError);
  auto bad = quick_config();
  bad.validation_fraction = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ImportanceTest, DecompositionIsExact) {
  std::mt19937_64 rng(11);
  const auto m = random_matrix(300, 5, rng);
  const auto y = labels_from(m, rng);
  const auto head = fit_ebm(m, y, quick_config(), 5);
  const auto probe = random_matrix(1000, 5, rng);
  for (std::size_t i = 0; i < probe.rows(); ++i) {
    double sum = head.intercept();
    for (double c : head.individual_importance(probe.row(i))) sum += c;
    EXPECT_EQ(sum, head.predict_logit(probe.row(i)));
  }
}

TEST(ImportanceTest, GroupImportanceExamples) {
  const EbmHead head(0.0, {ShapeFunction({0.0}, {-0.5, 0.5}, -1, 1)});
  FeatureMatrix one(1, 1);
  one.at(0, 0) = -1;
  EXPECT_EQ(group_importance(head, one), (std::vector<double>{0.5}));
  FeatureMatrix two(2, 1);
  two.at(0, 0) = 1;
  two.at(1, 0) = -1;
  EXPECT_EQ(group_importance(head, two), (std::vector<double>{0.5}));
}

TEST(ImportanceTest, GroupImportanceMatchesNaiveLoop) {
  std::mt19937_64 rng(12);
  const auto m = random_matrix(120, 4, rng);
  const auto y = labels_from(m, rng);
  const auto head = fit_ebm(m, y, quick_config(), 6);
  const auto g = group_importance(head, m);
  for (std::size_t j = 0; j < 4; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += std::abs(head.individual_importance(m.row(i))[j]);
    EXPECT_NEAR(g[j], s / m.rows(), 1e-14);
    EXPECT_GE(g[j], 0.0);
  }
}

TEST(ImportanceTest, ProbabilityIsMonotoneInLogit) {
  double prev = -1;
  for (double z = -30; z <= 30; z += 0.5) {
    const double p = nn::sigmoid(z);
    EXPECT_GT(p, prev);
    prev = p;
  }
}

}  // namespace
}  // namespace glicnn::ebm
