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
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

namespace glicnn::stats {

// Scores (probabilities) and {0,1} labels for one model on one subject set.
struct ScoredSet {
  std::vector<std::string> subject_ids;
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const noexcept { return scores.size(); }
  // Throws unless lengths agree and labels are 0/1.
  void validate() const;
  ScoredSet resample(std::span<const std::size_t> indices) const;
};

// Standard normal CDF via erfc.
double normal_cdf(double z) noexcept;

// Average ranks (1-based), ties sharing the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

// Mann-Whitney AUC: P(s+ > s-) + 0.5 P(s+ == s-). Needs both classes.
double auc(std::span<const double> scores, std::span<const int> labels);
double auc(const ScoredSet& set);

struct Interval {
  double low = 0;
  double high = 0;
};

using Metric = std::function<double(const ScoredSet&)>;

struct BootstrapOptions {
  std::size_t repetitions = 100;
  double level = 0.95;
  std::uint64_t seed = 0;
  // Redraws allowed per repetition when a resample lacks a class.
  std::size_t max_redraws = 1000;
};

// Metric values over subject resamples (with replacement) that contain
// both classes. Repetition r draws from its own derived seed, so results
// do not depend on thread count.
std::vector<double> bootstrap_samples(const ScoredSet& set, const Metric& metric,
                                      const BootstrapOptions& options);

// Linear-interpolated percentile (numpy "linear" rule) of unsorted values.
double percentile(std::vector<double> values, double q);

// Percentile bootstrap interval: the (1-level)/2 and (1+level)/2 quantiles.
Interval bootstrap_ci(const ScoredSet& set, const Metric& metric, const BootstrapOptions& options);

struct DeLongResult {
  double auc_a = 0;
  double auc_b = 0;
  double variance = 0;  // var(AUC_a - AUC_b)
  double z = 0;
  double p_value = 1;
};

// Paired comparison of two correlated AUCs from placement values. The two
// sets must cover the same subjects with the same labels, in the same order.
DeLongResult delong_test(const ScoredSet& a, const ScoredSet& b);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

// 8:1:1 split performed within each class: valid and test get
// round(n_c * 0.1) subjects of class c, train the rest. Index lists are
// returned sorted.
SplitIndices stratified_split(std::span<const int> labels, std::uint64_t seed,
                              double valid_fraction = 0.1, double test_fraction = 0.1);

struct ModelScores {
  std::string name;
  ScoredSet scores;
};

struct ModelResult {
  std::string name;
  double auc = 0;
  Interval ci;
};

struct PairwiseResult {
  std::string a;
  std::string b;
  double z = 0;
  double p_value = 1;
};

struct EvalReport {
  std::size_t repetitions = 100;
  double level = 0.95;
  // Sorted by AUC, best first.
  std::vector<ModelResult> models;
  std::vector<PairwiseResult> pairwise;

  const ModelResult& model(const std::string& name) const;
  const PairwiseResult* pair(const std::string& a, const std::string& b) const;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// AUC with bootstrap CI for every model and DeLong tests for every pair.
// The point estimate is always inside the reported interval (the bounds
// are widened to include it when the percentile interval misses it).
EvalReport run_comparison(std::span<const ModelScores> models, const BootstrapOptions& options);

}  // namespace glicnn::stats
