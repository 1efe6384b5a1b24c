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
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

namespace glicnn::ebm {

// Row-major N x k matrix of feature values.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::vector<double> column(std::size_t c) const;
  void append_row(std::span<const double> values);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TrainConfig {
  std::size_t max_bins = 64;
  double learning_rate = 0.01;
  std::size_t max_rounds = 2000;
  std::size_t bag_count = 8;
  // Fraction of each bag held out for early stopping.
  double validation_fraction = 0.15;
  // Rounds without validation improvement before a bag stops.
  std::size_t patience = 50;
  std::size_t min_samples_leaf = 2;
  // When false every bag reuses the same inner train/validation split.
  bool resample_bags = true;

  void validate() const;
};

// Piecewise-constant univariate function over quantile bins. Bin b covers
// [edges[b-1], edges[b]) with the outer bins extending to -inf / +inf.
class ShapeFunction {
 public:
  ShapeFunction() = default;
  // lower/upper are the smallest/largest training values; they only place
  // the centres of the two outer bins for the surrogate gradient.
  ShapeFunction(std::vector<double> edges, std::vector<double> values, double lower, double upper);

  std::size_t bin_count() const noexcept { return values_.size(); }
  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

  std::size_t bin_index(double x) const;
  double operator()(double x) const { return values_[bin_index(x)]; }

  double bin_center(std::size_t bin) const { return centers_.at(bin); }
  // Piecewise-linear interpolation through (center_b, value_b), flat outside
  // the outermost centres.
  double interpolate(double x) const;
  // Derivative of interpolate(); 0 outside the centre range.
  double slope(double x) const;

  void shift(double delta);

  friend bool operator==(const ShapeFunction&, const ShapeFunction&) = default;

 private:
  void compute_centers();

  std::vector<double> edges_;
  std::vector<double> values_{0.0};
  double lower_ = 0.0;
  double upper_ = 0.0;
  std::vector<double> centers_{0.0};
};

// g(y) = intercept + sum_j f_j(x_j) with a logistic link.
class EbmHead {
 public:
  EbmHead() = default;
  EbmHead(double intercept, std::vector<ShapeFunction> shapes, std::vector<std::string> names = {});
  // beta = 0 and every shape identically 0 over a single bin.
  static EbmHead zeros(std::size_t feature_count);

  double intercept() const noexcept { return intercept_; }
  std::size_t feature_count() const noexcept { return shapes_.size(); }
  const std::vector<ShapeFunction>& shapes() const noexcept { return shapes_; }
  const ShapeFunction& shape(std::size_t j) const { return shapes_.at(j); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  void set_names(std::vector<std::string> names);

  // intercept + f_1(x_1) + ... + f_k(x_k), accumulated left to right.
  double predict_logit(std::span<const double> x) const;
  double predict_proba(std::span<const double> x) const;
  // (f_1(x_1), ..., f_k(x_k)).
  std::vector<double> individual_importance(std::span<const double> x) const;
  // d logit / d x_j of the piecewise-linear surrogate.
  std::vector<double> surrogate_gradient(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static EbmHead from_json(const nlohmann::json& j);

  friend bool operator==(const EbmHead&, const EbmHead&) = default;

 private:
  void check_width(std::size_t n) const;

  double intercept_ = 0.0;
  std::vector<ShapeFunction> shapes_;
  std::vector<std::string> names_;
};

// Quantile cut points for one feature, at most max_bins - 1 of them.
// Cuts sit at midpoints between adjacent distinct sorted values; when a
// quantile position falls inside a run of ties the cut moves to the end of
// that run.
std::vector<double> compute_bin_edges(std::span<const double> values, std::size_t max_bins);

struct InnerSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

// Stratified hold-out used by one bag; at least one validation sample.
InnerSplit inner_split(std::span<const int> labels, double validation_fraction, std::uint64_t seed);

// Cyclic gradient boosting of depth-1 trees with outer bagging, followed by
// bag averaging and centring of each shape over the training rows.
EbmHead fit_ebm(const FeatureMatrix& features, std::span<const int> labels, const TrainConfig& config,
                std::uint64_t seed);

// (1/N) sum_i |individual_importance(x_i)|.
std::vector<double> group_importance(const EbmHead& head, const FeatureMatrix& features);

}  // namespace glicnn::ebm
