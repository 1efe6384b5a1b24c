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

#include "glicnn/ebm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "glicnn/errors.hpp"
#include "glicnn/loss.hpp"
#include "glicnn/parallel.hpp"

namespace glicnn::ebm {
namespace {

constexpr double kInterceptLimit = 15.0;
// Splits must reduce squared error by more than this to be applied.
constexpr double kMinGain = 1e-12;

double midpoint(double lo, double hi) { return lo + (hi - lo) / 2.0; }

double clamped_log_odds(std::span<const int> labels, std::span<const std::size_t> rows) {
  double pos = 0;
  for (std::size_t r : rows) pos += labels[r];
  const double n = static_cast<double>(rows.size());
  if (pos <= 0) return -kInterceptLimit;
  if (pos >= n) return kInterceptLimit;
  return std::clamp(std::log(pos / (n - pos)), -kInterceptLimit, kInterceptLimit);
}

double mean_log_loss(std::span<const double> scores, std::span<const int> labels,
                     std::span<const std::size_t> rows) {
  double s = 0;
  for (std::size_t r : rows) s += nn::binary_cross_entropy_with_logit(scores[r], labels[r]);
  return s / static_cast<double>(rows.size());
}

struct BagResult {
  double intercept = 0;
  std::vector<std::vector<double>> values;
};

// One bag: boosting rounds cycle over features j = 0..k-1; each step fits a
// depth-1 regression tree on bins of feature j to the residual y - p and
// adds learning_rate * leaf value to the touched bins. The state with the
// lowest held-out log-loss is returned.
BagResult fit_bag(const std::vector<std::vector<std::uint16_t>>& bins,
                  const std::vector<std::size_t>& bin_counts, std::span<const int> labels,
                  const InnerSplit& split, const TrainConfig& config) {
  const std::size_t k = bins.size();
  const std::size_t n = labels.size();
  BagResult current;
  current.intercept = clamped_log_odds(labels, split.train);
  current.values.resize(k);
  for (std::size_t j = 0; j < k; ++j) current.values[j].assign(bin_counts[j], 0.0);

  std::vector<double> scores(n, current.intercept);
  std::vector<double> residual(n, 0.0);
  std::vector<double> hist_sum;
  std::vector<std::size_t> hist_count;

  BagResult best = current;
  double best_loss = mean_log_loss(scores, labels, split.valid);
  std::size_t stagnant = 0;
  const double lr = config.learning_rate;
  const std::size_t min_leaf = config.min_samples_leaf;

  for (std::size_t round = 0; round < config.max_rounds; ++round) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t nb = bin_counts[j];
      if (nb < 2) continue;
      const auto& fb = bins[j];
      hist_sum.assign(nb, 0.0);
      hist_count.assign(nb, 0);
      for (std::size_t r : split.train) {
        residual[r] = labels[r] - nn::sigmoid(scores[r]);
        hist_sum[fb[r]] += residual[r];
        ++hist_count[fb[r]];
      }
      double total = 0;
      for (double v : hist_sum) total += v;
      const double n_total = static_cast<double>(split.train.size());

      double best_gain = kMinGain;
      std::size_t best_cut = 0;
      double left_sum = 0, left_sum_at = 0;
      std::size_t left_n = 0, left_n_at = 0;
      for (std::size_t cut = 1; cut < nb; ++cut) {
        left_sum += hist_sum[cut - 1];
        left_n += hist_count[cut - 1];
        const std::size_t right_n = split.train.size() - left_n;
        if (left_n < min_leaf || right_n < min_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                            right_sum * right_sum / static_cast<double>(right_n) -
                            total * total / n_total;
        if (gain > best_gain) {
          best_gain = gain;
          best_cut = cut;
          left_sum_at = left_sum;
          left_n_at = left_n;
        }
      }
      if (best_cut == 0) continue;
      const double left_value = lr * left_sum_at / static_cast<double>(left_n_at);
      const double right_value =
          lr * (total - left_sum_at) / static_cast<double>(split.train.size() - left_n_at);
      auto& vals = current.values[j];
      for (std::size_t b = 0; b < nb; ++b) vals[b] += b < best_cut ? left_value : right_value;
      for (std::size_t r = 0; r < n; ++r) scores[r] += fb[r] < best_cut ? left_value : right_value;
    }
    const double loss = mean_log_loss(scores, labels, split.valid);
    if (loss < best_loss) {
      best_loss = loss;
      best = current;
      stagnant = 0;
    } else if (++stagnant >= config.patience) {
      break;
    }
  }
  return best;
}

}  // namespace

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
  return out;
}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw ShapeError("FeatureMatrix: row of width " + std::to_string(values.size()) +
                     " appended to matrix of width " + std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void TrainConfig::validate() const {
  if (max_bins < 2 || max_bins > 65535) throw ConfigError("ebm: max_bins must be in [2, 65535]");
  if (!(learning_rate > 0)) throw ConfigError("ebm: learning_rate must be positive");
  if (max_rounds == 0) throw ConfigError("ebm: max_rounds must be positive");
  if (bag_count == 0) throw ConfigError("ebm: bag_count must be positive");
  if (!(validation_fraction > 0 && validation_fraction < 1)) {
    throw ConfigError("ebm: validation_fraction must be in (0,1)");
  }
  if (patience == 0) throw ConfigError("ebm: patience must be positive");
  if (min_samples_leaf == 0) throw ConfigError("ebm: min_samples_leaf must be positive");
}

ShapeFunction::ShapeFunction(std::vector<double> edges, std::vector<double> values, double lower,
                             double upper)
    : edges_(std::move(edges)), values_(std::move(values)), lower_(lower), upper_(upper) {
  if (values_.size() != edges_.size() + 1) {
    throw ShapeError("shape function: " + std::to_string(values_.size()) + " values for " +
                     std::to_string(edges_.size()) + " edges");
  }
  if (!std::is_sorted(edges_.begin(), edges_.end()) ||
      std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    throw DataError("shape function: edges must be strictly ascending");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(values_.begin(), values_.end(), finite) ||
      !std::all_of(edges_.begin(), edges_.end(), finite) || !finite(lower_) || !finite(upper_)) {
    throw DataError("shape function: non-finite edge or value");
  }
  compute_centers();
}

void ShapeFunction::compute_centers() {
  const std::size_t nb = values_.size();
  centers_.assign(nb, 0.0);
  if (edges_.empty()) {
    centers_[0] = midpoint(lower_, upper_);
    return;
  }
  for (std::size_t b = 0; b < nb; ++b) {
    const double lo = b == 0 ? std::min(lower_, edges_.front()) : edges_[b - 1];
    const double hi = b + 1 == nb ? std::max(upper_, edges_.back()) : edges_[b];
    centers_[b] = midpoint(lo, hi);
  }
}

std::size_t ShapeFunction::bin_index(double x) const {
  return static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), x) - edges_.begin());
}

double ShapeFunction::interpolate(double x) const {
  const std::size_t nb = values_.size();
  if (nb == 1 || x <= centers_.front()) return values_.front();
  if (x >= centers_.back()) return values_.back();
  const std::size_t s =
      static_cast<std::size_t>(std::upper_bound(centers_.begin(), centers_.end(), x) - centers_.begin()) - 1;
  const double width = centers_[s + 1] - centers_[s];
  if (!(width > 0)) return values_[s + 1];
  return values_[s] + (values_[s + 1] - values_[s]) * (x - centers_[s]) / width;
}

double ShapeFunction::slope(double x) const {
  const std::size_t nb = values_.size();
  if (nb < 2 || x < centers_.front() || x >= centers_.back()) return 0.0;
  const std::size_t s =
      static_cast<std::size_t>(std::upper_bound(centers_.begin(), centers_.end(), x) - centers_.begin()) - 1;
  const double width = centers_[s + 1] - centers_[s];
  if (!(width > 0)) return 0.0;
  return (values_[s + 1] - values_[s]) / width;
}

void ShapeFunction::shift(double delta) {
  for (double& v : values_) v += delta;
}

EbmHead::EbmHead(double intercept, std::vector<ShapeFunction> shapes, std::vector<std::string> names)
    : intercept_(intercept), shapes_(std::move(shapes)) {
  if (shapes_.empty()) throw ConfigError("ebm head: at least one feature is required");
  if (!std::isfinite(intercept_)) throw DataError("ebm head: non-finite intercept");
  set_names(std::move(names));
}

EbmHead EbmHead::zeros(std::size_t feature_count) {
  return EbmHead(0.0, std::vector<ShapeFunction>(feature_count));
}

void EbmHead::set_names(std::vector<std::string> names) {
  if (names.empty()) {
    names.resize(shapes_.size());
    for (std::size_t j = 0; j < names.size(); ++j) names[j] = "x" + std::to_string(j + 1);
  }
  if (names.size() != shapes_.size()) {
    throw ShapeError("ebm head: " + std::to_string(names.size()) + " names for " +
                     std::to_string(shapes_.size()) + " features");
  }
  names_ = std::move(names);
}

void EbmHead::check_width(std::size_t n) const {
  if (n != shapes_.size()) {
    throw ShapeError("ebm head expects " + std::to_string(shapes_.size()) + " features, got " +
                     std::to_string(n));
  }
}

double EbmHead::predict_logit(std::span<const double> x) const {
  check_width(x.size());
  double logit = intercept_;
  for (std::size_t j = 0; j < shapes_.size(); ++j) logit += shapes_[j](x[j]);
  return logit;
}

double EbmHead::predict_proba(std::span<const double> x) const { return nn::sigmoid(predict_logit(x)); }

std::vector<double> EbmHead::individual_importance(std::span<const double> x) const {
  check_width(x.size());
  std::vector<double> out(shapes_.size());
  for (std::size_t j = 0; j < shapes_.size(); ++j) out[j] = shapes_[j](x[j]);
  return out;
}

std::vector<double> EbmHead::surrogate_gradient(std::span<const double> x) const {
  check_width(x.size());
  std::vector<double> out(shapes_.size());
  for (std::size_t j = 0; j < shapes_.size(); ++j) out[j] = shapes_[j].slope(x[j]);
  return out;
}

nlohmann::json EbmHead::to_json() const {
  nlohmann::json j;
  j["intercept"] = intercept_;
  j["link"] = "logit";
  auto& features = j["features"] = nlohmann::json::array();
  for (std::size_t f = 0; f < shapes_.size(); ++f) {
    features.push_back({{"name", names_[f]},
                        {"edges", shapes_[f].edges()},
                        {"values", shapes_[f].values()},
                        {"lower", shapes_[f].lower()},
                        {"upper", shapes_[f].upper()}});
  }
  return j;
}

EbmHead EbmHead::from_json(const nlohmann::json& j) {
  try {
    std::vector<ShapeFunction> shapes;
    std::vector<std::string> names;
    for (const auto& f : j.at("features")) {
      shapes.emplace_back(f.at("edges").get<std::vector<double>>(),
                          f.at("values").get<std::vector<double>>(), f.at("lower").get<double>(),
                          f.at("upper").get<double>());
      names.push_back(f.at("name").get<std::string>());
    }
    return EbmHead(j.at("intercept").get<double>(), std::move(shapes), std::move(names));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad_head", std::string("ebm head JSON: ") + e.what());
  }
}

std::vector<double> compute_bin_edges(std::span<const double> values, std::size_t max_bins) {
  if (max_bins < 2) throw ConfigError("compute_bin_edges: max_bins must be >= 2");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> edges;
  if (distinct.size() < 2) return edges;
  if (distinct.size() <= max_bins) {
    for (std::size_t i = 1; i < distinct.size(); ++i) edges.push_back(midpoint(distinct[i - 1], distinct[i]));
    return edges;
  }
  const std::size_t n = sorted.size();
  for (std::size_t q = 1; q < max_bins; ++q) {
    std::size_t pos = q * n / max_bins;
    if (pos == 0) continue;
    const double lo = sorted[pos - 1];
    while (pos < n && sorted[pos] == lo) ++pos;
    if (pos == n) break;
    const double cut = midpoint(lo, sorted[pos]);
    if (edges.empty() || cut > edges.back()) edges.push_back(cut);
  }
  return edges;
}

InnerSplit inner_split(std::span<const int> labels, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  std::mt19937_64 rng(seed);
  InnerSplit split;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_valid = static_cast<std::size_t>(
        std::lround(validation_fraction * static_cast<double>(members.size())));
    split.valid.insert(split.valid.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_valid));
    split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_valid), members.end());
  }
  if (split.valid.empty() && split.train.size() > 1) {
    split.valid.push_back(split.train.back());
    split.train.pop_back();
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.valid.begin(), split.valid.end());
  return split;
}

EbmHead fit_ebm(const FeatureMatrix& features, std::span<const int> labels, const TrainConfig& config,
                std::uint64_t seed) {
  config.validate();
  const std::size_t n = features.rows(), k = features.cols();
  if (labels.size() != n) {
    throw ShapeError("fit_ebm: " + std::to_string(n) + " rows vs " + std::to_string(labels.size()) + " labels");
  }
  if (n < 10) throw DataError("too_few_samples", "fit_ebm: at least 10 samples are required");
  if (k == 0) throw ConfigError("fit_ebm: at least one feature is required");
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("bad_label", "fit_ebm: labels must be 0 or 1");
  }

  std::vector<std::vector<double>> edges(k);
  std::vector<std::vector<std::uint16_t>> bins(k, std::vector<std::uint16_t>(n));
  std::vector<std::size_t> bin_counts(k);
  std::vector<double> lower(k), upper(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto col = features.column(j);
    for (double v : col) {
      if (!std::isfinite(v)) throw DataError("non_finite", "fit_ebm: feature values must be finite");
    }
    edges[j] = compute_bin_edges(col, config.max_bins);
    bin_counts[j] = edges[j].size() + 1;
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    lower[j] = *mn;
    upper[j] = *mx;
    for (std::size_t r = 0; r < n; ++r) {
      bins[j][r] = static_cast<std::uint16_t>(
          std::upper_bound(edges[j].begin(), edges[j].end(), col[r]) - edges[j].begin());
    }
  }

  std::vector<BagResult> bags(config.bag_count);
  parallel_for(config.bag_count, [&](std::size_t b) {
    const auto split = inner_split(labels, config.validation_fraction,
                                   derive_seed(seed, config.resample_bags ? b : 0));
    bags[b] = fit_bag(bins, bin_counts, labels, split, config);
  });

  const double inv_bags = 1.0 / static_cast<double>(bags.size());
  double intercept = 0;
  std::vector<std::vector<double>> values(k);
  for (std::size_t j = 0; j < k; ++j) values[j].assign(bin_counts[j], 0.0);
  for (const auto& bag : bags) {
    intercept += bag.intercept;
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t b = 0; b < bin_counts[j]; ++b) values[j][b] += bag.values[j][b];
  }
  intercept *= inv_bags;
  for (auto& v : values)
    for (double& x : v) x *= inv_bags;

  // Centre every shape over the training rows and fold the means into beta.
  std::vector<ShapeFunction> shapes;
  shapes.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    double mean = 0;
    for (std::size_t r = 0; r < n; ++r) mean += values[j][bins[j][r]];
    mean /= static_cast<double>(n);
    for (double& x : values[j]) x -= mean;
    intercept += mean;
    shapes.emplace_back(std::move(edges[j]), std::move(values[j]), lower[j], upper[j]);
  }
  return EbmHead(intercept, std::move(shapes));
}

std::vector<double> group_importance(const EbmHead& head, const FeatureMatrix& features) {
  if (features.cols() != head.feature_count()) {
    throw ShapeError("group_importance: matrix has " + std::to_string(features.cols()) +
                     " columns, head has " + std::to_string(head.feature_count()) + " features");
  }
  if (features.rows() == 0) throw DataError("empty_dataset", "group_importance: empty dataset");
  std::vector<double> out(head.feature_count(), 0.0);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto row = features.row(r);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += std::abs(head.shape(j)(row[j]));
  }
  for (double& v : out) v /= static_cast<double>(features.rows());
  return out;
}

}  // namespace glicnn::ebm
