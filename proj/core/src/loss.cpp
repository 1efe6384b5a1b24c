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

#include "glicnn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glicnn/errors.hpp"

namespace glicnn::nn {

ClassWeights inverse_frequency_weights(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) pos += (y == 1);
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    throw DataError("single_class", "class weights need both classes present");
  }
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(neg)), n / (2.0 * static_cast<double>(pos))};
}

double softplus(double x) noexcept {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double binary_cross_entropy_with_logit(double logit, int label) noexcept {
  // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
  return softplus(logit) - (label == 1 ? logit : 0.0);
}

double weighted_cross_entropy(std::span<const double> logits, std::span<const int> labels,
                              ClassWeights weights) {
  if (logits.empty()) throw DataError("empty_batch", "weighted_cross_entropy: empty batch");
  if (logits.size() != labels.size()) {
    throw ShapeError("weighted_cross_entropy: " + std::to_string(logits.size()) +
                     " logits vs " + std::to_string(labels.size()) + " labels");
  }
  if (!(weights.negative > 0.0) || !(weights.positive > 0.0)) {
    throw ConfigError("weighted_cross_entropy: class weights must be positive");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("bad_label", "labels must be 0 or 1");
    sum += weights(labels[i]) * binary_cross_entropy_with_logit(logits[i], labels[i]);
  }
  return sum / static_cast<double>(logits.size());
}

double weighted_cross_entropy_grad(double logit, int label, ClassWeights weights) noexcept {
  return weights(label) * (sigmoid(logit) - (label == 1 ? 1.0 : 0.0));
}

}  // namespace glicnn::nn
