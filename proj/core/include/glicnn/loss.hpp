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

#include <span>

namespace glicnn::nn {

// Per-class multipliers applied to the binary cross-entropy term.
struct ClassWeights {
  double negative = 1.0;
  double positive = 1.0;

  double operator()(int label) const noexcept { return label == 1 ? positive : negative; }
};

// Inverse class frequency: w_c = N / (2 N_c). Both classes must be present.
ClassWeights inverse_frequency_weights(std::span<const int> labels);

// log(1 + exp(x)) without overflow.
double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

// Binary cross-entropy of one logit against a {0,1} label.
double binary_cross_entropy_with_logit(double logit, int label) noexcept;

// mean_i w(y_i) * BCE(sigmoid(logit_i), y_i).
double weighted_cross_entropy(std::span<const double> logits, std::span<const int> labels,
                              ClassWeights weights);

// d/dlogit of w(y) * BCE(sigmoid(logit), y) for a single sample.
double weighted_cross_entropy_grad(double logit, int label, ClassWeights weights) noexcept;

}  // namespace glicnn::nn
