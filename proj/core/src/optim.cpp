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

#include "glicnn/optim.hpp"

#include <cmath>

#include "glicnn/errors.hpp"

namespace glicnn::nn {
namespace {

void ensure_state(std::vector<Tensor>& buffers, std::span<Parameter* const> params,
                  const char* who) {
  if (buffers.empty()) {
    for (const Parameter* p : params) buffers.emplace_back(p->value.shape());
    return;
  }
  if (buffers.size() != params.size()) {
    throw StateError(std::string(who) + ": parameter count changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (buffers[i].shape() != params[i]->value.shape()) {
      throw ShapeError(std::string(who) + ": moment buffer shape mismatch for " + params[i]->name);
    }
  }
}

}  // namespace

Sgd::Sgd(double learning_rate, double momentum) : learning_rate_(learning_rate), momentum_(momentum) {
  if (!(learning_rate > 0.0) || momentum < 0.0 || momentum >= 1.0) {
    throw ConfigError("sgd: learning rate must be > 0 and momentum in [0,1)");
  }
}

void Sgd::step(std::span<Parameter* const> params) {
  ensure_state(velocity_, params, "sgd");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& v = velocity_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double vj = momentum_ * v[j] + p.grad[j];
      v[j] = static_cast<float>(vj);
      p.value[j] = static_cast<float>(p.value[j] - learning_rate_ * vj);
    }
  }
  ++steps_;
}

Adam::Adam(AdamOptions options) : options_(options) {
  if (!(options.learning_rate > 0.0) || options.beta1 < 0.0 || options.beta1 >= 1.0 ||
      options.beta2 < 0.0 || options.beta2 >= 1.0 || !(options.epsilon > 0.0)) {
    throw ConfigError("adam: invalid hyperparameters");
  }
}

void Adam::step(std::span<Parameter* const> params) {
  ensure_state(first_moment_, params, "adam");
  ensure_state(second_moment_, params, "adam");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& m = first_moment_[i];
    Tensor& v = second_moment_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      const double mj = options_.beta1 * m[j] + (1.0 - options_.beta1) * g;
      const double vj = options_.beta2 * v[j] + (1.0 - options_.beta2) * g * g;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double update = options_.learning_rate * (mj / c1) / (std::sqrt(vj / c2) + options_.epsilon);
      p.value[j] = static_cast<float>(p.value[j] - update);
    }
  }
}

}  // namespace glicnn::nn
