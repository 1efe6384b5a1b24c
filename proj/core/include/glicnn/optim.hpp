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

#include <cstdint>
#include <span>
#include <vector>

#include "glicnn/tensor.hpp"

namespace glicnn::nn {

class Sgd {
 public:
  explicit Sgd(double learning_rate, double momentum = 0.0);

  void step(std::span<Parameter* const> params);
  std::uint64_t steps() const noexcept { return steps_; }

 private:
  double learning_rate_;
  double momentum_;
  std::vector<Tensor> velocity_;
  std::uint64_t steps_ = 0;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moment buffers are created on the first step
// and must keep matching the parameter shapes afterwards.
class Adam {
 public:
  explicit Adam(AdamOptions options = {});

  void step(std::span<Parameter* const> params);
  std::uint64_t steps() const noexcept { return steps_; }
  const AdamOptions& options() const noexcept { return options_; }
  void set_learning_rate(double lr) noexcept { options_.learning_rate = lr; }

 private:
  AdamOptions options_;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
  std::uint64_t steps_ = 0;
};

}  // namespace glicnn::nn
