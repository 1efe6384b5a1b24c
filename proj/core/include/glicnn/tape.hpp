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
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "glicnn/loss.hpp"
#include "glicnn/ops.hpp"
#include "glicnn/tensor.hpp"

namespace glicnn::nn {

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t index = static_cast<std::size_t>(-1);
  bool valid() const noexcept { return index != static_cast<std::size_t>(-1); }
};

// Records the forward pass of one step over the fixed op set and replays
// it in reverse to produce gradients. A tape is single-use per step and is
// not shared between threads; concurrent samples each get their own tape.
template <typename T>
class Tape {
 public:
  // Constant input: no gradient is tracked.
  Var input(BasicTensor<T> value);
  // Leaf whose gradient is tracked (a parameter copy).
  Var param(BasicTensor<T> value);

  Var conv3d(Var x, Var weight, Var bias, Conv3dGeometry geometry);
  Var relu(Var x);
  Var maxpool3d(Var x, int window);
  Var global_avg_pool(Var x);
  Var dense(Var x, Var weight, Var bias);
  Var concat_channels(Var a, Var b);
  // Scalar sum(x * coefficients); coefficients match x's shape.
  Var dot(Var x, BasicTensor<T> coefficients);
  // Scalar mean weighted binary cross-entropy of logits (any shape, one
  // element per sample).
  Var weighted_cross_entropy(Var logits, std::vector<int> labels, ClassWeights weights);

  const BasicTensor<T>& value(Var v) const;
  // Gradient of the last backward root w.r.t. v; zero-filled if v was not
  // reached.
  BasicTensor<T> grad(Var v) const;

  // Reverse pass from a scalar root seeded with 1.
  void backward(Var root);
  // Reverse pass seeded with an explicit upstream gradient for root.
  void backward(Var root, const BasicTensor<T>& upstream);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    BasicTensor<T> value;
    BasicTensor<T> grad;
    bool requires_grad = false;
    std::function<void(Tape&, std::size_t)> backward;
  };

  Var push(BasicTensor<T> value, bool requires_grad,
           std::function<void(Tape&, std::size_t)> backward);
  const Node& node(Var v) const;
  BasicTensor<T>* grad_buffer(Var v);

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace glicnn::nn
