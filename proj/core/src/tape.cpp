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

#include "glicnn/tape.hpp"

#include <memory>
#include <string>

#include "glicnn/errors.hpp"

namespace glicnn::nn {

template <typename T>
Var Tape<T>::push(BasicTensor<T> value, bool requires_grad,
                  std::function<void(Tape&, std::size_t)> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (!v.valid() || v.index >= nodes_.size()) {
    throw StateError("tape: variable " + std::to_string(v.index) + " was not recorded on this tape");
  }
  return nodes_[v.index];
}

template <typename T>
BasicTensor<T>* Tape<T>::grad_buffer(Var v) {
  Node& n = nodes_[v.index];
  if (!n.requires_grad) return nullptr;
  if (n.grad.shape() != n.value.shape()) n.grad = BasicTensor<T>(n.value.shape());
  return &n.grad;
}

template <typename T>
Var Tape<T>::input(BasicTensor<T> value) {
  return push(std::move(value), false, nullptr);
}

template <typename T>
Var Tape<T>::param(BasicTensor<T> value) {
  return push(std::move(value), true, nullptr);
}

template <typename T>
Var Tape<T>::conv3d(Var x, Var weight, Var bias, Conv3dGeometry geometry) {
  const bool rg = node(x).requires_grad || node(weight).requires_grad || node(bias).requires_grad;
  auto out = conv3d_forward(node(x).value, node(weight).value, node(bias).value, geometry);
  return push(std::move(out), rg, [x, weight, bias, geometry](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    conv3d_backward(t.nodes_[x.index].value, t.nodes_[weight.index].value, g, geometry,
                    t.grad_buffer(x), t.grad_buffer(weight), t.grad_buffer(bias));
  });
}

template <typename T>
Var Tape<T>::relu(Var x) {
  auto out = relu_forward(node(x).value);
  return push(std::move(out), node(x).requires_grad, [x](Tape& t, std::size_t self) {
    if (auto* gx = t.grad_buffer(x)) relu_backward(t.nodes_[x.index].value, t.nodes_[self].grad, *gx);
  });
}

template <typename T>
Var Tape<T>::maxpool3d(Var x, int window) {
  auto argmax = std::make_shared<std::vector<std::size_t>>();
  auto out = maxpool3d_forward(node(x).value, window, argmax.get());
  return push(std::move(out), node(x).requires_grad, [x, argmax](Tape& t, std::size_t self) {
    if (auto* gx = t.grad_buffer(x)) maxpool3d_backward(*argmax, t.nodes_[self].grad, *gx);
  });
}

template <typename T>
Var Tape<T>::global_avg_pool(Var x) {
  auto out = global_avg_pool_forward(node(x).value);
  return push(std::move(out), node(x).requires_grad, [x](Tape& t, std::size_t self) {
    if (auto* gx = t.grad_buffer(x)) {
      global_avg_pool_backward(t.nodes_[x.index].value.shape(), t.nodes_[self].grad, *gx);
    }
  });
}

template <typename T>
Var Tape<T>::dense(Var x, Var weight, Var bias) {
  const bool rg = node(x).requires_grad || node(weight).requires_grad || node(bias).requires_grad;
  auto out = dense_forward(node(x).value, node(weight).value, node(bias).value);
  return push(std::move(out), rg, [x, weight, bias](Tape& t, std::size_t self) {
    dense_backward(t.nodes_[x.index].value, t.nodes_[weight.index].value, t.nodes_[self].grad,
                   t.grad_buffer(x), t.grad_buffer(weight), t.grad_buffer(bias));
  });
}

template <typename T>
Var Tape<T>::concat_channels(Var a, Var b) {
  const bool rg = node(a).requires_grad || node(b).requires_grad;
  auto out = concat_channels_forward(node(a).value, node(b).value);
  return push(std::move(out), rg, [a, b](Tape& t, std::size_t self) {
    BasicTensor<T> scratch_a, scratch_b;
    BasicTensor<T>* ga = t.grad_buffer(a);
    BasicTensor<T>* gb = t.grad_buffer(b);
    if (!ga) {
      scratch_a = BasicTensor<T>(t.nodes_[a.index].value.shape());
      ga = &scratch_a;
    }
    if (!gb) {
      scratch_b = BasicTensor<T>(t.nodes_[b.index].value.shape());
      gb = &scratch_b;
    }
    concat_channels_backward(t.nodes_[self].grad, ga, gb);
  });
}

template <typename T>
Var Tape<T>::dot(Var x, BasicTensor<T> coefficients) {
  const auto& xv = node(x).value;
  if (coefficients.shape() != xv.shape()) {
    throw ShapeError("dot: coefficient shape " + shape_to_string(coefficients.shape()) +
                     " != " + shape_to_string(xv.shape()));
  }
  T s = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * coefficients[i];
  auto coeff = std::make_shared<BasicTensor<T>>(std::move(coefficients));
  return push(BasicTensor<T>({1}, std::vector<T>{s}), node(x).requires_grad,
              [x, coeff](Tape& t, std::size_t self) {
                if (auto* gx = t.grad_buffer(x)) {
                  const T g = t.nodes_[self].grad[0];
                  for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += g * (*coeff)[i];
                }
              });
}

template <typename T>
Var Tape<T>::weighted_cross_entropy(Var logits, std::vector<int> labels, ClassWeights weights) {
  const auto& lv = node(logits).value;
  if (lv.size() != labels.size()) {
    throw ShapeError("weighted_cross_entropy: " + std::to_string(lv.size()) + " logits vs " +
                     std::to_string(labels.size()) + " labels");
  }
  std::vector<double> z(lv.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = static_cast<double>(lv[i]);
  const double loss = nn::weighted_cross_entropy(z, labels, weights);
  auto lab = std::make_shared<std::vector<int>>(std::move(labels));
  return push(BasicTensor<T>({1}, std::vector<T>{static_cast<T>(loss)}),
              node(logits).requires_grad, [logits, lab, weights](Tape& t, std::size_t self) {
                auto* gx = t.grad_buffer(logits);
                if (!gx) return;
                const auto& lv = t.nodes_[logits.index].value;
                const double g = static_cast<double>(t.nodes_[self].grad[0]);
                const double inv_n = 1.0 / static_cast<double>(lv.size());
                for (std::size_t i = 0; i < lv.size(); ++i) {
                  (*gx)[i] += static_cast<T>(
                      g * inv_n *
                      weighted_cross_entropy_grad(static_cast<double>(lv[i]), (*lab)[i], weights));
                }
              });
}

template <typename T>
const BasicTensor<T>& Tape<T>::value(Var v) const {
  return node(v).value;
}

template <typename T>
BasicTensor<T> Tape<T>::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.shape() == n.value.shape()) return n.grad;
  return BasicTensor<T>(n.value.shape());
}

template <typename T>
void Tape<T>::backward(Var root) {
  if (nodes_.empty()) throw StateError("backward called before any forward pass was recorded");
  const Node& r = node(root);
  if (r.value.size() != 1) {
    throw ShapeError("backward: root must be a scalar, got " + shape_to_string(r.value.shape()));
  }
  backward(root, BasicTensor<T>(r.value.shape(), T{1}));
}

template <typename T>
void Tape<T>::backward(Var root, const BasicTensor<T>& upstream) {
  if (nodes_.empty()) throw StateError("backward called before any forward pass was recorded");
  const Node& r = node(root);
  if (upstream.shape() != r.value.shape()) {
    throw ShapeError("backward: upstream shape " + shape_to_string(upstream.shape()) +
                     " != root shape " + shape_to_string(r.value.shape()));
  }
  for (auto& n : nodes_) n.grad = BasicTensor<T>();
  if (!r.requires_grad) return;
  nodes_[root.index].grad = upstream;
  for (std::size_t i = root.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.shape() != n.value.shape()) continue;
    n.backward(*this, i);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace glicnn::nn
