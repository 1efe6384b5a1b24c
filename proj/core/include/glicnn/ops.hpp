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
#include <vector>

#include "glicnn/tensor.hpp"

namespace glicnn::nn {

// Kernels for the fixed op set used by the backbones. Every forward has a
// matching backward that accumulates (+=) into the provided gradient
// buffers; null buffers are skipped.

struct Conv3dGeometry {
  int stride = 1;
  int padding = 0;
};

// Cross-correlation (no kernel flip).
// input [N,Cin,D,H,W], weight [Cout,Cin,k,k,k], bias [Cout] -> [N,Cout,D',H',W']
// with D' = (D + 2*padding - k)/stride + 1. k must be odd.
template <typename T>
BasicTensor<T> conv3d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                              const BasicTensor<T>& bias, Conv3dGeometry geometry);

template <typename T>
void conv3d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                     const BasicTensor<T>& grad_output, Conv3dGeometry geometry,
                     BasicTensor<T>* grad_input, BasicTensor<T>* grad_weight,
                     BasicTensor<T>* grad_bias);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);

template <typename T>
void relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_output,
                   BasicTensor<T>& grad_input);

// Non-overlapping max pooling with window = stride = `window`. Extents must
// be divisible by the window. `argmax` receives the flat input index chosen
// for each output element (first maximum wins).
template <typename T>
BasicTensor<T> maxpool3d_forward(const BasicTensor<T>& input, int window,
                                 std::vector<std::size_t>* argmax);

template <typename T>
void maxpool3d_backward(const std::vector<std::size_t>& argmax, const BasicTensor<T>& grad_output,
                        BasicTensor<T>& grad_input);

// [N,C,D,H,W] -> [N,C]
template <typename T>
BasicTensor<T> global_avg_pool_forward(const BasicTensor<T>& input);

template <typename T>
void global_avg_pool_backward(const Shape& input_shape, const BasicTensor<T>& grad_output,
                              BasicTensor<T>& grad_input);

// input [N,In], weight [Out,In], bias [Out] -> [N,Out]
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias);

template <typename T>
void dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                    const BasicTensor<T>& grad_output, BasicTensor<T>* grad_input,
                    BasicTensor<T>* grad_weight, BasicTensor<T>* grad_bias);

// Concatenation along the channel axis (axis 1) of two tensors that agree
// on every other extent.
template <typename T>
BasicTensor<T> concat_channels_forward(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
void concat_channels_backward(const BasicTensor<T>& grad_output, BasicTensor<T>* grad_a,
                              BasicTensor<T>* grad_b);

}  // namespace glicnn::nn
