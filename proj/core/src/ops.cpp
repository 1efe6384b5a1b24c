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

#include "glicnn/ops.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <string>

#include "glicnn/errors.hpp"

namespace glicnn::nn {
namespace {

struct ConvDims {
  std::size_t n, cin, cout, d, h, w, k, od, oh, ow;
  int stride, pad;
};

std::size_t conv_out_extent(std::size_t in, std::size_t k, int stride, int pad,
                            const char* axis) {
  const long span = static_cast<long>(in) + 2L * pad - static_cast<long>(k);
  if (span < 0) {
    throw ShapeError(std::string("conv3d: kernel ") + std::to_string(k) + " larger than padded " +
                     axis + " extent " + std::to_string(in + 2 * pad));
  }
  return static_cast<std::size_t>(span / stride + 1);
}

template <typename T>
ConvDims conv_dims(const BasicTensor<T>& input, const BasicTensor<T>& weight, std::size_t bias_size,
                   Conv3dGeometry g) {
  if (input.order() != 5) {
    throw ShapeError("conv3d: input must be [N,C,D,H,W], got " + shape_to_string(input.shape()));
  }
  if (weight.order() != 5) {
    throw ShapeError("conv3d: weight must be [Cout,Cin,k,k,k], got " +
                     shape_to_string(weight.shape()));
  }
  if (g.stride < 1 || g.padding < 0) throw ShapeError("conv3d: stride must be >= 1, padding >= 0");
  const std::size_t k = weight.dim(2);
  if (weight.dim(3) != k || weight.dim(4) != k || k % 2 == 0) {
    throw ShapeError("conv3d: kernel must be cubic with odd extent, got " +
                     shape_to_string(weight.shape()));
  }
  if (weight.dim(1) != input.dim(1)) {
    throw ShapeError("conv3d: weight expects " + std::to_string(weight.dim(1)) +
                     " input channels, input has " + std::to_string(input.dim(1)));
  }
  if (bias_size != weight.dim(0)) {
    throw ShapeError("conv3d: bias length " + std::to_string(bias_size) + " != Cout " +
                     std::to_string(weight.dim(0)));
  }
  ConvDims c{};
  c.n = input.dim(0);
  c.cin = input.dim(1);
  c.cout = weight.dim(0);
  c.d = input.dim(2);
  c.h = input.dim(3);
  c.w = input.dim(4);
  c.k = k;
  c.stride = g.stride;
  c.pad = g.padding;
  c.od = conv_out_extent(c.d, k, g.stride, g.padding, "depth");
  c.oh = conv_out_extent(c.h, k, g.stride, g.padding, "height");
  c.ow = conv_out_extent(c.w, k, g.stride, g.padding, "width");
  return c;
}

// Valid output range [lo, hi) along one axis for kernel tap `tap`.
void tap_range(std::size_t in, std::size_t out, std::size_t tap, int stride, int pad,
               std::size_t& lo, std::size_t& hi) {
  const long t = static_cast<long>(tap) - pad;
  long first = 0;
  if (t < 0) first = (-t + stride - 1) / stride;
  long last = (static_cast<long>(in) - 1 - t);
  last = last < 0 ? -1 : last / stride;
  lo = static_cast<std::size_t>(std::min<long>(first, static_cast<long>(out)));
  hi = static_cast<std::size_t>(std::clamp<long>(last + 1, static_cast<long>(lo),
                                                 static_cast<long>(out)));
}

template <typename T>
inline void axpy(T* __restrict y, const T* __restrict x, T a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// Fixed 8-lane accumulation; the summation order is the same on every call.
template <typename T>
inline T dot(const T* __restrict a, const T* __restrict b, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

// Stride-1 convolutions run on a zero-padded copy of each channel. The
// output is accumulated in "padded-plane" coordinates (od x hp x wp) so that
// for a fixed tap (kz,ky,kx) the whole channel update is one contiguous
// axpy at offset (kz*hp + ky)*wp + kx. Columns with oy >= oh or ox >= ow
// are scratch and discarded.
struct PaddedLayout {
  std::size_t dp, hp, wp;
  std::size_t plane_len;    // od * hp * wp
  std::size_t channel_len;  // padded input length per channel, with tail slack

  explicit PaddedLayout(const ConvDims& c) {
    dp = c.d + 2 * c.pad;
    hp = c.h + 2 * c.pad;
    wp = c.w + 2 * c.pad;
    plane_len = c.od * hp * wp;
    channel_len = (dp + 1) * hp * wp;
  }
  std::size_t offset(std::size_t kz, std::size_t ky, std::size_t kx) const {
    return (kz * hp + ky) * wp + kx;
  }
};

template <typename T>
void pad_channels(const T* src, std::size_t channels, const ConvDims& c, const PaddedLayout& L,
                  std::vector<T>& dst) {
  dst.assign(channels * L.channel_len, T{0});
  const std::size_t p = static_cast<std::size_t>(c.pad);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    const T* s = src + ch * c.d * c.h * c.w;
    T* t = dst.data() + ch * L.channel_len;
    for (std::size_t z = 0; z < c.d; ++z) {
      for (std::size_t y = 0; y < c.h; ++y) {
        std::memcpy(t + ((z + p) * L.hp + (y + p)) * L.wp + p, s + (z * c.h + y) * c.w,
                    c.w * sizeof(T));
      }
    }
  }
}

template <typename T>
void conv_forward_stride1(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                          const BasicTensor<T>& bias, const ConvDims& c, BasicTensor<T>& out) {
  const PaddedLayout L(c);
  const std::size_t k3 = c.k * c.k * c.k;
  const std::size_t out_sp = c.od * c.oh * c.ow;
  std::vector<T> padded;
  std::vector<T> acc(L.plane_len);
  for (std::size_t n = 0; n < c.n; ++n) {
    pad_channels(input.data() + n * c.cin * c.d * c.h * c.w, c.cin, c, L, padded);
    for (std::size_t co = 0; co < c.cout; ++co) {
      std::fill(acc.begin(), acc.end(), T{0});
      for (std::size_t ci = 0; ci < c.cin; ++ci) {
        const T* xp = padded.data() + ci * L.channel_len;
        const T* wk = weight.data() + (co * c.cin + ci) * k3;
        for (std::size_t kz = 0; kz < c.k; ++kz)
          for (std::size_t ky = 0; ky < c.k; ++ky)
            for (std::size_t kx = 0; kx < c.k; ++kx) {
              const T wv = wk[(kz * c.k + ky) * c.k + kx];
              if (wv == T{0}) continue;
              axpy(acc.data(), xp + L.offset(kz, ky, kx), wv, L.plane_len);
            }
      }
      T* o = out.data() + (n * c.cout + co) * out_sp;
      const T b = bias[co];
      for (std::size_t z = 0; z < c.od; ++z)
        for (std::size_t y = 0; y < c.oh; ++y) {
          const T* a = acc.data() + (z * L.hp + y) * L.wp;
          T* orow = o + (z * c.oh + y) * c.ow;
          for (std::size_t x = 0; x < c.ow; ++x) orow[x] = a[x] + b;
        }
    }
  }
}

template <typename T>
void conv_backward_stride1(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                           const BasicTensor<T>& grad_output, const ConvDims& c,
                           BasicTensor<T>* grad_input, BasicTensor<T>* grad_weight) {
  const PaddedLayout L(c);
  const std::size_t k3 = c.k * c.k * c.k;
  const std::size_t in_sp = c.d * c.h * c.w;
  const std::size_t out_sp = c.od * c.oh * c.ow;
  const std::size_t p = static_cast<std::size_t>(c.pad);
  std::vector<T> padded;
  std::vector<T> gpad;
  std::vector<T> gplane(L.plane_len);
  for (std::size_t n = 0; n < c.n; ++n) {
    if (grad_weight) pad_channels(input.data() + n * c.cin * in_sp, c.cin, c, L, padded);
    if (grad_input) gpad.assign(c.cin * L.channel_len, T{0});
    for (std::size_t co = 0; co < c.cout; ++co) {
      // Scatter grad_output into padded-plane coordinates; scratch columns stay zero.
      std::fill(gplane.begin(), gplane.end(), T{0});
      const T* go = grad_output.data() + (n * c.cout + co) * out_sp;
      for (std::size_t z = 0; z < c.od; ++z)
        for (std::size_t y = 0; y < c.oh; ++y)
          std::memcpy(gplane.data() + (z * L.hp + y) * L.wp, go + (z * c.oh + y) * c.ow,
                      c.ow * sizeof(T));
      for (std::size_t ci = 0; ci < c.cin; ++ci) {
        const std::size_t wbase = (co * c.cin + ci) * k3;
        for (std::size_t kz = 0; kz < c.k; ++kz)
          for (std::size_t ky = 0; ky < c.k; ++ky)
            for (std::size_t kx = 0; kx < c.k; ++kx) {
              const std::size_t tap = (kz * c.k + ky) * c.k + kx;
              const std::size_t off = L.offset(kz, ky, kx);
              if (grad_weight) {
                (*grad_weight)[wbase + tap] +=
                    dot(gplane.data(), padded.data() + ci * L.channel_len + off, L.plane_len);
              }
              if (grad_input) {
                axpy(gpad.data() + ci * L.channel_len + off, gplane.data(),
                     weight[wbase + tap], L.plane_len);
              }
            }
      }
    }
    if (grad_input) {
      for (std::size_t ci = 0; ci < c.cin; ++ci) {
        const T* s = gpad.data() + ci * L.channel_len;
        T* g = grad_input->data() + (n * c.cin + ci) * in_sp;
        for (std::size_t z = 0; z < c.d; ++z)
          for (std::size_t y = 0; y < c.h; ++y) {
            const T* srow = s + ((z + p) * L.hp + (y + p)) * L.wp + p;
            T* grow = g + (z * c.h + y) * c.w;
            for (std::size_t x = 0; x < c.w; ++x) grow[x] += srow[x];
          }
      }
    }
  }
}

// Direct loops for strided convolutions.
template <typename T>
void conv_forward_generic(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                          const BasicTensor<T>& bias, const ConvDims& c, BasicTensor<T>& out) {
  const std::size_t k3 = c.k * c.k * c.k;
  const std::size_t in_sp = c.d * c.h * c.w;
  const std::size_t out_sp = c.od * c.oh * c.ow;
  const std::size_t s = static_cast<std::size_t>(c.stride);
  for (std::size_t n = 0; n < c.n; ++n)
    for (std::size_t co = 0; co < c.cout; ++co) {
      T* o = out.data() + (n * c.cout + co) * out_sp;
      std::fill(o, o + out_sp, bias[co]);
      for (std::size_t ci = 0; ci < c.cin; ++ci) {
        const T* x = input.data() + (n * c.cin + ci) * in_sp;
        const T* wk = weight.data() + (co * c.cin + ci) * k3;
        for (std::size_t kz = 0; kz < c.k; ++kz) {
          std::size_t z0, z1;
          tap_range(c.d, c.od, kz, c.stride, c.pad, z0, z1);
          for (std::size_t ky = 0; ky < c.k; ++ky) {
            std::size_t y0, y1;
            tap_range(c.h, c.oh, ky, c.stride, c.pad, y0, y1);
            for (std::size_t kx = 0; kx < c.k; ++kx) {
              std::size_t x0, x1;
              tap_range(c.w, c.ow, kx, c.stride, c.pad, x0, x1);
              const T wv = wk[(kz * c.k + ky) * c.k + kx];
              for (std::size_t oz = z0; oz < z1; ++oz) {
                const std::size_t iz = oz * s + kz - c.pad;
                for (std::size_t oy = y0; oy < y1; ++oy) {
                  const std::size_t iy = oy * s + ky - c.pad;
                  const T* xrow = x + (iz * c.h + iy) * c.w;
                  T* orow = o + (oz * c.oh + oy) * c.ow;
                  for (std::size_t ox = x0; ox < x1; ++ox) orow[ox] += wv * xrow[ox * s + kx - c.pad];
                }
              }
            }
          }
        }
      }
    }
}

template <typename T>
void conv_backward_generic(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                           const BasicTensor<T>& grad_output, const ConvDims& c,
                           BasicTensor<T>* grad_input, BasicTensor<T>* grad_weight) {
  const std::size_t k3 = c.k * c.k * c.k;
  const std::size_t in_sp = c.d * c.h * c.w;
  const std::size_t out_sp = c.od * c.oh * c.ow;
  const std::size_t s = static_cast<std::size_t>(c.stride);
  for (std::size_t n = 0; n < c.n; ++n)
    for (std::size_t co = 0; co < c.cout; ++co) {
      const T* go = grad_output.data() + (n * c.cout + co) * out_sp;
      for (std::size_t ci = 0; ci < c.cin; ++ci) {
        const T* x = input.data() + (n * c.cin + ci) * in_sp;
        T* gx = grad_input ? grad_input->data() + (n * c.cin + ci) * in_sp : nullptr;
        const std::size_t wbase = (co * c.cin + ci) * k3;
        for (std::size_t kz = 0; kz < c.k; ++kz) {
          std::size_t z0, z1;
          tap_range(c.d, c.od, kz, c.stride, c.pad, z0, z1);
          for (std::size_t ky = 0; ky < c.k; ++ky) {
            std::size_t y0, y1;
            tap_range(c.h, c.oh, ky, c.stride, c.pad, y0, y1);
            for (std::size_t kx = 0; kx < c.k; ++kx) {
              std::size_t x0, x1;
              tap_range(c.w, c.ow, kx, c.stride, c.pad, x0, x1);
              const std::size_t tap = (kz * c.k + ky) * c.k + kx;
              const T wv = weight[wbase + tap];
              T gw = 0;
              for (std::size_t oz = z0; oz < z1; ++oz) {
                const std::size_t iz = oz * s + kz - c.pad;
                for (std::size_t oy = y0; oy < y1; ++oy) {
                  const std::size_t iy = oy * s + ky - c.pad;
                  const std::size_t irow = (iz * c.h + iy) * c.w;
                  const T* grow = go + (oz * c.oh + oy) * c.ow;
                  for (std::size_t ox = x0; ox < x1; ++ox) {
                    const std::size_t ix = irow + ox * s + kx - c.pad;
                    gw += grow[ox] * x[ix];
                    if (gx) gx[ix] += wv * grow[ox];
                  }
                }
              }
              if (grad_weight) (*grad_weight)[wbase + tap] += gw;
            }
          }
        }
      }
    }
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": expected shape " + shape_to_string(a) + ", got " +
                     shape_to_string(b));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv3d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                              const BasicTensor<T>& bias, Conv3dGeometry geometry) {
  const ConvDims c = conv_dims(input, weight, bias.size(), geometry);
  BasicTensor<T> out({c.n, c.cout, c.od, c.oh, c.ow});
  if (c.stride == 1) {
    conv_forward_stride1(input, weight, bias, c, out);
  } else {
    conv_forward_generic(input, weight, bias, c, out);
  }
  return out;
}

template <typename T>
void conv3d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                     const BasicTensor<T>& grad_output, Conv3dGeometry geometry,
                     BasicTensor<T>* grad_input, BasicTensor<T>* grad_weight,
                     BasicTensor<T>* grad_bias) {
  const ConvDims c = conv_dims(input, weight, weight.dim(0), geometry);
  require_same_shape({c.n, c.cout, c.od, c.oh, c.ow}, grad_output.shape(), "conv3d grad_output");
  if (grad_input) require_same_shape(input.shape(), grad_input->shape(), "conv3d grad_input");
  if (grad_weight) require_same_shape(weight.shape(), grad_weight->shape(), "conv3d grad_weight");
  if (grad_bias) {
    if (grad_bias->size() != c.cout) throw ShapeError("conv3d grad_bias: length mismatch");
    const std::size_t out_sp = c.od * c.oh * c.ow;
    for (std::size_t n = 0; n < c.n; ++n)
      for (std::size_t co = 0; co < c.cout; ++co) {
        const T* go = grad_output.data() + (n * c.cout + co) * out_sp;
        T s = 0;
        for (std::size_t i = 0; i < out_sp; ++i) s += go[i];
        (*grad_bias)[co] += s;
      }
  }
  if (!grad_input && !grad_weight) return;
  if (c.stride == 1) {
    conv_backward_stride1(input, weight, grad_output, c, grad_input, grad_weight);
  } else {
    conv_backward_generic(input, weight, grad_output, c, grad_input, grad_weight);
  }
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T{0} ? input[i] : T{0};
  return out;
}

template <typename T>
void relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_output,
                   BasicTensor<T>& grad_input) {
  require_same_shape(input.shape(), grad_output.shape(), "relu grad_output");
  require_same_shape(input.shape(), grad_input.shape(), "relu grad_input");
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (input[i] > T{0}) grad_input[i] += grad_output[i];
  }
}

template <typename T>
BasicTensor<T> maxpool3d_forward(const BasicTensor<T>& input, int window,
                                 std::vector<std::size_t>* argmax) {
  if (input.order() != 5) {
    throw ShapeError("maxpool3d: input must be [N,C,D,H,W], got " + shape_to_string(input.shape()));
  }
  if (window < 1) throw ShapeError("maxpool3d: window must be >= 1");
  const std::size_t k = static_cast<std::size_t>(window);
  const std::size_t n = input.dim(0), ch = input.dim(1);
  const std::size_t d = input.dim(2), h = input.dim(3), w = input.dim(4);
  if (d % k || h % k || w % k) {
    throw ShapeError("maxpool3d: extents " + shape_to_string(input.shape()) +
                     " not divisible by window " + std::to_string(window));
  }
  const std::size_t od = d / k, oh = h / k, ow = w / k;
  BasicTensor<T> out({n, ch, od, oh, ow});
  if (argmax) argmax->assign(out.size(), 0);
  std::size_t o = 0;
  for (std::size_t nc = 0; nc < n * ch; ++nc) {
    const std::size_t base = nc * d * h * w;
    for (std::size_t z = 0; z < od; ++z)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_idx = base + ((z * k) * h + y * k) * w + x * k;
          for (std::size_t dz = 0; dz < k; ++dz)
            for (std::size_t dy = 0; dy < k; ++dy)
              for (std::size_t dx = 0; dx < k; ++dx) {
                const std::size_t idx = base + ((z * k + dz) * h + (y * k + dy)) * w + x * k + dx;
                if (input[idx] > best) {
                  best = input[idx];
                  best_idx = idx;
                }
              }
          out[o] = best;
          if (argmax) (*argmax)[o] = best_idx;
        }
  }
  return out;
}

template <typename T>
void maxpool3d_backward(const std::vector<std::size_t>& argmax, const BasicTensor<T>& grad_output,
                        BasicTensor<T>& grad_input) {
  if (argmax.size() != grad_output.size()) throw ShapeError("maxpool3d backward: argmax mismatch");
  for (std::size_t i = 0; i < argmax.size(); ++i) grad_input[argmax[i]] += grad_output[i];
}

template <typename T>
BasicTensor<T> global_avg_pool_forward(const BasicTensor<T>& input) {
  if (input.order() < 3) {
    throw ShapeError("global_avg_pool: input must be [N,C,...], got " +
                     shape_to_string(input.shape()));
  }
  const std::size_t n = input.dim(0), ch = input.dim(1);
  const std::size_t sp = input.size() / (n * ch);
  BasicTensor<T> out({n, ch});
  for (std::size_t i = 0; i < n * ch; ++i) {
    const T* p = input.data() + i * sp;
    T s = 0;
    for (std::size_t j = 0; j < sp; ++j) s += p[j];
    out[i] = s / static_cast<T>(sp);
  }
  return out;
}

template <typename T>
void global_avg_pool_backward(const Shape& input_shape, const BasicTensor<T>& grad_output,
                              BasicTensor<T>& grad_input) {
  require_same_shape(input_shape, grad_input.shape(), "global_avg_pool grad_input");
  const std::size_t nc = input_shape.at(0) * input_shape.at(1);
  if (grad_output.size() != nc) throw ShapeError("global_avg_pool grad_output: length mismatch");
  const std::size_t sp = grad_input.size() / nc;
  for (std::size_t i = 0; i < nc; ++i) {
    const T g = grad_output[i] / static_cast<T>(sp);
    T* p = grad_input.data() + i * sp;
    for (std::size_t j = 0; j < sp; ++j) p[j] += g;
  }
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias) {
  if (input.order() != 2 || weight.order() != 2) {
    throw ShapeError("dense: expected input [N,In] and weight [Out,In], got " +
                     shape_to_string(input.shape()) + " and " + shape_to_string(weight.shape()));
  }
  const std::size_t n = input.dim(0), in = input.dim(1), out_dim = weight.dim(0);
  if (weight.dim(1) != in) {
    throw ShapeError("dense: weight expects " + std::to_string(weight.dim(1)) +
                     " inputs, got " + std::to_string(in));
  }
  if (bias.size() != out_dim) throw ShapeError("dense: bias length mismatch");
  BasicTensor<T> out({n, out_dim});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < out_dim; ++o) {
      T s = bias[o];
      for (std::size_t i = 0; i < in; ++i) s += weight[o * in + i] * input[r * in + i];
      out[r * out_dim + o] = s;
    }
  return out;
}

template <typename T>
void dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                    const BasicTensor<T>& grad_output, BasicTensor<T>* grad_input,
                    BasicTensor<T>* grad_weight, BasicTensor<T>* grad_bias) {
  const std::size_t n = input.dim(0), in = input.dim(1), out_dim = weight.dim(0);
  require_same_shape({n, out_dim}, grad_output.shape(), "dense grad_output");
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < out_dim; ++o) {
      const T g = grad_output[r * out_dim + o];
      if (grad_bias) (*grad_bias)[o] += g;
      for (std::size_t i = 0; i < in; ++i) {
        if (grad_weight) (*grad_weight)[o * in + i] += g * input[r * in + i];
        if (grad_input) (*grad_input)[r * in + i] += g * weight[o * in + i];
      }
    }
}

template <typename T>
BasicTensor<T> concat_channels_forward(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.order() < 2 || a.order() != b.order() || a.dim(0) != b.dim(0)) {
    throw ShapeError("concat: incompatible shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  for (std::size_t ax = 2; ax < a.order(); ++ax) {
    if (a.dim(ax) != b.dim(ax)) {
      throw ShapeError("concat: spatial extents differ: " + shape_to_string(a.shape()) + " vs " +
                       shape_to_string(b.shape()));
    }
  }
  Shape shape = a.shape();
  shape[1] = a.dim(1) + b.dim(1);
  BasicTensor<T> out(shape);
  const std::size_t n = a.dim(0);
  const std::size_t la = a.size() / n, lb = b.size() / n;
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(a.data() + r * la, la, out.data() + r * (la + lb));
    std::copy_n(b.data() + r * lb, lb, out.data() + r * (la + lb) + la);
  }
  return out;
}

template <typename T>
void concat_channels_backward(const BasicTensor<T>& grad_output, BasicTensor<T>* grad_a,
                              BasicTensor<T>* grad_b) {
  if (!grad_a || !grad_b) throw ShapeError("concat backward: both gradient buffers are required");
  const std::size_t n = grad_output.dim(0);
  const std::size_t la = grad_a->size() / n, lb = grad_b->size() / n;
  if ((la + lb) * n != grad_output.size()) throw ShapeError("concat backward: length mismatch");
  for (std::size_t r = 0; r < n; ++r) {
    const T* g = grad_output.data() + r * (la + lb);
    T* ga = grad_a->data() + r * la;
    T* gb = grad_b->data() + r * lb;
    for (std::size_t i = 0; i < la; ++i) ga[i] += g[i];
    for (std::size_t i = 0; i < lb; ++i) gb[i] += g[la + i];
  }
}

#define GLICNN_INSTANTIATE_OPS(T)                                                               \
  template BasicTensor<T> conv3d_forward(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                         const BasicTensor<T>&, Conv3dGeometry);                \
  template void conv3d_backward(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                const BasicTensor<T>&, Conv3dGeometry, BasicTensor<T>*,         \
                                BasicTensor<T>*, BasicTensor<T>*);                              \
  template BasicTensor<T> relu_forward(const BasicTensor<T>&);                                  \
  template void relu_backward(const BasicTensor<T>&, const BasicTensor<T>&, BasicTensor<T>&);   \
  template BasicTensor<T> maxpool3d_forward(const BasicTensor<T>&, int,                         \
                                            std::vector<std::size_t>*);                         \
  template void maxpool3d_backward(const std::vector<std::size_t>&, const BasicTensor<T>&,      \
                                   BasicTensor<T>&);                                            \
  template BasicTensor<T> global_avg_pool_forward(const BasicTensor<T>&);                       \
  template void global_avg_pool_backward(const Shape&, const BasicTensor<T>&, BasicTensor<T>&); \
  template BasicTensor<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                        const BasicTensor<T>&);                                 \
  template void dense_backward(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                               const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*,         \
                               BasicTensor<T>*);                                                \
  template BasicTensor<T> concat_channels_forward(const BasicTensor<T>&, const BasicTensor<T>&); \
  template void concat_channels_backward(const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*);

GLICNN_INSTANTIATE_OPS(float)
GLICNN_INSTANTIATE_OPS(double)

#undef GLICNN_INSTANTIATE_OPS

}  // namespace glicnn::nn
