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

#include "glicnn/backbones.hpp"

#include <cmath>
#include <string>

#include "glicnn/errors.hpp"
#include "glicnn/parallel.hpp"

namespace glicnn::backbone {
namespace {

using nn::Conv3dGeometry;
using nn::Parameter;
using nn::Tensor;
using nn::Var;

constexpr Conv3dGeometry kSame{1, 1};
constexpr Conv3dGeometry kPointwise{1, 0};
constexpr Conv3dGeometry kStem{2, 1};

Parameter conv_weight(std::string name, std::size_t cout, std::size_t cin, std::size_t k,
                      std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(cin * k * k * k);
  std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / fan_in), std::sqrt(6.0 / fan_in));
  Tensor w({cout, cin, k, k, k});
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(dist(rng));
  return Parameter(std::move(name), std::move(w));
}

Parameter zero_bias(std::string name, std::size_t n) { return Parameter(std::move(name), Tensor({n})); }

Parameter dense_weight(std::string name, std::size_t out, std::size_t in, double gain,
                       std::mt19937_64& rng) {
  const double bound = std::sqrt(gain / static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w({out, in});
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(dist(rng));
  return Parameter(std::move(name), std::move(w));
}

void check_divisible(const Extent3& e, std::size_t by, const char* what) {
  if (e.d % by || e.h % by || e.w % by) {
    throw ConfigError(std::string(what) + " extents " + data::to_string(e) + " must be divisible by " +
                      std::to_string(by));
  }
}

}  // namespace

Backbone Backbone::dense_global(const BackboneConfig& c, std::mt19937_64& rng) {
  const std::size_t s = c.global_stem_channels, g = c.global_growth, t = c.global_transition_channels;
  if (!s || !g || !t) throw ConfigError("global backbone: channel widths must be positive");
  std::vector<Parameter> p;
  p.push_back(conv_weight("stem.w", s, 1, 3, rng));
  p.push_back(zero_bias("stem.b", s));
  p.push_back(conv_weight("block1.0.w", g, s, 3, rng));
  p.push_back(zero_bias("block1.0.b", g));
  p.push_back(conv_weight("block1.1.w", g, s + g, 3, rng));
  p.push_back(zero_bias("block1.1.b", g));
  p.push_back(conv_weight("transition.w", t, s + 2 * g, 1, rng));
  p.push_back(zero_bias("transition.b", t));
  p.push_back(conv_weight("block2.0.w", g, t, 3, rng));
  p.push_back(zero_bias("block2.0.b", g));
  p.push_back(conv_weight("block2.1.w", g, t + g, 3, rng));
  p.push_back(zero_bias("block2.1.b", g));
  p.push_back(conv_weight("project.w", 1, t + 2 * g, 1, rng));
  p.push_back(zero_bias("project.b", 1));
  return Backbone(BackboneKind::dense_global, std::move(p));
}

Backbone Backbone::vgg_local(const BackboneConfig& c, std::mt19937_64& rng) {
  const std::size_t c1 = c.local_channels1, c2 = c.local_channels2;
  if (!c1 || !c2) throw ConfigError("local backbone: channel widths must be positive");
  std::vector<Parameter> p;
  p.push_back(conv_weight("stage1.0.w", c1, 1, 3, rng));
  p.push_back(zero_bias("stage1.0.b", c1));
  p.push_back(conv_weight("stage1.1.w", c1, c1, 3, rng));
  p.push_back(zero_bias("stage1.1.b", c1));
  p.push_back(conv_weight("stage2.0.w", c2, c1, 3, rng));
  p.push_back(zero_bias("stage2.0.b", c2));
  p.push_back(conv_weight("stage2.1.w", c2, c2, 3, rng));
  p.push_back(zero_bias("stage2.1.b", c2));
  p.push_back(conv_weight("project.w", 1, c2, 1, rng));
  p.push_back(zero_bias("project.b", 1));
  return Backbone(BackboneKind::vgg_local, std::move(p));
}

Var Backbone::record(nn::Tape<float>& tape, Var input, std::vector<Var>& param_vars) const {
  const std::size_t first = param_vars.size();
  for (const auto& p : params_) param_vars.push_back(tape.param(p.value));
  const auto w = [&](std::size_t i) { return param_vars[first + i]; };
  const auto conv = [&](Var x, std::size_t layer, Conv3dGeometry geo) {
    return tape.conv3d(x, w(2 * layer), w(2 * layer + 1), geo);
  };

  if (kind_ == BackboneKind::dense_global) {
    Var x = tape.relu(conv(input, 0, kStem));
    x = tape.concat_channels(x, tape.relu(conv(x, 1, kSame)));
    x = tape.concat_channels(x, tape.relu(conv(x, 2, kSame)));
    x = tape.maxpool3d(tape.relu(conv(x, 3, kPointwise)), 2);
    x = tape.concat_channels(x, tape.relu(conv(x, 4, kSame)));
    x = tape.concat_channels(x, tape.relu(conv(x, 5, kSame)));
    return tape.global_avg_pool(conv(x, 6, kPointwise));
  }
  Var x = tape.relu(conv(input, 0, kSame));
  x = tape.maxpool3d(tape.relu(conv(x, 1, kSame)), 2);
  x = tape.relu(conv(x, 2, kSame));
  x = tape.maxpool3d(tape.relu(conv(x, 3, kSame)), 2);
  return tape.global_avg_pool(conv(x, 4, kPointwise));
}

float Backbone::forward(std::span<const float> voxels, Extent3 shape) const {
  nn::Tape<float> tape;
  std::vector<Var> vars;
  Tensor in({1, 1, shape.d, shape.h, shape.w}, std::vector<float>(voxels.begin(), voxels.end()));
  const Var out = record(tape, tape.input(std::move(in)), vars);
  return tape.value(out)[0];
}

BackboneSet::BackboneSet(PatchGrid grid, BackboneConfig config, std::uint64_t seed)
    : grid_(std::move(grid)), config_(config) {
  // stem stride 2 + one pool on the global path; two pools on the local path
  check_divisible(grid_.volume_shape(), 4, "volume");
  check_divisible(grid_.patch_shape(), 4, "patch");
  std::mt19937_64 grng(derive_seed(seed, 0));
  global_ = Backbone::dense_global(config_, grng);
  const std::size_t n = config_.share_local_weights ? 1 : grid_.size();
  locals_.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::mt19937_64 lrng(derive_seed(seed, j + 1));
    locals_.push_back(Backbone::vgg_local(config_, lrng));
  }
}

const Backbone& BackboneSet::local(std::size_t patch) const {
  if (patch >= grid_.size()) throw ShapeError("local backbone index out of range");
  return locals_[locals_.size() == 1 ? 0 : patch];
}

Backbone& BackboneSet::local(std::size_t patch) {
  if (patch >= grid_.size()) throw ShapeError("local backbone index out of range");
  return locals_[locals_.size() == 1 ? 0 : patch];
}

std::vector<Parameter*> BackboneSet::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : global_.parameters()) out.push_back(&p);
  for (auto& b : locals_)
    for (auto& p : b.parameters()) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> BackboneSet::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : global_.parameters()) out.push_back(&p);
  for (const auto& b : locals_)
    for (const auto& p : b.parameters()) out.push_back(&p);
  return out;
}

std::size_t BackboneSet::parameter_offset_of_local(std::size_t patch) const {
  if (patch >= grid_.size()) throw ShapeError("local backbone index out of range");
  const std::size_t slot = locals_.size() == 1 ? 0 : patch;
  std::size_t offset = global_.parameters().size();
  for (std::size_t j = 0; j < slot; ++j) offset += locals_[j].parameters().size();
  return offset;
}

void BackboneSet::copy_first_local_to_all() {
  for (std::size_t j = 1; j < locals_.size(); ++j) locals_[j] = locals_[0];
}

FeatureVector forward_features(const BackboneSet& model, const Volume& volume) {
  if (volume.shape != model.grid().volume_shape()) {
    throw ShapeError("forward_features: volume " + data::to_string(volume.shape) +
                     " does not match grid " + data::to_string(model.grid().volume_shape()));
  }
  FeatureVector fv;
  fv.subject_id = volume.subject_id;
  fv.values.resize(model.feature_count());
  fv.values[0] = model.global().forward(volume.voxels, volume.shape);
  const auto patches = extract_patches(volume, model.grid());
  for (std::size_t j = 0; j < patches.size(); ++j) {
    fv.values[j + 1] = model.local(j).forward(patches[j].voxels, patches[j].shape);
  }
  return fv;
}

FeatureTrace trace_features(const BackboneSet& model, const Volume& volume) {
  if (volume.shape != model.grid().volume_shape()) {
    throw ShapeError("trace_features: volume " + data::to_string(volume.shape) +
                     " does not match grid " + data::to_string(model.grid().volume_shape()));
  }
  FeatureTrace trace;
  for (const auto* p : model.parameters()) trace.param_shapes_.push_back(p->value.shape());
  trace.branches_.resize(model.feature_count());
  trace.features_.resize(model.feature_count());

  const auto run = [&](FeatureTrace::Branch& b, const Backbone& net, std::vector<float> voxels,
                       Extent3 shape) {
    Var in = b.tape.input(Tensor({1, 1, shape.d, shape.h, shape.w}, std::move(voxels)));
    b.output = net.record(b.tape, in, b.params);
    return static_cast<double>(b.tape.value(b.output)[0]);
  };
  trace.branches_[0].param_offset = 0;
  trace.features_[0] = run(trace.branches_[0], model.global(), volume.voxels, volume.shape);
  auto patches = extract_patches(volume, model.grid());
  for (std::size_t j = 0; j < patches.size(); ++j) {
    auto& b = trace.branches_[j + 1];
    b.param_offset = model.parameter_offset_of_local(j);
    trace.features_[j + 1] = run(b, model.local(j), std::move(patches[j].voxels), patches[j].shape);
  }
  return trace;
}

void FeatureTrace::backward(std::span<const double> feature_grads, std::vector<Tensor>& grads) {
  if (branches_.empty()) throw StateError("FeatureTrace::backward called on an empty trace");
  if (feature_grads.size() != branches_.size()) {
    throw ShapeError("FeatureTrace::backward: expected " + std::to_string(branches_.size()) +
                     " feature gradients, got " + std::to_string(feature_grads.size()));
  }
  if (grads.empty()) {
    for (const auto& s : param_shapes_) grads.emplace_back(s);
  } else if (grads.size() != param_shapes_.size()) {
    throw ShapeError("FeatureTrace::backward: gradient buffer count mismatch");
  }
  for (std::size_t j = 0; j < branches_.size(); ++j) {
    if (feature_grads[j] == 0.0) continue;
    Branch& b = branches_[j];
    b.tape.backward(b.output, Tensor({1, 1}, std::vector<float>{static_cast<float>(feature_grads[j])}));
    for (std::size_t i = 0; i < b.params.size(); ++i) {
      const Tensor g = b.tape.grad(b.params[i]);
      Tensor& acc = grads[b.param_offset + i];
      for (std::size_t e = 0; e < g.size(); ++e) acc[e] += g[e];
    }
  }
}

DenseHead::DenseHead(HeadKind kind, std::size_t inputs, std::size_t hidden, std::uint64_t seed)
    : kind_(kind), inputs_(inputs) {
  if (inputs == 0) throw ConfigError("dense head: input width must be positive");
  std::mt19937_64 rng(derive_seed(seed, 0x4EAD));
  if (kind == HeadKind::fully_connected) {
    if (hidden == 0) throw ConfigError("dense head: hidden width must be positive");
    params_.push_back(dense_weight("fc0.w", hidden, inputs, 6.0, rng));
    params_.push_back(zero_bias("fc0.b", hidden));
    params_.push_back(dense_weight("fc1.w", 1, hidden, 1.0, rng));
    params_.push_back(zero_bias("fc1.b", 1));
  } else {
    params_.push_back(dense_weight("linear.w", 1, inputs, 1.0, rng));
    params_.push_back(zero_bias("linear.b", 1));
  }
}

double DenseHead::forward(std::span<const double> features) const {
  if (features.size() != inputs_) {
    throw ShapeError("dense head expects " + std::to_string(inputs_) + " features, got " +
                     std::to_string(features.size()));
  }
  nn::Tape<float> tape;
  std::vector<Var> vars;
  Tensor x({1, inputs_});
  for (std::size_t i = 0; i < inputs_; ++i) x[i] = static_cast<float>(features[i]);
  const Var out = record(tape, tape.input(std::move(x)), vars);
  return tape.value(out)[0];
}

Var DenseHead::record(nn::Tape<float>& tape, Var features, std::vector<Var>& param_vars) const {
  const std::size_t first = param_vars.size();
  for (const auto& p : params_) param_vars.push_back(tape.param(p.value));
  const auto w = [&](std::size_t i) { return param_vars[first + i]; };
  if (kind_ == HeadKind::fully_connected) {
    const Var h = tape.relu(tape.dense(features, w(0), w(1)));
    return tape.dense(h, w(2), w(3));
  }
  return tape.dense(features, w(0), w(1));
}

double glcnn_forward(const BackboneSet& model, const DenseHead& head, const Volume& volume) {
  if (head.inputs() != model.feature_count()) {
    throw ShapeError("glcnn_forward: head expects " + std::to_string(head.inputs()) +
                     " features, backbones produce " + std::to_string(model.feature_count()));
  }
  const auto fv = forward_features(model, volume);
  return head.forward(fv.values);
}

}  // namespace glicnn::backbone
