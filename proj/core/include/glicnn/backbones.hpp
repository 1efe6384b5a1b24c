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
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "glicnn/patch_grid.hpp"
#include "glicnn/tape.hpp"
#include "glicnn/tensor.hpp"

namespace glicnn::backbone {

// Desk-scale stand-ins for the DenseNet global and VGG local backbones.
//
// global: conv3 stride 2 (stem) -> dense block [2 x conv3, concat]
//         -> 1x1 transition + maxpool 2 -> dense block [2 x conv3, concat]
//         -> 1x1 projection to one channel -> global average pool
// local:  [conv3-ReLU-conv3-ReLU-maxpool 2] x 2 -> 1x1 projection -> GAP
//
// Every backbone reduces its input to exactly one scalar feature.
struct BackboneConfig {
  std::size_t global_stem_channels = 8;
  std::size_t global_growth = 4;
  std::size_t global_transition_channels = 8;
  std::size_t local_channels1 = 8;
  std::size_t local_channels2 = 16;
  // One local backbone reused for every patch instead of P independent ones.
  bool share_local_weights = false;
  // Hidden width of the GL-CNN fully connected output block.
  std::size_t fc_hidden = 16;
};

enum class BackboneKind { dense_global, vgg_local };

class Backbone {
 public:
  Backbone() = default;

  static Backbone dense_global(const BackboneConfig& config, std::mt19937_64& rng);
  static Backbone vgg_local(const BackboneConfig& config, std::mt19937_64& rng);

  BackboneKind kind() const noexcept { return kind_; }
  std::vector<nn::Parameter>& parameters() noexcept { return params_; }
  const std::vector<nn::Parameter>& parameters() const noexcept { return params_; }

  // Registers the parameters on the tape (appended to param_vars, in
  // parameters() order) and records the forward pass of a [1,1,D,H,W]
  // input. Returns the [1,1] feature.
  nn::Var record(nn::Tape<float>& tape, nn::Var input, std::vector<nn::Var>& param_vars) const;

  // Feature for one single-channel volume (no gradient tracking).
  float forward(std::span<const float> voxels, Extent3 shape) const;

 private:
  Backbone(BackboneKind kind, std::vector<nn::Parameter> params)
      : kind_(kind), params_(std::move(params)) {}

  BackboneKind kind_ = BackboneKind::dense_global;
  std::vector<nn::Parameter> params_;
};

// Out_CNN for one subject: x_1 from the global backbone, x_{j+1} from the
// local backbone of patch j.
struct FeatureVector {
  std::string subject_id;
  std::vector<double> values;
};

class BackboneSet {
 public:
  BackboneSet() = default;
  // Weights are He-uniform initialised from the seed; biases start at zero.
  BackboneSet(PatchGrid grid, BackboneConfig config, std::uint64_t seed);

  const PatchGrid& grid() const noexcept { return grid_; }
  PatchGrid& grid() noexcept { return grid_; }
  const BackboneConfig& config() const noexcept { return config_; }
  std::size_t feature_count() const noexcept { return grid_.size() + 1; }

  const Backbone& global() const noexcept { return global_; }
  Backbone& global() noexcept { return global_; }
  // Backbone applied to patch j.
  const Backbone& local(std::size_t patch) const;
  Backbone& local(std::size_t patch);
  std::size_t distinct_local_count() const noexcept { return locals_.size(); }

  // Flat view in a fixed order: global, then each distinct local backbone.
  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  // Offset of a backbone's first tensor within parameters(); 0 is global.
  std::size_t parameter_offset_of_local(std::size_t patch) const;

  // Overwrites every local backbone with a copy of local(0).
  void copy_first_local_to_all();

 private:
  PatchGrid grid_;
  BackboneConfig config_;
  Backbone global_;
  std::vector<Backbone> locals_;
};

FeatureVector forward_features(const BackboneSet& model, const Volume& volume);

// Recorded forward pass of all k backbones for one subject, kept for the
// backward pass. One tape per backbone.
class FeatureTrace {
 public:
  const std::vector<double>& features() const noexcept { return features_; }

  // Adds sum_j feature_grads[j] * d x_j / d theta into grads, which is laid
  // out like BackboneSet::parameters(). grads is resized on first use.
  void backward(std::span<const double> feature_grads, std::vector<nn::Tensor>& grads);

 private:
  friend FeatureTrace trace_features(const BackboneSet& model, const Volume& volume);

  struct Branch {
    nn::Tape<float> tape;
    nn::Var output;
    std::vector<nn::Var> params;
    std::size_t param_offset = 0;
  };
  std::vector<Branch> branches_;
  std::vector<double> features_;
  std::vector<nn::Shape> param_shapes_;
};

FeatureTrace trace_features(const BackboneSet& model, const Volume& volume);

// Output blocks on top of the k features: the GL-CNN fully connected block
// (k -> hidden -> ReLU -> 1) or the GL-ICNN-L single linear layer (k -> 1).
enum class HeadKind { fully_connected, linear };

class DenseHead {
 public:
  DenseHead() = default;
  DenseHead(HeadKind kind, std::size_t inputs, std::size_t hidden, std::uint64_t seed);

  HeadKind kind() const noexcept { return kind_; }
  std::size_t inputs() const noexcept { return inputs_; }
  std::vector<nn::Parameter>& parameters() noexcept { return params_; }
  const std::vector<nn::Parameter>& parameters() const noexcept { return params_; }

  double forward(std::span<const double> features) const;
  // features is a [1,k] tape variable; returns the [1,1] logit.
  nn::Var record(nn::Tape<float>& tape, nn::Var features, std::vector<nn::Var>& param_vars) const;

 private:
  HeadKind kind_ = HeadKind::linear;
  std::size_t inputs_ = 0;
  std::vector<nn::Parameter> params_;
};

// Black-box GL-CNN logit for one volume.
double glcnn_forward(const BackboneSet& model, const DenseHead& head, const Volume& volume);

}  // namespace glicnn::backbone
