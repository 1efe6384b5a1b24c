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
#include <filesystem>
#include <vector>

#include "glicnn/manifest.hpp"
#include "glicnn/volume.hpp"

namespace glicnn::data {

// Synthetic cohort standing in for GM maps: a smooth anatomical bump plus
// voxel noise; label-1 subjects lose `effect_size` of mean intensity inside
// the signal patches.
struct SynthConfig {
  Extent3 volume_shape{32, 32, 32};
  Extent3 patch_shape{16, 16, 16};
  std::vector<std::size_t> signal_patches{0, 5};
  double effect_size = 0.25;
  double noise_sigma = 0.05;
  // Per-subject multiplicative jitter of the baseline amplitude.
  double amplitude_jitter = 0.05;
  std::size_t negatives = 120;
  std::size_t positives = 120;
  std::uint64_t seed = 7;
};

// Baseline field b(z,y,x) = 0.2 + 0.6 * c(z) c(y) c(x) with
// c(t) = cos(pi * (t + 0.5 - n/2) / n) along each axis of extent n.
double baseline_field(const Extent3& shape, std::size_t z, std::size_t y, std::size_t x);

// Subjects in generation order with ids "sub-0000", ...; labels are
// shuffled by the seed. Bit-identical for a given config.
Dataset generate_synthetic(const SynthConfig& config);

// Writes volumes/<id>.vol and manifest.csv under dir; returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

}  // namespace glicnn::data
