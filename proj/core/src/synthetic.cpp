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

#include "glicnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <random>

#include "glicnn/parallel.hpp"

namespace glicnn::data {
namespace {

double bump(std::size_t t, std::size_t n) {
  const double nn = static_cast<double>(n);
  return std::cos(std::numbers::pi * (static_cast<double>(t) + 0.5 - nn / 2.0) / nn);
}

void validate(const SynthConfig& c) {
  const auto& v = c.volume_shape;
  const auto& p = c.patch_shape;
  if (v.voxels() == 0 || p.voxels() == 0) throw ConfigError("synth: shapes must be non-empty");
  if (v.d % p.d || v.h % p.h || v.w % p.w) {
    throw ConfigError("synth: patch shape " + to_string(p) + " does not divide volume shape " +
                      to_string(v));
  }
  const std::size_t patches = (v.d / p.d) * (v.h / p.h) * (v.w / p.w);
  for (std::size_t s : c.signal_patches) {
    if (s >= patches) {
      throw ConfigError("synth: signal patch " + std::to_string(s) + " out of range (P=" +
                        std::to_string(patches) + ")");
    }
  }
  if (c.effect_size < 0 || c.noise_sigma < 0 || c.amplitude_jitter < 0) {
    throw ConfigError("synth: effect size, noise and jitter must be >= 0");
  }
  if (c.negatives == 0 || c.positives == 0) {
    throw ConfigError("synth: both classes need at least one subject");
  }
}

}  // namespace

double baseline_field(const Extent3& shape, std::size_t z, std::size_t y, std::size_t x) {
  return 0.2 + 0.6 * bump(z, shape.d) * bump(y, shape.h) * bump(x, shape.w);
}

Dataset generate_synthetic(const SynthConfig& config) {
  validate(config);
  const auto& vs = config.volume_shape;
  const auto& ps = config.patch_shape;
  const std::size_t n = config.negatives + config.positives;

  std::vector<int> labels(n, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(config.negatives), labels.end(), 1);
  std::mt19937_64 label_rng(derive_seed(config.seed, 0));
  std::shuffle(labels.begin(), labels.end(), label_rng);

  // Signal mask over voxels.
  std::vector<unsigned char> signal(vs.voxels(), 0);
  const std::size_t ny = vs.h / ps.h, nx = vs.w / ps.w;
  for (std::size_t s : config.signal_patches) {
    const std::size_t pz = s / (ny * nx), py = (s / nx) % ny, px = s % nx;
    for (std::size_t z = 0; z < ps.d; ++z)
      for (std::size_t y = 0; y < ps.h; ++y)
        for (std::size_t x = 0; x < ps.w; ++x)
          signal[((pz * ps.d + z) * vs.h + py * ps.h + y) * vs.w + px * ps.w + x] = 1;
  }
  std::vector<double> base(vs.voxels());
  for (std::size_t z = 0; z < vs.d; ++z)
    for (std::size_t y = 0; y < vs.h; ++y)
      for (std::size_t x = 0; x < vs.w; ++x) base[(z * vs.h + y) * vs.w + x] = baseline_field(vs, z, y, x);

  Dataset ds;
  ds.volumes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(config.seed, i + 1));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    const double amplitude = 1.0 + config.amplitude_jitter * jitter(rng);
    Volume& v = ds.volumes[i];
    v.shape = vs;
    v.label = labels[i];
    char id[32];
    std::snprintf(id, sizeof id, "sub-%04zu", i);
    v.subject_id = id;
    v.voxels.resize(vs.voxels());
    const double shift = v.label == 1 ? config.effect_size : 0.0;
    for (std::size_t j = 0; j < v.voxels.size(); ++j) {
      double value = amplitude * base[j] + config.noise_sigma * noise(rng);
      if (signal[j]) value -= shift;
      v.voxels[j] = static_cast<float>(value);
    }
  }
  return ds;
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir / "volumes");
  std::vector<ManifestEntry> entries;
  entries.reserve(dataset.size());
  for (const auto& v : dataset.volumes) {
    const auto rel = std::filesystem::path("volumes") / (v.subject_id + ".vol");
    write_volume(dir / rel, v);
    entries.push_back({v.subject_id, rel, v.label});
  }
  const auto manifest = dir / "manifest.csv";
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace glicnn::data
