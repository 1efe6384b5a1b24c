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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "glicnn/volume.hpp"

namespace glicnn::backbone {

using data::Extent3;
using data::Volume;

// Exact non-overlapping tiling of a volume. Patch order is z-major over the
// grid: index = (iz*ny + iy)*nx + ix.
class PatchGrid {
 public:
  PatchGrid() = default;
  // Throws ConfigError unless patch extents divide the volume extents.
  PatchGrid(Extent3 volume_shape, Extent3 patch_shape);

  const Extent3& volume_shape() const noexcept { return volume_shape_; }
  const Extent3& patch_shape() const noexcept { return patch_shape_; }
  Extent3 counts() const noexcept { return counts_; }
  std::size_t size() const noexcept { return origins_.size(); }
  const std::vector<Extent3>& origins() const noexcept { return origins_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(std::size_t patch) const { return names_.at(patch); }

  void set_name(std::size_t patch, std::string name);
  // Applies a JSON object mapping patch index (as string) to region name.
  // Indices not mentioned keep their current name.
  void apply_names_json(const std::string& json_text);
  void load_names(const std::filesystem::path& path);
  std::string names_json() const;

  // Patch index containing voxel (z,y,x).
  std::size_t patch_of(std::size_t z, std::size_t y, std::size_t x) const;

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;

 private:
  Extent3 volume_shape_;
  Extent3 patch_shape_;
  Extent3 counts_;
  std::vector<Extent3> origins_;
  std::vector<std::string> names_;
};

struct Patch {
  std::size_t index = 0;
  Extent3 origin;
  Extent3 shape;
  std::vector<float> voxels;
};

// P patches in grid order. Throws ShapeError if the volume shape differs
// from the grid's.
std::vector<Patch> extract_patches(const Volume& volume, const PatchGrid& grid);

// Inverse of extract_patches: writes every patch back at its origin.
Volume assemble_patches(std::span<const Patch> patches, const PatchGrid& grid);

}  // namespace glicnn::backbone
