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

#include "glicnn/patch_grid.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "glicnn/errors.hpp"

namespace glicnn::backbone {

PatchGrid::PatchGrid(Extent3 volume_shape, Extent3 patch_shape)
    : volume_shape_(volume_shape), patch_shape_(patch_shape) {
  if (volume_shape.voxels() == 0 || patch_shape.voxels() == 0) {
    throw ConfigError("patch grid: extents must be positive");
  }
  if (volume_shape.d % patch_shape.d || volume_shape.h % patch_shape.h ||
      volume_shape.w % patch_shape.w) {
    throw ConfigError("patch grid: patch " + data::to_string(patch_shape) +
                      " does not evenly divide volume " + data::to_string(volume_shape));
  }
  counts_ = {volume_shape.d / patch_shape.d, volume_shape.h / patch_shape.h,
             volume_shape.w / patch_shape.w};
  for (std::size_t z = 0; z < counts_.d; ++z)
    for (std::size_t y = 0; y < counts_.h; ++y)
      for (std::size_t x = 0; x < counts_.w; ++x) {
        origins_.push_back({z * patch_shape.d, y * patch_shape.h, x * patch_shape.w});
        names_.push_back("patch_" + std::to_string(z) + "_" + std::to_string(y) + "_" +
                         std::to_string(x));
      }
}

void PatchGrid::set_name(std::size_t patch, std::string name) {
  if (patch >= names_.size()) {
    throw ConfigError("patch names: index " + std::to_string(patch) + " out of range (P=" +
                      std::to_string(names_.size()) + ")");
  }
  names_[patch] = std::move(name);
}

void PatchGrid::apply_names_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("patch names: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("patch names: expected a JSON object of index -> name");
  for (const auto& [key, value] : j.items()) {
    std::size_t idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoul(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ConfigError("patch names: key '" + key + "' is not a patch index");
    }
    if (!value.is_string()) throw ConfigError("patch names: value for '" + key + "' must be a string");
    set_name(idx, value.get<std::string>());
  }
}

void PatchGrid::load_names(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("patch names: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_names_json(ss.str());
}

std::string PatchGrid::names_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < names_.size(); ++i) j[std::to_string(i)] = names_[i];
  return j.dump(2);
}

std::size_t PatchGrid::patch_of(std::size_t z, std::size_t y, std::size_t x) const {
  return ((z / patch_shape_.d) * counts_.h + y / patch_shape_.h) * counts_.w + x / patch_shape_.w;
}

std::vector<Patch> extract_patches(const Volume& volume, const PatchGrid& grid) {
  if (volume.shape != grid.volume_shape()) {
    throw ShapeError("extract_patches: volume " + data::to_string(volume.shape) +
                     " does not match grid " + data::to_string(grid.volume_shape()));
  }
  if (volume.voxels.size() != volume.shape.voxels()) {
    throw ShapeError("extract_patches: voxel count does not match volume shape");
  }
  const Extent3 ps = grid.patch_shape();
  std::vector<Patch> patches;
  patches.reserve(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Extent3 o = grid.origins()[p];
    Patch patch{p, o, ps, std::vector<float>(ps.voxels())};
    for (std::size_t z = 0; z < ps.d; ++z)
      for (std::size_t y = 0; y < ps.h; ++y) {
        const float* src = &volume.voxels[((o.d + z) * volume.shape.h + o.h + y) * volume.shape.w + o.w];
        std::copy_n(src, ps.w, patch.voxels.data() + (z * ps.h + y) * ps.w);
      }
    patches.push_back(std::move(patch));
  }
  return patches;
}

Volume assemble_patches(std::span<const Patch> patches, const PatchGrid& grid) {
  if (patches.size() != grid.size()) {
    throw ShapeError("assemble_patches: expected " + std::to_string(grid.size()) + " patches, got " +
                     std::to_string(patches.size()));
  }
  Volume v;
  v.shape = grid.volume_shape();
  v.voxels.assign(v.shape.voxels(), 0.0f);
  const Extent3 ps = grid.patch_shape();
  for (const Patch& patch : patches) {
    if (patch.shape != ps || patch.voxels.size() != ps.voxels()) {
      throw ShapeError("assemble_patches: patch " + std::to_string(patch.index) + " has wrong shape");
    }
    const Extent3 o = grid.origins().at(patch.index);
    for (std::size_t z = 0; z < ps.d; ++z)
      for (std::size_t y = 0; y < ps.h; ++y) {
        std::copy_n(patch.voxels.data() + (z * ps.h + y) * ps.w, ps.w,
                    &v.voxels[((o.d + z) * v.shape.h + o.h + y) * v.shape.w + o.w]);
      }
  }
  return v;
}

}  // namespace glicnn::backbone
