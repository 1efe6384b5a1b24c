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
#include <string>
#include <vector>

#include "glicnn/errors.hpp"

namespace glicnn::data {

struct Extent3 {
  std::size_t d = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t voxels() const noexcept { return d * h * w; }
  friend bool operator==(const Extent3&, const Extent3&) = default;
};

std::string to_string(const Extent3& e);

// A 3D scalar field (GM-density-like, nominal range [0,1]) plus the subject
// it belongs to. Voxels are stored z-major: index = (z*h + y)*w + x.
struct Volume {
  Extent3 shape;
  std::vector<float> voxels;
  std::string subject_id;
  int label = 0;

  float at(std::size_t z, std::size_t y, std::size_t x) const {
    return voxels[(z * shape.h + y) * shape.w + x];
  }
  float& at(std::size_t z, std::size_t y, std::size_t x) {
    return voxels[(z * shape.h + y) * shape.w + x];
  }
  bool all_finite() const;
};

// "VOL1" file errors; kind() distinguishes the failure.
class VolumeFormatError : public DataError {
 public:
  enum class Kind { io, bad_magic, truncated, shape_overflow };

  VolumeFormatError(Kind kind, const std::string& message);
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Layout: magic "VOL1", u32 D, H, W (little endian), then D*H*W
// little-endian IEEE-754 float32 voxels. Subject id and label are not
// stored; they live in the manifest.
void write_volume(const std::filesystem::path& path, const Volume& volume);
Volume read_volume(const std::filesystem::path& path);

inline constexpr std::size_t kVolumeHeaderBytes = 16;
// Upper bound on voxels accepted by read_volume.
inline constexpr std::uint64_t kMaxVolumeVoxels = std::uint64_t{1} << 31;

}  // namespace glicnn::data
