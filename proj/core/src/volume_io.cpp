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

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "glicnn/volume.hpp"

namespace glicnn::data {
namespace {

constexpr std::array<char, 4> kMagic{'V', 'O', 'L', '1'};

const char* kind_code(VolumeFormatError::Kind kind) {
  switch (kind) {
    case VolumeFormatError::Kind::io: return "io_error";
    case VolumeFormatError::Kind::bad_magic: return "bad_magic";
    case VolumeFormatError::Kind::truncated: return "truncated";
    case VolumeFormatError::Kind::shape_overflow: return "shape_overflow";
  }
  return "invalid_data";
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

}  // namespace

std::string to_string(const Extent3& e) {
  return std::to_string(e.d) + "x" + std::to_string(e.h) + "x" + std::to_string(e.w);
}

bool Volume::all_finite() const {
  return std::all_of(voxels.begin(), voxels.end(), [](float v) { return std::isfinite(v); });
}

VolumeFormatError::VolumeFormatError(Kind kind, const std::string& message)
    : DataError(kind_code(kind), message), kind_(kind) {}

void write_volume(const std::filesystem::path& path, const Volume& volume) {
  if (volume.voxels.size() != volume.shape.voxels()) {
    throw ShapeError("write_volume: " + std::to_string(volume.voxels.size()) +
                     " voxels do not match shape " + to_string(volume.shape));
  }
  const auto fits = [](std::size_t v) { return v <= 0xFFFFFFFFu; };
  if (!fits(volume.shape.d) || !fits(volume.shape.h) || !fits(volume.shape.w)) {
    throw VolumeFormatError(VolumeFormatError::Kind::shape_overflow,
                            "write_volume: extent exceeds u32 range");
  }
  std::vector<unsigned char> bytes;
  bytes.reserve(kVolumeHeaderBytes + 4 * volume.voxels.size());
  bytes.insert(bytes.end(), kMagic.begin(), kMagic.end());
  put_u32(bytes, static_cast<std::uint32_t>(volume.shape.d));
  put_u32(bytes, static_cast<std::uint32_t>(volume.shape.h));
  put_u32(bytes, static_cast<std::uint32_t>(volume.shape.w));
  for (float v : volume.voxels) put_u32(bytes, std::bit_cast<std::uint32_t>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw VolumeFormatError(VolumeFormatError::Kind::io,
                            "write_volume: cannot open " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw VolumeFormatError(VolumeFormatError::Kind::io,
                            "write_volume: write failed for " + path.string());
  }
}

Volume read_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw VolumeFormatError(VolumeFormatError::Kind::io, "read_volume: cannot open " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kMagic.size() ||
      !std::equal(kMagic.begin(), kMagic.end(), reinterpret_cast<const char*>(bytes.data()))) {
    throw VolumeFormatError(VolumeFormatError::Kind::bad_magic,
                            "read_volume: " + path.string() + " is not a VOL1 file");
  }
  if (bytes.size() < kVolumeHeaderBytes) {
    throw VolumeFormatError(VolumeFormatError::Kind::truncated,
                            "read_volume: header truncated in " + path.string());
  }
  Volume v;
  v.shape = {get_u32(bytes.data() + 4), get_u32(bytes.data() + 8), get_u32(bytes.data() + 12)};
  const std::uint64_t count =
      std::uint64_t{v.shape.d} * std::uint64_t{v.shape.h} * std::uint64_t{v.shape.w};
  if (count > kMaxVolumeVoxels) {
    throw VolumeFormatError(VolumeFormatError::Kind::shape_overflow,
                            "read_volume: shape " + to_string(v.shape) + " exceeds voxel limit");
  }
  const std::uint64_t expected = kVolumeHeaderBytes + 4 * count;
  if (bytes.size() < expected) {
    throw VolumeFormatError(VolumeFormatError::Kind::truncated,
                            "read_volume: " + path.string() + " has " + std::to_string(bytes.size()) +
                                " bytes, expected " + std::to_string(expected));
  }
  v.voxels.resize(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < v.voxels.size(); ++i) {
    v.voxels[i] = std::bit_cast<float>(get_u32(bytes.data() + kVolumeHeaderBytes + 4 * i));
  }
  return v;
}

}  // namespace glicnn::data
