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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "glicnn/volume.hpp"

namespace glicnn::data {

struct ManifestEntry {
  std::string subject_id;
  std::filesystem::path path;
  int label = 0;
};

// CSV with header "subject_id,path,label". Relative paths are resolved
// against the manifest's directory. Rows keep file order; duplicate ids,
// labels other than 0/1 and malformed rows are rejected.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

// Writes entries with paths relative to the manifest directory when possible.
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

// In-memory labelled volumes.
struct Dataset {
  std::vector<Volume> volumes;

  std::size_t size() const noexcept { return volumes.size(); }
  bool empty() const noexcept { return volumes.empty(); }
  std::vector<int> labels() const;
  std::vector<std::string> subject_ids() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  // Index of the subject with this id, or npos.
  std::size_t find(const std::string& subject_id) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Reads every volume listed in the manifest; id and label come from the row.
Dataset load_dataset(std::span<const ManifestEntry> entries);
Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace glicnn::data
