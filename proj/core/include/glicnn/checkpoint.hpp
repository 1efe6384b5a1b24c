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

#include <nlohmann/json.hpp>

#include "glicnn/trainer.hpp"

namespace glicnn {

// Binary container: "GLIC", u32 version, u64 JSON length, JSON metadata,
// then every weight tensor as raw little-endian float32 in the order the
// metadata lists them. Integers are little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Written to a sibling temporary file, then renamed over path.
void save_checkpoint(const std::filesystem::path& path, const train::GlIcnnModel& model);
train::GlIcnnModel load_checkpoint(const std::filesystem::path& path);

// Metadata section only (for inspection).
nlohmann::json read_checkpoint_metadata(const std::filesystem::path& path);

}  // namespace glicnn
