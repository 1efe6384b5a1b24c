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
#include <string>

#include <nlohmann/json.hpp>

#include "glicnn/backbones.hpp"
#include "glicnn/ebm.hpp"
#include "glicnn/synthetic.hpp"
#include "glicnn/trainer.hpp"

namespace glicnn {

// Everything the command-line tool can be configured with. Loaded from a
// single JSON file; keys that are absent keep their defaults, unknown keys
// are rejected so typos do not pass silently.
struct AppConfig {
  data::SynthConfig synth;
  train::TrainConfig train;
  data::Extent3 patch_shape{16, 16, 16};
  // Optional patch-name JSON (index -> region name); empty for defaults.
  std::string patch_names;
  std::size_t bootstrap_repetitions = 100;
  std::size_t top_k = 10;

  void validate() const;
};

nlohmann::json to_json(const data::SynthConfig& c);
nlohmann::json to_json(const backbone::BackboneConfig& c);
nlohmann::json to_json(const ebm::TrainConfig& c);
nlohmann::json to_json(const train::TrainConfig& c);
nlohmann::json to_json(const AppConfig& c);

// Each overlays the keys present in j onto base.
data::SynthConfig synth_config_from_json(const nlohmann::json& j, data::SynthConfig base = {});
backbone::BackboneConfig backbone_config_from_json(const nlohmann::json& j, backbone::BackboneConfig base = {});
ebm::TrainConfig ebm_config_from_json(const nlohmann::json& j, ebm::TrainConfig base = {});
train::TrainConfig train_config_from_json(const nlohmann::json& j, train::TrainConfig base = {});
AppConfig app_config_from_json(const nlohmann::json& j, AppConfig base = {});

AppConfig load_app_config(const std::filesystem::path& path);

}  // namespace glicnn
