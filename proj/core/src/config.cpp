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

#include "glicnn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "glicnn/errors.hpp"

namespace glicnn {
namespace {

using nlohmann::json;

json extent_json(const data::Extent3& e) { return json::array({e.d, e.h, e.w}); }

data::Extent3 extent_from(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(key + ": expected [D, H, W]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
}

// Walks the keys of one JSON object, rejecting any it does not know.
class Reader {
 public:
  Reader(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j.is_object()) throw ConfigError(section_ + ": expected a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(section_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    known_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void extent(const char* key, data::Extent3& out) {
    if (const json* v = sub(key)) out = extent_from(*v, section_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) throw ConfigError(section_ + ": unknown key \"" + key + "\"");
    }
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> known_;
};

}  // namespace

void AppConfig::validate() const {
  train.validate();
  if (patch_shape.voxels() == 0) throw ConfigError("patch_shape must be non-empty");
  if (bootstrap_repetitions < 1) throw ConfigError("bootstrap_repetitions must be >= 1");
}

json to_json(const data::SynthConfig& c) {
  return {{"volume_shape", extent_json(c.volume_shape)},
          {"patch_shape", extent_json(c.patch_shape)},
          {"signal_patches", c.signal_patches},
          {"effect_size", c.effect_size},
          {"noise_sigma", c.noise_sigma},
          {"amplitude_jitter", c.amplitude_jitter},
          {"negatives", c.negatives},
          {"positives", c.positives},
          {"seed", c.seed}};
}

json to_json(const backbone::BackboneConfig& c) {
  return {{"global_stem_channels", c.global_stem_channels},
          {"global_growth", c.global_growth},
          {"global_transition_channels", c.global_transition_channels},
          {"local_channels1", c.local_channels1},
          {"local_channels2", c.local_channels2},
          {"share_local_weights", c.share_local_weights},
          {"fc_hidden", c.fc_hidden}};
}

json to_json(const ebm::TrainConfig& c) {
  return {{"max_bins", c.max_bins},
          {"learning_rate", c.learning_rate},
          {"max_rounds", c.max_rounds},
          {"bag_count", c.bag_count},
          {"validation_fraction", c.validation_fraction},
          {"patience", c.patience},
          {"min_samples_leaf", c.min_samples_leaf},
          {"resample_bags", c.resample_bags}};
}

json to_json(const train::TrainConfig& c) {
  json weights = nullptr;
  if (c.class_weights) weights = json::array({c.class_weights->negative, c.class_weights->positive});
  return {{"max_epochs", c.max_epochs},
          {"tolerate", c.tolerate},
          {"warmup_epochs", c.warmup_epochs},
          {"batch_size", c.batch_size},
          {"steps_per_epoch", c.steps_per_epoch},
          {"warmup_learning_rate", c.warmup_learning_rate},
          {"cnn_learning_rate", c.cnn_learning_rate},
          {"class_weights", weights},
          {"seed", c.seed},
          {"ebm", to_json(c.ebm)},
          {"backbone", to_json(c.backbone)}};
}

json to_json(const AppConfig& c) {
  return {{"synth", to_json(c.synth)},
          {"train", to_json(c.train)},
          {"patch_shape", extent_json(c.patch_shape)},
          {"patch_names", c.patch_names},
          {"bootstrap_repetitions", c.bootstrap_repetitions},
          {"top_k", c.top_k}};
}

data::SynthConfig synth_config_from_json(const json& j, data::SynthConfig c) {
  Reader r(j, "synth");
  r.extent("volume_shape", c.volume_shape);
  r.extent("patch_shape", c.patch_shape);
  r.get("signal_patches", c.signal_patches);
  r.get("effect_size", c.effect_size);
  r.get("noise_sigma", c.noise_sigma);
  r.get("amplitude_jitter", c.amplitude_jitter);
  r.get("negatives", c.negatives);
  r.get("positives", c.positives);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

backbone::BackboneConfig backbone_config_from_json(const json& j, backbone::BackboneConfig c) {
  Reader r(j, "train.backbone");
  r.get("global_stem_channels", c.global_stem_channels);
  r.get("global_growth", c.global_growth);
  r.get("global_transition_channels", c.global_transition_channels);
  r.get("local_channels1", c.local_channels1);
  r.get("local_channels2", c.local_channels2);
  r.get("share_local_weights", c.share_local_weights);
  r.get("fc_hidden", c.fc_hidden);
  r.finish();
  return c;
}

ebm::TrainConfig ebm_config_from_json(const json& j, ebm::TrainConfig c) {
  Reader r(j, "train.ebm");
  r.get("max_bins", c.max_bins);
  r.get("learning_rate", c.learning_rate);
  r.get("max_rounds", c.max_rounds);
  r.get("bag_count", c.bag_count);
  r.get("validation_fraction", c.validation_fraction);
  r.get("patience", c.patience);
  r.get("min_samples_leaf", c.min_samples_leaf);
  r.get("resample_bags", c.resample_bags);
  r.finish();
  return c;
}

train::TrainConfig train_config_from_json(const json& j, train::TrainConfig c) {
  Reader r(j, "train");
  r.get("max_epochs", c.max_epochs);
  r.get("tolerate", c.tolerate);
  r.get("warmup_epochs", c.warmup_epochs);
  r.get("batch_size", c.batch_size);
  r.get("steps_per_epoch", c.steps_per_epoch);
  r.get("warmup_learning_rate", c.warmup_learning_rate);
  r.get("cnn_learning_rate", c.cnn_learning_rate);
  r.get("seed", c.seed);
  if (const json* w = r.sub("class_weights")) {
    if (w->is_null()) {
      c.class_weights.reset();
    } else if (w->is_array() && w->size() == 2) {
      c.class_weights = nn::ClassWeights{(*w)[0].get<double>(), (*w)[1].get<double>()};
    } else {
      throw ConfigError("train.class_weights: expected null or [w_negative, w_positive]");
    }
  }
  if (const json* e = r.sub("ebm")) c.ebm = ebm_config_from_json(*e, c.ebm);
  if (const json* b = r.sub("backbone")) c.backbone = backbone_config_from_json(*b, c.backbone);
  r.finish();
  return c;
}

AppConfig app_config_from_json(const json& j, AppConfig c) {
  Reader r(j, "config");
  if (const json* s = r.sub("synth")) c.synth = synth_config_from_json(*s, c.synth);
  if (const json* t = r.sub("train")) c.train = train_config_from_json(*t, c.train);
  r.extent("patch_shape", c.patch_shape);
  r.get("patch_names", c.patch_names);
  r.get("bootstrap_repetitions", c.bootstrap_repetitions);
  r.get("top_k", c.top_k);
  r.finish();
  return c;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return app_config_from_json(j);
}

}  // namespace glicnn
