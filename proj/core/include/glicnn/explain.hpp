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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glicnn/ebm.hpp"
#include "glicnn/evalstats.hpp"
#include "glicnn/trainer.hpp"

namespace glicnn::explain {

// Signed per-feature contributions for one subject. intercept plus the
// contributions, summed in feature order, reproduces logit exactly.
struct SubjectExplanation {
  std::string subject_id;
  std::vector<std::string> names;
  std::vector<double> contributions;
  double intercept = 0;
  double logit = 0;
  double probability = 0.5;
  int predicted_label = 0;
  int reference_label = -1;  // -1 when unknown

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

SubjectExplanation explain_features(const ebm::EbmHead& head, std::span<const double> features,
                                    std::string subject_id = {}, int reference_label = -1);
SubjectExplanation explain_subject(const train::GlIcnnModel& model, const data::Volume& volume);

struct FeatureImportance {
  std::string name;
  double importance = 0;
  stats::Interval ci;
};

// Mean absolute contribution per feature with percentile bootstrap CIs
// over resampled rows; sorted by importance, largest first.
struct GroupImportance {
  std::size_t repetitions = 100;
  double level = 0.95;
  std::vector<FeatureImportance> features;

  // 1-based rank of a feature; 0 when absent.
  std::size_t rank_of(const std::string& name) const;
  GroupImportance top(std::size_t k) const;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

GroupImportance group_importance_report(const ebm::EbmHead& head, const ebm::FeatureMatrix& features,
                                        std::size_t repetitions, std::uint64_t seed, double level = 0.95);

}  // namespace glicnn::explain
