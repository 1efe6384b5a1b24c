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

#include "glicnn/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "glicnn/errors.hpp"
#include "glicnn/loss.hpp"
#include "glicnn/parallel.hpp"

namespace glicnn::explain {
namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

SubjectExplanation explain_features(const ebm::EbmHead& head, std::span<const double> features,
                                    std::string subject_id, int reference_label) {
  SubjectExplanation e;
  e.subject_id = std::move(subject_id);
  e.names = head.names();
  e.contributions = head.individual_importance(features);
  e.intercept = head.intercept();
  e.logit = head.predict_logit(features);
  e.probability = nn::sigmoid(e.logit);
  e.predicted_label = e.probability > 0.5 ? 1 : 0;
  e.reference_label = reference_label;
  return e;
}

SubjectExplanation explain_subject(const train::GlIcnnModel& model, const data::Volume& volume) {
  const auto fv = model.features(volume);
  return explain_features(model.head, fv.values, volume.subject_id, volume.label);
}

std::string SubjectExplanation::to_csv() const {
  std::ostringstream s;
  s << "feature,contribution\n";
  s << "intercept," << num(intercept) << "\n";
  for (std::size_t j = 0; j < names.size(); ++j) s << csv_field(names[j]) << "," << num(contributions[j]) << "\n";
  return s.str();
}

nlohmann::json SubjectExplanation::to_json() const {
  nlohmann::json contrib = nlohmann::json::array();
  for (std::size_t j = 0; j < names.size(); ++j) {
    contrib.push_back({{"feature", names[j]}, {"contribution", contributions[j]}});
  }
  nlohmann::json j = {{"subject_id", subject_id},   {"intercept", intercept},
                      {"logit", logit},             {"probability", probability},
                      {"predicted_label", predicted_label}, {"contributions", contrib}};
  j["reference_label"] = reference_label < 0 ? nlohmann::json(nullptr) : nlohmann::json(reference_label);
  return j;
}

std::size_t GroupImportance::rank_of(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i + 1;
  }
  return 0;
}

GroupImportance GroupImportance::top(std::size_t k) const {
  GroupImportance out = *this;
  if (out.features.size() > k) out.features.resize(k);
  return out;
}

std::string GroupImportance::to_csv() const {
  std::ostringstream s;
  s << "rank,feature,importance,ci_low,ci_high\n";
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    s << i + 1 << "," << csv_field(f.name) << "," << num(f.importance) << "," << num(f.ci.low) << ","
      << num(f.ci.high) << "\n";
  }
  return s.str();
}

nlohmann::json GroupImportance::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    rows.push_back({{"rank", i + 1},
                    {"feature", f.name},
                    {"importance", f.importance},
                    {"ci_low", f.ci.low},
                    {"ci_high", f.ci.high}});
  }
  return {{"bootstrap_repetitions", repetitions}, {"confidence_level", level}, {"features", rows}};
}

GroupImportance group_importance_report(const ebm::EbmHead& head, const ebm::FeatureMatrix& features,
                                        std::size_t repetitions, std::uint64_t seed, double level) {
  if (features.rows() == 0) throw DataError("empty_dataset", "group importance needs at least one row");
  if (features.cols() != head.feature_count()) {
    throw ShapeError("group importance: " + std::to_string(features.cols()) + " feature columns, head has " +
                     std::to_string(head.feature_count()));
  }
  if (repetitions < 1) throw ConfigError("bootstrap repetitions must be >= 1");
  const std::size_t n = features.rows();
  const std::size_t k = features.cols();

  // |f_j(x_ij)| once per row; resamples just re-average.
  std::vector<double> abs_contrib(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = head.individual_importance(features.row(i));
    for (std::size_t j = 0; j < k; ++j) abs_contrib[i * k + j] = std::abs(c[j]);
  }
  const auto point = ebm::group_importance(head, features);

  std::vector<std::vector<double>> samples(k, std::vector<double>(repetitions));
  parallel_for(repetitions, [&](std::size_t r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> sum(k, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t i = pick(rng);
      for (std::size_t j = 0; j < k; ++j) sum[j] += abs_contrib[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) samples[j][r] = sum[j] / static_cast<double>(n);
  });

  GroupImportance report;
  report.repetitions = repetitions;
  report.level = level;
  const double lo_q = (1.0 - level) / 2.0;
  const double hi_q = (1.0 + level) / 2.0;
  for (std::size_t j = 0; j < k; ++j) {
    FeatureImportance f;
    f.name = head.names()[j];
    f.importance = point[j];
    f.ci.low = std::min(stats::percentile(samples[j], lo_q), point[j]);
    f.ci.high = std::max(stats::percentile(samples[j], hi_q), point[j]);
    report.features.push_back(std::move(f));
  }
  std::stable_sort(report.features.begin(), report.features.end(),
                   [](const auto& a, const auto& b) { return a.importance > b.importance; });
  return report;
}

}  // namespace glicnn::explain
