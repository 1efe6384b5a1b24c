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

#include "glicnn/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "glicnn/errors.hpp"
#include "glicnn/parallel.hpp"

namespace glicnn::stats {
namespace {

struct ClassCounts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

ClassCounts count_classes(std::span<const int> labels) {
  ClassCounts c;
  for (int y : labels) (y == 1 ? c.pos : c.neg)++;
  return c;
}

// DeLong placement values: V10_i for each positive, V01_j for each negative.
struct Placements {
  std::vector<double> v10;
  std::vector<double> v01;
  double auc = 0;
};

Placements placements(std::span<const double> scores, std::span<const int> labels) {
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(scores[i]);
  const double m = static_cast<double>(pos.size()), n = static_cast<double>(neg.size());
  const auto all = midranks(scores);
  const auto rank_pos = midranks(pos);
  const auto rank_neg = midranks(neg);
  Placements p;
  p.v10.resize(pos.size());
  p.v01.resize(neg.size());
  std::size_t ip = 0, in = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) {
      // negatives below this positive (ties count one half)
      p.v10[ip] = (all[i] - rank_pos[ip]) / n;
      ++ip;
    } else {
      // positives above this negative
      p.v01[in] = 1.0 - (all[i] - rank_neg[in]) / m;
      ++in;
    }
  }
  p.auc = std::accumulate(p.v10.begin(), p.v10.end(), 0.0) / m;
  return p;
}

double covariance(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return 0.0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / (n - 1.0);
}

}  // namespace

void ScoredSet::validate() const {
  if (scores.size() != labels.size()) {
    throw ShapeError("scored set: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (!subject_ids.empty() && subject_ids.size() != scores.size()) {
    throw ShapeError("scored set: subject id count does not match scores");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("bad_label", "scored set: labels must be 0 or 1");
  }
}

ScoredSet ScoredSet::resample(std::span<const std::size_t> indices) const {
  ScoredSet out;
  out.scores.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (!subject_ids.empty()) out.subject_ids.push_back(subject_ids[i]);
    out.scores.push_back(scores[i]);
    out.labels.push_back(labels[i]);
  }
  return out;
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
  const auto c = count_classes(labels);
  if (c.pos == 0 || c.neg == 0) throw DataError("single_class", "auc: both classes must be present");
  const auto ranks = midranks(scores);
  double pos_rank_sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) pos_rank_sum += ranks[i];
  }
  const double m = static_cast<double>(c.pos), n = static_cast<double>(c.neg);
  return (pos_rank_sum - m * (m + 1.0) / 2.0) / (m * n);
}

double auc(const ScoredSet& set) {
  set.validate();
  return auc(set.scores, set.labels);
}

std::vector<double> bootstrap_samples(const ScoredSet& set, const Metric& metric,
                                      const BootstrapOptions& options) {
  set.validate();
  if (options.repetitions == 0) throw ConfigError("bootstrap: repetitions must be positive");
  const auto c = count_classes(set.labels);
  if (c.pos == 0 || c.neg == 0) throw DataError("single_class", "bootstrap: both classes must be present");
  const std::size_t n = set.size();
  std::vector<double> values(options.repetitions);
  parallel_for(options.repetitions, [&](std::size_t r) {
    std::mt19937_64 rng(derive_seed(options.seed, r));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt > options.max_redraws) {
        throw DataError("bootstrap_failed",
                        "bootstrap: could not draw a resample containing both classes");
      }
      ClassCounts drawn;
      for (auto& i : idx) {
        i = pick(rng);
        (set.labels[i] == 1 ? drawn.pos : drawn.neg)++;
      }
      if (drawn.pos > 0 && drawn.neg > 0) break;
    }
    values[r] = metric(set.resample(idx));
  });
  return values;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("empty", "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

Interval bootstrap_ci(const ScoredSet& set, const Metric& metric, const BootstrapOptions& options) {
  if (!(options.level > 0 && options.level < 1)) throw ConfigError("bootstrap: level must be in (0,1)");
  const auto values = bootstrap_samples(set, metric, options);
  const double tail = (1.0 - options.level) / 2.0;
  return {percentile(values, tail), percentile(values, 1.0 - tail)};
}

DeLongResult delong_test(const ScoredSet& a, const ScoredSet& b) {
  a.validate();
  b.validate();
  if (a.size() != b.size() || a.labels != b.labels) {
    throw DataError("unpaired", "delong_test: score sets must share subjects and labels");
  }
  if (!a.subject_ids.empty() && !b.subject_ids.empty() && a.subject_ids != b.subject_ids) {
    throw DataError("unpaired", "delong_test: subject ids differ between score sets");
  }
  const auto c = count_classes(a.labels);
  if (c.pos == 0 || c.neg == 0) throw DataError("single_class", "delong_test: both classes must be present");
  const auto pa = placements(a.scores, a.labels);
  const auto pb = placements(b.scores, b.labels);
  const double m = static_cast<double>(c.pos), n = static_cast<double>(c.neg);
  const double s10 = covariance(pa.v10, pa.v10) + covariance(pb.v10, pb.v10) - 2.0 * covariance(pa.v10, pb.v10);
  const double s01 = covariance(pa.v01, pa.v01) + covariance(pb.v01, pb.v01) - 2.0 * covariance(pa.v01, pb.v01);
  DeLongResult r;
  r.auc_a = pa.auc;
  r.auc_b = pb.auc;
  r.variance = std::max(0.0, s10 / m + s01 / n);
  const double diff = pa.auc - pb.auc;
  if (r.variance <= 0.0) {
    r.z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.p_value = diff == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.z = diff / std::sqrt(r.variance);
  r.p_value = std::clamp(std::erfc(std::abs(r.z) / std::sqrt(2.0)), 0.0, 1.0);
  return r;
}

SplitIndices stratified_split(std::span<const int> labels, std::uint64_t seed, double valid_fraction,
                              double test_fraction) {
  if (!(valid_fraction >= 0 && test_fraction >= 0 && valid_fraction + test_fraction < 1)) {
    throw ConfigError("stratified_split: fractions must be non-negative and sum below 1");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("bad_label", "stratified_split: labels must be 0 or 1");
    by_class[labels[i]].push_back(i);
  }
  std::mt19937_64 rng(seed);
  SplitIndices out;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const double nc = static_cast<double>(members.size());
    const auto nv = static_cast<std::size_t>(std::lround(nc * valid_fraction));
    const auto nt = std::min(members.size() - nv, static_cast<std::size_t>(std::lround(nc * test_fraction)));
    auto it = members.begin();
    out.valid.insert(out.valid.end(), it, it + static_cast<std::ptrdiff_t>(nv));
    it += static_cast<std::ptrdiff_t>(nv);
    out.test.insert(out.test.end(), it, it + static_cast<std::ptrdiff_t>(nt));
    it += static_cast<std::ptrdiff_t>(nt);
    out.train.insert(out.train.end(), it, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

const ModelResult& EvalReport::model(const std::string& name) const {
  for (const auto& m : models) {
    if (m.name == name) return m;
  }
  throw DataError("unknown_model", "report has no model named '" + name + "'");
}

const PairwiseResult* EvalReport::pair(const std::string& a, const std::string& b) const {
  for (const auto& p : pairwise) {
    if ((p.a == a && p.b == b) || (p.a == b && p.b == a)) return &p;
  }
  return nullptr;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "model,auc,ci_low,ci_high";
  for (const auto& m : models) out << ",p_vs_" << m.name;
  out << '\n';
  for (const auto& m : models) {
    out << m.name << ',' << m.auc << ',' << m.ci.low << ',' << m.ci.high;
    for (const auto& other : models) {
      out << ',';
      if (other.name == m.name) continue;
      if (const auto* p = pair(m.name, other.name)) out << p->p_value;
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["bootstrap_repetitions"] = repetitions;
  j["confidence_level"] = level;
  auto& ms = j["models"] = nlohmann::json::array();
  for (const auto& m : models) ms.push_back({{"name", m.name}, {"auc", m.auc}, {"ci_low", m.ci.low}, {"ci_high", m.ci.high}});
  auto& ps = j["pairwise"] = nlohmann::json::array();
  for (const auto& p : pairwise) ps.push_back({{"a", p.a}, {"b", p.b}, {"z", p.z}, {"p_value", p.p_value}});
  nlohmann::json matrix = nlohmann::json::object();
  for (const auto& a : models) {
    for (const auto& b : models) {
      const auto* p = pair(a.name, b.name);
      matrix[a.name][b.name] = a.name == b.name ? nlohmann::json(1.0)
                                                : (p ? nlohmann::json(p->p_value) : nlohmann::json());
    }
  }
  j["p_value_matrix"] = matrix;
  return j;
}

EvalReport run_comparison(std::span<const ModelScores> models, const BootstrapOptions& options) {
  if (models.empty()) throw ConfigError("run_comparison: at least one model is required");
  EvalReport report;
  report.repetitions = options.repetitions;
  report.level = options.level;
  const Metric metric = [](const ScoredSet& s) { return auc(s); };
  for (const auto& m : models) {
    ModelResult r;
    r.name = m.name;
    r.auc = auc(m.scores);
    r.ci = bootstrap_ci(m.scores, metric, options);
    r.ci.low = std::min(r.ci.low, r.auc);
    r.ci.high = std::max(r.ci.high, r.auc);
    report.models.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      const auto d = delong_test(models[i].scores, models[j].scores);
      report.pairwise.push_back({models[i].name, models[j].name, d.z, d.p_value});
    }
  std::stable_sort(report.models.begin(), report.models.end(),
                   [](const ModelResult& a, const ModelResult& b) { return a.auc > b.auc; });
  return report;
}

}  // namespace glicnn::stats
