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

#include "glicnn/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace glicnn::data {
namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing_file", "manifest not found: " + path.string());
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (cells.size() == 3 && cells[0] == "subject_id" && cells[1] == "path" && cells[2] == "label") {
        continue;
      }
      throw DataError("bad_manifest", path.string() + ":1: expected header subject_id,path,label");
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (cells.size() != 3) throw DataError("bad_manifest", where + ": expected 3 columns");
    if (cells[0].empty()) throw DataError("bad_manifest", where + ": empty subject_id");
    if (cells[2] != "0" && cells[2] != "1") {
      throw DataError("bad_label", where + ": label must be 0 or 1, got '" + cells[2] + "'");
    }
    if (!seen.insert(cells[0]).second) {
      throw DataError("duplicate_id", where + ": duplicate subject_id '" + cells[0] + "'");
    }
    std::filesystem::path p(cells[1]);
    if (p.is_relative()) p = base / p;
    entries.push_back({cells[0], p, cells[2] == "1" ? 1 : 0});
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("io_error", "cannot write manifest " + path.string());
  out << "subject_id,path,label\n";
  const auto base = path.parent_path();
  for (const auto& e : entries) {
    auto p = e.path;
    if (p.is_absolute() && !base.empty()) {
      std::error_code ec;
      const auto rel = std::filesystem::relative(p, std::filesystem::absolute(base), ec);
      if (!ec && !rel.empty()) p = rel;
    }
    out << e.subject_id << ',' << p.generic_string() << ',' << e.label << '\n';
  }
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(volumes.size());
  for (const auto& v : volumes) out.push_back(v.label);
  return out;
}

std::vector<std::string> Dataset::subject_ids() const {
  std::vector<std::string> out;
  out.reserve(volumes.size());
  for (const auto& v : volumes) out.push_back(v.subject_id);
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.volumes.reserve(indices.size());
  for (std::size_t i : indices) out.volumes.push_back(volumes.at(i));
  return out;
}

std::size_t Dataset::find(const std::string& subject_id) const {
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    if (volumes[i].subject_id == subject_id) return i;
  }
  return npos;
}

Dataset load_dataset(std::span<const ManifestEntry> entries) {
  Dataset ds;
  ds.volumes.reserve(entries.size());
  for (const auto& e : entries) {
    Volume v = read_volume(e.path);
    v.subject_id = e.subject_id;
    v.label = e.label;
    if (!v.all_finite()) throw DataError("non_finite", "volume " + e.path.string() + " has NaN/Inf");
    ds.volumes.push_back(std::move(v));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const auto entries = load_manifest(manifest_path);
  return load_dataset(entries);
}

}  // namespace glicnn::data
