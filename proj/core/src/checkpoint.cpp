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

#include "glicnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <type_traits>

#include "glicnn/config.hpp"
#include "glicnn/errors.hpp"

namespace glicnn {
namespace {

using nlohmann::json;
using nn::Parameter;

constexpr char kMagic[4] = {'G', 'L', 'I', 'C'};

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& in, const std::string& what) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) {
    throw DataError("bad_checkpoint", "truncated checkpoint (" + what + ")");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
  return v;
}

template <class P>
struct NamedParam {
  std::string name;
  P* param;
};

// Tensors in blob order: global backbone, local backbones, FC block.
template <class Model>
auto collect(Model& model) {
  using P = std::conditional_t<std::is_const_v<Model>, const Parameter, Parameter>;
  std::vector<NamedParam<P>> out;
  for (auto& p : model.backbones.global().parameters()) out.push_back({"global/" + p.name, &p});
  for (std::size_t j = 0; j < model.backbones.distinct_local_count(); ++j) {
    for (auto& p : model.backbones.local(j).parameters()) {
      out.push_back({"local" + std::to_string(j) + "/" + p.name, &p});
    }
  }
  if (model.fc_head) {
    for (auto& p : model.fc_head->parameters()) out.push_back({"fc/" + p.name, &p});
  }
  return out;
}

json extent_json(const data::Extent3& e) { return json::array({e.d, e.h, e.w}); }
data::Extent3 extent_of(const json& j) {
  return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>(), j.at(2).get<std::size_t>()};
}

json read_metadata(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw DataError("bad_checkpoint", "truncated checkpoint (magic)");
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("bad_checkpoint", "not a checkpoint (bad magic)");
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw DataError("bad_checkpoint", "unsupported checkpoint version " + std::to_string(version));
  }
  const auto length = get_le<std::uint64_t>(in, "metadata length");
  if (length > (1ull << 32)) throw DataError("bad_checkpoint", "implausible metadata length");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw DataError("bad_checkpoint", "truncated checkpoint (metadata)");
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError("bad_checkpoint", std::string("checkpoint metadata: ") + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const train::GlIcnnModel& model) {
  const auto params = collect(model);

  const auto& grid = model.backbones.grid();
  json meta;
  meta["task"] = model.task;
  meta["seed"] = model.config.seed;
  meta["config"] = to_json(model.config);
  meta["grid"] = {{"volume_shape", extent_json(grid.volume_shape())},
                  {"patch_shape", extent_json(grid.patch_shape())},
                  {"names", grid.names()}};
  meta["backbone"] = to_json(model.backbones.config());
  meta["head"] = model.head.to_json();
  if (model.fc_head) {
    const bool fc = model.fc_head->kind() == backbone::HeadKind::fully_connected;
    meta["fc_head"] = {{"kind", fc ? "fully_connected" : "linear"},
                       {"inputs", model.fc_head->inputs()},
                       {"hidden", fc ? model.fc_head->parameters()[0].value.dim(0) : 0}};
  } else {
    meta["fc_head"] = nullptr;
  }
  json tensors = json::array();
  for (const auto& np : params) tensors.push_back({{"name", np.name}, {"shape", np.param->value.shape()}});
  meta["tensors"] = tensors;
  const std::string text = meta.dump();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("io", "cannot write checkpoint " + tmp.string());
    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& np : params) {
      for (float f : np.param->value.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
    out.flush();
    if (!out) throw DataError("io", "failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json read_checkpoint_metadata(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("io", "cannot open checkpoint " + path.string());
  return read_metadata(in);
}

train::GlIcnnModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("io", "cannot open checkpoint " + path.string());
  const json meta = read_metadata(in);

  train::GlIcnnModel model;
  try {
    model.task = meta.at("task").get<std::string>();
    model.config = train_config_from_json(meta.at("config"));
    model.config.seed = meta.at("seed").get<std::uint64_t>();
    const auto& g = meta.at("grid");
    backbone::PatchGrid grid(extent_of(g.at("volume_shape")), extent_of(g.at("patch_shape")));
    const auto names = g.at("names").get<std::vector<std::string>>();
    if (names.size() != grid.size()) throw DataError("bad_checkpoint", "patch name count mismatch");
    for (std::size_t i = 0; i < names.size(); ++i) grid.set_name(i, names[i]);
    model.backbones =
        backbone::BackboneSet(std::move(grid), backbone_config_from_json(meta.at("backbone")), 0);
    model.head = ebm::EbmHead::from_json(meta.at("head"));
    const auto& fc = meta.at("fc_head");
    if (!fc.is_null()) {
      const auto kind = fc.at("kind").get<std::string>() == "linear" ? backbone::HeadKind::linear
                                                                     : backbone::HeadKind::fully_connected;
      model.fc_head = backbone::DenseHead(kind, fc.at("inputs").get<std::size_t>(),
                                          std::max<std::size_t>(1, fc.at("hidden").get<std::size_t>()), 0);
    }
  } catch (const json::exception& e) {
    throw DataError("bad_checkpoint", std::string("checkpoint metadata: ") + e.what());
  }

  const auto params = collect(model);
  const auto& tensors = meta.at("tensors");
  if (tensors.size() != params.size()) {
    throw DataError("bad_checkpoint", "checkpoint lists " + std::to_string(tensors.size()) +
                                          " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    const auto shape = tensors[t].at("shape").get<nn::Shape>();
    if (tensors[t].at("name").get<std::string>() != params[t].name || shape != params[t].param->value.shape()) {
      throw DataError("bad_checkpoint", "tensor " + std::to_string(t) + " (" + params[t].name +
                                            ") does not match the model architecture");
    }
    for (float& f : params[t].param->value.values()) {
      f = std::bit_cast<float>(get_le<std::uint32_t>(in, params[t].name));
    }
    params[t].param->zero_grad();
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("bad_checkpoint", "trailing bytes after weight blobs");
  }
  return model;
}

}  // namespace glicnn
