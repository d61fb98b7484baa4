// Copyright 2026 The DocDS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "docds/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "docds/errors.h"

namespace docds {
namespace {

constexpr char kMagic[8] = {'D', 'O', 'C', 'D', 'S', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError("truncated checkpoint", 0);
  return v;
}

}  // namespace

nlohmann::json to_json(const EncoderConfig& c) {
  return {{"d", c.d},
          {"layers", c.layers},
          {"heads", c.heads},
          {"ffn", c.ffn_dim()},
          {"max_seq_len", c.max_seq_len},
          {"dropout", c.dropout},
          {"vocab_size", c.vocab_size},
          {"init_std", c.init_std}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.d = j.at("d").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn = j.at("ffn").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.init_std = j.at("init_std").get<double>();
  c.validate();
  return c;
}

void save_checkpoint(std::ostream& out, const Model& model, const nlohmann::json& meta) {
  nlohmann::ordered_json header;
  header["config"] = to_json(model.config);
  header["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
  auto manifest = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for_each_tensor(const_cast<ModelParams&>(model.params), [&](const std::string& name, Matrix& m) {
    manifest.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += m.size();
  });
  header["tensors"] = std::move(manifest);
  const std::string text = header.dump();

  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kCheckpointVersion);
  write_pod(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for_each_tensor(const_cast<ModelParams&>(model.params), [&](const std::string&, Matrix& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
  if (!out) throw Error("checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& meta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  save_checkpoint(out, model, meta);
}

Model load_checkpoint(std::istream& in, nlohmann::json* meta) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a checkpoint (bad magic)", 0);
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
  }
  const auto length = read_pod<std::uint64_t>(in);
  if (length > (1u << 26)) throw ParseError("checkpoint header too large", 0);
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw ParseError("truncated checkpoint header", 0);
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), 0);
  }

  Model model;
  model.config = encoder_config_from_json(header.at("config"));
  model.params = init_params(model.config, 0);
  const auto& manifest = header.at("tensors");
  std::size_t i = 0;
  for_each_tensor(model.params, [&](const std::string& name, Matrix& m) {
    if (i >= manifest.size()) throw ParseError("checkpoint lacks tensor " + name, 0);
    const auto& entry = manifest[i++];
    if (entry.at("name").get<std::string>() != name || entry.at("rows").get<int>() != m.rows() ||
        entry.at("cols").get<int>() != m.cols()) {
      throw ParseError("checkpoint tensor mismatch at " + name, 0);
    }
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(double)))) {
      throw ParseError("truncated checkpoint payload at " + name, 0);
    }
  });
  if (i != manifest.size()) throw ParseError("checkpoint has extra tensors", 0);
  if (meta != nullptr) *meta = header.value("meta", nlohmann::json::object());
  return model;
}

Model load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load_checkpoint(in, meta);
}

}  // namespace docds
