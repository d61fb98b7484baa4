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

#ifndef DOCDS_CHECKPOINT_H_
#define DOCDS_CHECKPOINT_H_

#include <filesystem>
#include <iosfwd>

#include "docds/encoder.h"
#include "json.hpp"

namespace docds {

// Layout: "DOCDSCKP", uint32 version, uint64 header length, JSON header
// (encoder config, free-form metadata, tensor manifest), then the tensors as
// little-endian doubles in manifest order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

void save_checkpoint(std::ostream& out, const Model& model, const nlohmann::json& meta = {});
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& meta = {});
// Throws ParseError on a bad magic, version, or truncated payload.
Model load_checkpoint(std::istream& in, nlohmann::json* meta = nullptr);
Model load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

}  // namespace docds

#endif  // DOCDS_CHECKPOINT_H_
