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

#include "docds/encoder_backend.h"

#include "docds/errors.h"

namespace docds {

TensorMap export_tensors(const ModelParams& params) {
  TensorMap out;
  for_each_tensor(params, [&](const std::string& name, const Matrix& m) { out.emplace(name, m); });
  return out;
}

std::size_t import_tensors(ModelParams& params, const TensorMap& tensors) {
  std::map<std::string, Matrix*> slots;
  for_each_tensor(params, [&](const std::string& name, Matrix& m) { slots.emplace(name, &m); });

  for (const auto& [name, value] : tensors) {
    auto it = slots.find(name);
    if (it == slots.end()) throw ValidationError("unknown tensor " + name);
    const Matrix& dst = *it->second;
    if (dst.rows() != value.rows() || dst.cols() != value.cols()) {
      throw ValidationError("shape mismatch for " + name + ": expected " +
                            std::to_string(dst.rows()) + "x" + std::to_string(dst.cols()) +
                            ", got " + std::to_string(value.rows()) + "x" +
                            std::to_string(value.cols()));
    }
    if (!value.all_finite()) throw ValidationError("non-finite values in " + name);
  }
  for (const auto& [name, value] : tensors) *slots.at(name) = value;
  return tensors.size();
}

}  // namespace docds
