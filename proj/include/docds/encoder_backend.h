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

#ifndef DOCDS_ENCODER_BACKEND_H_
#define DOCDS_ENCODER_BACKEND_H_

#include <cstddef>
#include <map>
#include <string>

#include "docds/encoder.h"
#include "docds/tensor.h"

namespace docds {

// Produces hidden states for a packed sequence. The span head only needs
// |x| x hidden_size() rows, so a pretrained encoder can stand in for the
// built-in transformer by implementing this interface.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;
  virtual int hidden_size() const = 0;
  virtual int max_seq_len() const = 0;
  virtual Matrix encode(const EncodedInput& input) const = 0;
};

// The from-scratch transformer behind the interface. Holds a reference.
class TransformerBackend final : public EncoderBackend {
 public:
  explicit TransformerBackend(const Model& model) : model_(model) {}
  int hidden_size() const override { return model_.config.d; }
  int max_seq_len() const override { return model_.config.max_seq_len; }
  Matrix encode(const EncodedInput& input) const override { return docds::encode(model_, input); }

 private:
  const Model& model_;
};

using TensorMap = std::map<std::string, Matrix>;

// Every tensor under its stable name.
TensorMap export_tensors(const ModelParams& params);

// Overwrites the named tensors of `params` with externally trained weights
// and returns how many were copied. Unknown names, shape mismatches and
// non-finite values throw ValidationError before anything is written.
std::size_t import_tensors(ModelParams& params, const TensorMap& tensors);

}  // namespace docds

#endif  // DOCDS_ENCODER_BACKEND_H_
