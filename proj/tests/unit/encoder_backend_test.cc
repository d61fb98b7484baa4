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

#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "docds/errors.h"
#include "oracles/gradcheck.h"

namespace docds {
namespace {

Model model(std::uint64_t seed) {
  EncoderConfig c;
  c.d = 8;
  c.heads = 2;
  c.layers = 1;
  c.ffn = 16;
  c.max_seq_len = 24;
  c.vocab_size = 20;
  return Model{c, init_params(c, seed)};
}

TEST(EncoderBackend, TransformerBackendIsTheBuiltInEncoder) {
  const Model m = model(1);
  const TransformerBackend backend(m);
  const EncoderBackend& api = backend;
  EXPECT_EQ(api.hidden_size(), 8);
  EXPECT_EQ(api.max_seq_len(), 24);
  std::mt19937_64 rng(2);
  const auto in = testing::random_input(rng, 20, 12, {1});
  EXPECT_EQ(api.encode(in), encode(m, in));
}

TEST(EncoderBackend, ImportedWeightsReplaceTheInitialization) {
  const Model source = model(1);
  Model target = model(2);
  ASSERT_FALSE(target.params == source.params);
  const auto tensors = export_tensors(source.params);
  EXPECT_EQ(import_tensors(target.params, tensors), tensors.size());
  EXPECT_EQ(target.params, source.params);
}

TEST(EncoderBackend, PartialImportKeepsTheRest) {
  const Model source = model(1);
  Model target = model(2);
  const Matrix before = target.params.span_head;
  import_tensors(target.params, {{"token_emb", source.params.token_emb}});
  EXPECT_EQ(target.params.token_emb, source.params.token_emb);
  EXPECT_EQ(target.params.span_head, before);
}

TEST(EncoderBackend, BadTensorsLeaveParamsUntouched) {
  Model target = model(2);
  const ModelParams before = target.params;
  EXPECT_THROW(import_tensors(target.params, {{"token_emb", Matrix(20, 8)}, {"bogus", Matrix(1, 1)}}),
               ValidationError);
  EXPECT_THROW(import_tensors(target.params, {{"token_emb", Matrix(21, 8)}}), ValidationError);
  Matrix nan(2, 8);
  nan[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(import_tensors(target.params, {{"segment_emb", nan}}), ValidationError);
  EXPECT_EQ(target.params, before);
}

}  // namespace
}  // namespace docds
