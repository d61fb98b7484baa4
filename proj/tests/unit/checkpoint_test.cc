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

#include <gtest/gtest.h>

#include <sstream>

#include "docds/errors.h"

namespace docds {
namespace {

Model model() {
  EncoderConfig c;
  c.d = 8;
  c.heads = 2;
  c.layers = 2;
  c.ffn = 12;
  c.max_seq_len = 16;
  c.vocab_size = 11;
  return Model{c, init_params(c, 9)};
}

TEST(Checkpoint, RoundTripIsExact) {
  const Model m = model();
  std::stringstream io;
  save_checkpoint(io, m, {{"epoch", 4}});
  nlohmann::json meta;
  const Model back = load_checkpoint(io, &meta);
  EXPECT_EQ(back.params, m.params);
  EXPECT_EQ(back.config.d, 8);
  EXPECT_EQ(back.config.layers, 2);
  EXPECT_EQ(back.config.vocab_size, 11);
  EXPECT_EQ(meta["epoch"], 4);
}

TEST(Checkpoint, CorruptInputsAreRejected) {
  std::stringstream bad("NOTADOCDSFILE");
  EXPECT_THROW(load_checkpoint(bad), ParseError);

  std::stringstream io;
  save_checkpoint(io, model());
  const std::string full = io.str();
  std::stringstream truncated(full.substr(0, full.size() - 16));
  EXPECT_THROW(load_checkpoint(truncated), ParseError);

  std::string wrong_version = full;
  wrong_version[8] = 99;
  std::stringstream v(wrong_version);
  EXPECT_THROW(load_checkpoint(v), ParseError);
}

TEST(Checkpoint, EncoderConfigJsonRoundTrip) {
  const Model m = model();
  const auto c = encoder_config_from_json(to_json(m.config));
  EXPECT_EQ(c.d, m.config.d);
  EXPECT_EQ(c.heads, m.config.heads);
  EXPECT_EQ(c.ffn, m.config.ffn);
  EXPECT_EQ(c.max_seq_len, m.config.max_seq_len);
  EXPECT_DOUBLE_EQ(c.dropout, m.config.dropout);
}

}  // namespace
}  // namespace docds
