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

#include "docds/encoder.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "docds/errors.h"
#include "oracles/gradcheck.h"

namespace docds {
namespace {

WordPieceVocab vocab() {
  return WordPieceVocab({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[SENT]", "where", "was", "born",
                         "?", "Ba", "##rack", "Obama", "in", "Hono", "##lu", "the", "United",
                         "States", ".", "one", "two", "three"});
}

// Reference segmentation: greedy longest prefix over the piece list, written
// without the vocabulary's lookup table.
int reference_piece_count(const std::vector<std::string>& pieces, const std::string& word) {
  int count = 0;
  std::size_t pos = 0;
  while (pos < word.size()) {
    std::size_t best = 0;
    for (const auto& p : pieces) {
      const bool cont = p.rfind("##", 0) == 0;
      if (cont != (pos > 0)) continue;
      const std::string body = cont ? p.substr(2) : p;
      if (body.size() > best && word.compare(pos, body.size(), body) == 0) best = body.size();
    }
    if (best == 0) return 1;  // a single [UNK]
    pos += best;
    ++count;
  }
  return count;
}

Question question(int words) {
  Question q{"r", "h", {}};
  const char* w[] = {"where", "was", "Obama", "born", "?"};
  for (int i = 0; i < words; ++i) q.text_tokens.push_back(w[i % 5]);
  return q;
}

TEST(Pack, EmptyDocumentLayout) {
  const auto v = vocab();
  PseudoDocument doc;
  const auto in = pack(question(5), doc, CandidateSet{{{kNaEntity, {{0, 0, kNaEntity}}}}}, v, 64);
  ASSERT_EQ(in.size(), 8);
  EXPECT_EQ(in.pieces[0], v.cls_id());
  EXPECT_EQ(in.pieces[6], v.sep_id());
  EXPECT_EQ(in.pieces[7], v.sep_id());
  EXPECT_EQ(in.segment_ids, (std::vector<int>{0, 0, 0, 0, 0, 0, 0, 1}));
  EXPECT_EQ(in.document_offset, 7);
  ASSERT_EQ(in.candidates.size(), 1u);
  EXPECT_EQ(in.candidates[0].spans, (std::vector<PieceSpan>{{0, 0}}));
}

TEST(Pack, SpansMapToPieceRangesOfTheReferenceSegmenter) {
  const auto v = vocab();
  PseudoDocument doc;
  doc.tokens = {"Barack", "Obama", "was", "born", "in", "Honolulu", ".", "the", "United", "States"};
  CandidateSet cands{{{kNaEntity, {{0, 0, kNaEntity}}},
                      {"Honolulu", {{5, 5, "Honolulu"}}},
                      {"US", {{8, 9, "US"}}}}};
  const auto q = question(5);
  const auto in = pack(q, doc, cands, v, 64);

  int offset = 1;
  for (const auto& w : q.text_tokens) offset += reference_piece_count(v.pieces(), w);
  ++offset;  // [SEP]
  EXPECT_EQ(in.document_offset, offset);
  std::vector<int> first, last;
  int at = offset;
  for (const auto& w : doc.tokens) {
    first.push_back(at);
    at += reference_piece_count(v.pieces(), w);
    last.push_back(at - 1);
  }
  ASSERT_EQ(in.candidates.size(), 3u);
  EXPECT_EQ(in.candidates[1].spans, (std::vector<PieceSpan>{{first[5], last[5]}}));
  EXPECT_EQ(in.candidates[2].spans, (std::vector<PieceSpan>{{first[8], last[9]}}));
  EXPECT_EQ(last[5] - first[5], 2);  // Hono ##lu ##lu
  for (int i = 0; i < in.size(); ++i) {
    const bool inside = (i >= first[5] && i <= last[5]) || (i >= first[8] && i <= last[9]);
    EXPECT_EQ(in.indicator_ids[i], inside ? 1 : 0) << i;
  }
  EXPECT_EQ(in.indicator_ids[0], 0);  // NA's [CLS] is not a mention
}

TEST(Pack, TruncatesWholeWordsFromTheTail) {
  const auto v = vocab();
  PseudoDocument doc;
  doc.tokens = {"one", "two", "Honolulu", "three"};
  CandidateSet cands{{{kNaEntity, {{0, 0, kNaEntity}}},
                      {"A", {{0, 0, "A"}, {3, 3, "A"}}},
                      {"B", {{2, 2, "B"}}}}};
  // Question takes 7 pieces, the closing [SEP] one more: 3 left for the document.
  const auto in = pack(question(5), doc, cands, v, 11);
  EXPECT_EQ(in.size(), 10);  // "Honolulu" needs 3 pieces and does not fit after two words
  EXPECT_EQ(in.dropped_spans, 2u);
  EXPECT_EQ(in.dropped_candidates, 1u);
  ASSERT_EQ(in.candidates.size(), 2u);
  EXPECT_EQ(in.candidates[1].entity_id, "A");
  EXPECT_THROW(pack(question(5), doc, cands, v, 7), ValidationError);
}

EncoderConfig toy_config(int layers, int vocab_size) {
  EncoderConfig c;
  c.d = 16;
  c.heads = 2;
  c.layers = layers;
  c.ffn = 32;
  c.max_seq_len = 32;
  c.vocab_size = vocab_size;
  c.init_std = 0.2;
  return c;
}

TEST(Encode, ShapeAndDeterminism) {
  std::mt19937_64 rng(1);
  Model m{toy_config(2, 30), {}};
  m.params = init_params(m.config, 5);
  const auto in = testing::random_input(rng, 30, 20, {2, 1});
  const Matrix a = encode(m, in);
  EXPECT_EQ(a.rows(), in.size());
  EXPECT_EQ(a.cols(), 16);
  EXPECT_EQ(encode(m, in), a);
  EXPECT_EQ(init_params(m.config, 5), m.params);
  EXPECT_FALSE(init_params(m.config, 6) == m.params);
}

TEST(Encode, ZeroLayersIsTheEmbeddingSum) {
  std::mt19937_64 rng(2);
  Model m{toy_config(0, 30), {}};
  m.params = init_params(m.config, 3);
  const auto in = testing::random_input(rng, 30, 12, {1, 1});
  const Matrix h = encode(m, in);
  const auto& p = m.params;
  for (int i = 0; i < in.size(); ++i) {
    for (int j = 0; j < 16; ++j) {
      const double want = p.token_emb(in.pieces[i], j) + p.segment_emb(in.segment_ids[i], j) +
                          p.position_emb(in.positions[i], j) +
                          p.indicator_emb(in.indicator_ids[i], j);
      EXPECT_NEAR(h(i, j), want, 1e-14);
    }
  }
}

TEST(Encode, PositionsMatter) {
  std::mt19937_64 rng(4);
  Model m{toy_config(2, 30), {}};
  m.params = init_params(m.config, 7);
  auto in = testing::random_input(rng, 30, 16, {});
  in.pieces[8] = 10;
  in.pieces[9] = 11;
  const Matrix a = encode(m, in);
  // Same pieces in swapped slots: the piece at row 9 now sits at position 9.
  auto moved = in;
  std::swap(moved.pieces[8], moved.pieces[9]);
  const Matrix b = encode(m, moved);
  double diff = 0.0;
  for (int j = 0; j < 16; ++j) diff += std::abs(a(8, j) - b(9, j));
  EXPECT_GT(diff, 1e-6);
}

TEST(Encode, SwappingPiecesWithTheirPositionsPermutesRows) {
  std::mt19937_64 rng(4);
  Model m{toy_config(2, 30), {}};
  m.params = init_params(m.config, 7);
  auto in = testing::random_input(rng, 30, 16, {});
  const Matrix a = encode(m, in);
  std::swap(in.pieces[8], in.pieces[9]);
  std::swap(in.positions[8], in.positions[9]);
  const Matrix b = encode(m, in);
  for (int j = 0; j < 16; ++j) {
    EXPECT_NEAR(a(8, j), b(9, j), 1e-12);
    EXPECT_NEAR(a(9, j), b(8, j), 1e-12);
  }
}

TEST(Encode, DropoutOnlyWithAGenerator) {
  std::mt19937_64 rng(4);
  Model m{toy_config(1, 30), {}};
  m.config.dropout = 0.5;
  m.params = init_params(m.config, 7);
  const auto in = testing::random_input(rng, 30, 16, {1});
  std::mt19937_64 drop(9);
  EXPECT_FALSE(encode(m, in, nullptr, EncodeOptions{&drop}) == encode(m, in));
  EXPECT_EQ(encode(m, in), encode(m, in));
}

TEST(Encode, NonFiniteActivationNamesTheStage) {
  std::mt19937_64 rng(4);
  Model m{toy_config(2, 30), {}};
  m.params = init_params(m.config, 7);
  m.params.layers[1].w1[0] = std::numeric_limits<double>::infinity();
  const auto in = testing::random_input(rng, 30, 16, {1});
  try {
    encode(m, in);
    FAIL() << "expected a numeric error";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
  }
}

TEST(Encode, ConfigValidation) {
  EncoderConfig c = toy_config(2, 30);
  c.heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = toy_config(2, 0);
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(toy_config(1, 5).ffn_dim(), 32);
}

TEST(Encode, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  Model m{toy_config(2, 20), {}};
  m.config.dropout = 0.0;
  m.params = init_params(m.config, 13);
  const auto in = testing::random_input(rng, 20, 14, {2, 1});
  const auto r = testing::check_gradients(m, in, {"e1"}, LossConfig{}, 7);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst_tensor;
  EXPECT_GT(r.checked, 100u);
}

}  // namespace
}  // namespace docds
