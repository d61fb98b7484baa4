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

#ifndef DOCDS_ENCODER_H_
#define DOCDS_ENCODER_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "docds/document_builder.h"
#include "docds/question_tasks.h"
#include "docds/tensor.h"
#include "docds/wordpiece.h"

namespace docds {

struct EncoderConfig {
  int d = 64;
  int layers = 2;
  int heads = 4;
  int ffn = 0;  // 0 means 4 * d
  int max_seq_len = 384;
  double dropout = 0.1;
  int vocab_size = 0;
  double init_std = 0.02;

  int ffn_dim() const { return ffn > 0 ? ffn : 4 * d; }
  void validate() const;
};

// Inclusive piece range of one candidate mention in the packed sequence.
struct PieceSpan {
  int start = 0;
  int end = 0;

  friend bool operator==(const PieceSpan&, const PieceSpan&) = default;
};

struct PackedCandidate {
  std::string entity_id;
  std::vector<PieceSpan> spans;
};

// [CLS] question [SEP] document [SEP], one entry per sub-word piece.
struct EncodedInput {
  std::vector<int> pieces;
  std::vector<int> segment_ids;    // 0 question region, 1 document region
  std::vector<int> positions;
  std::vector<int> indicator_ids;  // 1 inside a non-NA candidate mention
  // Candidates that kept at least one span; NA first, mapped to (0, 0).
  std::vector<PackedCandidate> candidates;
  int document_offset = 0;  // index of the first document piece
  std::size_t dropped_spans = 0;
  std::size_t dropped_candidates = 0;

  int size() const { return static_cast<int>(pieces.size()); }
};

// Throws ValidationError if the question alone does not fit. Whitespace
// spans map to (first piece of start token, last piece of end token).
EncodedInput pack(const Question& question, const PseudoDocument& doc,
                  const CandidateSet& candidates, const WordPieceVocab& vocab, int max_seq_len);

struct LayerParams {
  Matrix ln1_gain, ln1_bias;
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln2_gain, ln2_bias;
  Matrix w1, b1, w2, b2;
};

// Encoder plus the d x 2 start/end projection of the span head.
struct ModelParams {
  Matrix token_emb, segment_emb, position_emb, indicator_emb;
  std::vector<LayerParams> layers;
  Matrix final_gain, final_bias;
  Matrix span_head;

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

// Visits every tensor with a stable name, in a fixed order.
template <typename Params, typename F>
void for_each_tensor(Params& p, F&& f) {
  f("token_emb", p.token_emb);
  f("segment_emb", p.segment_emb);
  f("position_emb", p.position_emb);
  f("indicator_emb", p.indicator_emb);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string pre = "layer" + std::to_string(i) + ".";
    f(pre + "ln1_gain", l.ln1_gain);
    f(pre + "ln1_bias", l.ln1_bias);
    f(pre + "wq", l.wq);
    f(pre + "bq", l.bq);
    f(pre + "wk", l.wk);
    f(pre + "bk", l.bk);
    f(pre + "wv", l.wv);
    f(pre + "bv", l.bv);
    f(pre + "wo", l.wo);
    f(pre + "bo", l.bo);
    f(pre + "ln2_gain", l.ln2_gain);
    f(pre + "ln2_bias", l.ln2_bias);
    f(pre + "w1", l.w1);
    f(pre + "b1", l.b1);
    f(pre + "w2", l.w2);
    f(pre + "b2", l.b2);
  }
  if (!p.layers.empty()) {
    f("final_gain", p.final_gain);
    f("final_bias", p.final_bias);
  }
  f("span_head", p.span_head);
}

ModelParams init_params(const EncoderConfig& config, std::uint64_t seed);
ModelParams zeros_like(const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

struct Model {
  EncoderConfig config;
  ModelParams params;
};

// Activations kept by a training-mode forward pass for the backward pass.
struct LayerTape {
  Matrix x_in;
  Matrix ln1_hat;
  std::vector<double> ln1_rstd;
  Matrix a_in, q, k, v;
  std::vector<Matrix> probs;  // per head, n x n
  Matrix ctx;
  Matrix attn_mask;  // dropout scale per element, empty when inactive
  Matrix x_mid;
  Matrix ln2_hat;
  std::vector<double> ln2_rstd;
  Matrix f_in, pre_act, act;
  Matrix ffn_mask;
};

struct EncoderTape {
  Matrix embed_mask;
  std::vector<LayerTape> layers;
  Matrix final_hat;
  std::vector<double> final_rstd;
};

// Dropout is active only when `rng` is non-null and config.dropout > 0.
struct EncodeOptions {
  std::mt19937_64* rng = nullptr;
};

// Hidden states H, |x| x d. Records activations in `tape` when given.
// Throws NumericError naming the layer if an activation turns non-finite.
Matrix encode(const Model& model, const EncodedInput& input, EncoderTape* tape = nullptr,
              const EncodeOptions& options = {});

// Accumulates parameter gradients given dLoss/dH.
void encode_backward(const Model& model, const EncodedInput& input, const EncoderTape& tape,
                     const Matrix& d_hidden, ModelParams& grads);

}  // namespace docds

#endif  // DOCDS_ENCODER_H_
