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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "docds/errors.h"
#include "docds/kernels.h"

namespace docds {
namespace {

constexpr double kLayerNormEps = 1e-6;

// Copies columns [col, col + width) of `m` into a dense matrix.
Matrix take_columns(const Matrix& m, int col, int width) {
  Matrix out(m.rows(), width);
  for (int r = 0; r < m.rows(); ++r) {
    std::copy_n(m.row(r).data() + col, width, out.row(r).data());
  }
  return out;
}

void put_columns(const Matrix& src, int col, Matrix& dst) {
  for (int r = 0; r < src.rows(); ++r) {
    std::copy_n(src.row(r).data(), src.cols(), dst.row(r).data() + col);
  }
}

Matrix linear(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y(x.rows(), w.cols());
  matmul_acc(x, w, y);
  add_row_bias(y, b);
  return y;
}

// dW += x^T dy, db += colsum(dy); returns dy w^T.
Matrix linear_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix& dw,
                       Matrix& db) {
  matmul_tn_acc(x, dy, dw);
  accumulate_column_sums(dy, db);
  Matrix dx(x.rows(), x.cols());
  matmul_nt_acc(dy, w, dx);
  return dx;
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, Matrix& hat,
                  std::vector<double>& rstd) {
  const int n = x.rows();
  const int d = x.cols();
  hat = Matrix(n, d);
  rstd.assign(n, 0.0);
  Matrix y(n, d);
  for (int i = 0; i < n; ++i) {
    auto xi = x.row(i);
    double mean = 0.0;
    for (double v : xi) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : xi) var += (v - mean) * (v - mean);
    var /= d;
    const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
    rstd[i] = rs;
    for (int j = 0; j < d; ++j) {
      const double h = (xi[j] - mean) * rs;
      hat(i, j) = h;
      y(i, j) = h * gain[j] + bias[j];
    }
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& hat, const std::vector<double>& rstd,
                           const Matrix& gain, Matrix& dgain, Matrix& dbias) {
  const int n = dy.rows();
  const int d = dy.cols();
  Matrix dx(n, d);
  std::vector<double> dhat(d);
  for (int i = 0; i < n; ++i) {
    double mean_dhat = 0.0;
    double mean_dhat_hat = 0.0;
    for (int j = 0; j < d; ++j) {
      dgain[j] += dy(i, j) * hat(i, j);
      dbias[j] += dy(i, j);
      dhat[j] = dy(i, j) * gain[j];
      mean_dhat += dhat[j];
      mean_dhat_hat += dhat[j] * hat(i, j);
    }
    mean_dhat /= d;
    mean_dhat_hat /= d;
    for (int j = 0; j < d; ++j) {
      dx(i, j) = rstd[i] * (dhat[j] - mean_dhat - hat(i, j) * mean_dhat_hat);
    }
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

void softmax_rows(Matrix& m) {
  for (int i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double z = 0.0;
    for (double& v : r) {
      v = std::exp(v - mx);
      z += v;
    }
    for (double& v : r) v /= z;
  }
}

// Inverted-dropout scales, or an empty matrix when dropout is inactive.
Matrix dropout_mask(int rows, int cols, double rate, std::mt19937_64* rng) {
  if (rng == nullptr || rate <= 0.0) return {};
  Matrix mask(rows, cols);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (double& v : mask.values()) v = keep(*rng) ? scale : 0.0;
  return mask;
}

void apply_mask(Matrix& m, const Matrix& mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < m.size(); ++i) m[i] *= mask[i];
}

void add_into(const Matrix& x, Matrix& y) {
  kernels::active().add(x.data(), y.data(), x.size());
}

Matrix layer_forward(const LayerParams& p, const EncoderConfig& config, const Matrix& x,
                     LayerTape& t, std::mt19937_64* rng) {
  const int n = x.rows();
  const int d = config.d;
  const int dk = d / config.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  t.x_in = x;
  t.a_in = layer_norm(x, p.ln1_gain, p.ln1_bias, t.ln1_hat, t.ln1_rstd);
  t.q = linear(t.a_in, p.wq, p.bq);
  t.k = linear(t.a_in, p.wk, p.bk);
  t.v = linear(t.a_in, p.wv, p.bv);
  t.ctx = Matrix(n, d);
  t.probs.clear();
  for (int h = 0; h < config.heads; ++h) {
    const Matrix qh = take_columns(t.q, h * dk, dk);
    const Matrix kh = take_columns(t.k, h * dk, dk);
    const Matrix vh = take_columns(t.v, h * dk, dk);
    Matrix scores(n, n);
    matmul_nt_acc(qh, kh, scores);
    kernels::active().scale(scale, scores.data(), scores.size());
    softmax_rows(scores);
    Matrix ch(n, dk);
    matmul_acc(scores, vh, ch);
    put_columns(ch, h * dk, t.ctx);
    t.probs.push_back(std::move(scores));
  }
  Matrix attn = linear(t.ctx, p.wo, p.bo);
  t.attn_mask = dropout_mask(n, d, config.dropout, rng);
  apply_mask(attn, t.attn_mask);
  t.x_mid = x;
  add_into(attn, t.x_mid);

  t.f_in = layer_norm(t.x_mid, p.ln2_gain, p.ln2_bias, t.ln2_hat, t.ln2_rstd);
  t.pre_act = linear(t.f_in, p.w1, p.b1);
  t.act = Matrix(n, t.pre_act.cols());
  for (std::size_t i = 0; i < t.act.size(); ++i) t.act[i] = gelu(t.pre_act[i]);
  Matrix ffn = linear(t.act, p.w2, p.b2);
  t.ffn_mask = dropout_mask(n, d, config.dropout, rng);
  apply_mask(ffn, t.ffn_mask);
  Matrix out = t.x_mid;
  add_into(ffn, out);
  return out;
}

Matrix layer_backward(const LayerParams& p, const EncoderConfig& config, const LayerTape& t,
                      const Matrix& d_out, LayerParams& g) {
  const int n = d_out.rows();
  const int d = config.d;
  const int dk = d / config.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  // Feed-forward block.
  Matrix d_ffn = d_out;
  apply_mask(d_ffn, t.ffn_mask);
  Matrix d_act = linear_backward(t.act, p.w2, d_ffn, g.w2, g.b2);
  for (std::size_t i = 0; i < d_act.size(); ++i) d_act[i] *= gelu_grad(t.pre_act[i]);
  Matrix d_f_in = linear_backward(t.f_in, p.w1, d_act, g.w1, g.b1);
  Matrix d_mid = d_out;
  add_into(layer_norm_backward(d_f_in, t.ln2_hat, t.ln2_rstd, p.ln2_gain, g.ln2_gain, g.ln2_bias),
           d_mid);

  // Attention block.
  Matrix d_attn = d_mid;
  apply_mask(d_attn, t.attn_mask);
  Matrix d_ctx = linear_backward(t.ctx, p.wo, d_attn, g.wo, g.bo);
  Matrix d_q(n, d), d_k(n, d), d_v(n, d);
  for (int h = 0; h < config.heads; ++h) {
    const Matrix qh = take_columns(t.q, h * dk, dk);
    const Matrix kh = take_columns(t.k, h * dk, dk);
    const Matrix vh = take_columns(t.v, h * dk, dk);
    const Matrix dch = take_columns(d_ctx, h * dk, dk);
    const Matrix& prob = t.probs[h];

    Matrix d_prob(n, n);
    matmul_nt_acc(dch, vh, d_prob);
    Matrix dvh(n, dk);
    matmul_tn_acc(prob, dch, dvh);
    for (int i = 0; i < n; ++i) {
      auto pr = prob.row(i);
      auto dp = d_prob.row(i);
      const double dot = kernels::active().dot(pr.data(), dp.data(), n);
      for (int j = 0; j < n; ++j) dp[j] = pr[j] * (dp[j] - dot) * scale;
    }
    Matrix dqh(n, dk), dkh(n, dk);
    matmul_acc(d_prob, kh, dqh);
    matmul_tn_acc(d_prob, qh, dkh);
    put_columns(dqh, h * dk, d_q);
    put_columns(dkh, h * dk, d_k);
    put_columns(dvh, h * dk, d_v);
  }
  Matrix d_a_in = linear_backward(t.a_in, p.wq, d_q, g.wq, g.bq);
  add_into(linear_backward(t.a_in, p.wk, d_k, g.wk, g.bk), d_a_in);
  add_into(linear_backward(t.a_in, p.wv, d_v, g.wv, g.bv), d_a_in);

  Matrix d_x = d_mid;
  add_into(layer_norm_backward(d_a_in, t.ln1_hat, t.ln1_rstd, p.ln1_gain, g.ln1_gain, g.ln1_bias),
           d_x);
  return d_x;
}

void check_finite(const Matrix& m, const std::string& where) {
  if (!m.all_finite()) throw NumericError("non-finite activation at " + where);
}

}  // namespace

void EncoderConfig::validate() const {
  if (d < 1 || heads < 1 || d % heads != 0) {
    throw ConfigError("encoder: d must be a positive multiple of heads");
  }
  if (layers < 0) throw ConfigError("encoder: layers must be >= 0");
  if (max_seq_len < 8) throw ConfigError("encoder: max_seq_len must be >= 8");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("encoder: dropout must be in [0, 1)");
  if (vocab_size < 1) throw ConfigError("encoder: vocab_size must be set");
}

EncodedInput pack(const Question& question, const PseudoDocument& doc,
                  const CandidateSet& candidates, const WordPieceVocab& vocab, int max_seq_len) {
  EncodedInput in;
  in.pieces.push_back(vocab.cls_id());
  for (const auto& tok : question.text_tokens) {
    for (int id : vocab.tokenize_word(tok)) in.pieces.push_back(id);
  }
  in.pieces.push_back(vocab.sep_id());
  if (static_cast<int>(in.pieces.size()) + 1 > max_seq_len) {
    throw ValidationError("question of " + question.head + "/" + question.relation_id +
                          " needs " + std::to_string(in.pieces.size() + 1) +
                          " pieces, over max_seq_len " + std::to_string(max_seq_len));
  }
  in.segment_ids.assign(in.pieces.size(), 0);
  in.document_offset = static_cast<int>(in.pieces.size());

  // Whole words only; the document tail is dropped first.
  const int budget = max_seq_len - static_cast<int>(in.pieces.size()) - 1;
  std::vector<int> first(doc.tokens.size(), -1), last(doc.tokens.size(), -1);
  int used = 0;
  for (std::size_t w = 0; w < doc.tokens.size(); ++w) {
    const auto ids = vocab.tokenize_word(doc.tokens[w]);
    if (used + static_cast<int>(ids.size()) > budget) break;
    first[w] = static_cast<int>(in.pieces.size());
    in.pieces.insert(in.pieces.end(), ids.begin(), ids.end());
    last[w] = static_cast<int>(in.pieces.size()) - 1;
    used += static_cast<int>(ids.size());
  }
  in.pieces.push_back(vocab.sep_id());
  in.segment_ids.resize(in.pieces.size(), 1);
  in.positions.resize(in.pieces.size());
  for (int i = 0; i < in.size(); ++i) in.positions[i] = i;
  in.indicator_ids.assign(in.pieces.size(), 0);

  for (const Candidate& c : candidates.candidates) {
    if (c.is_na()) {
      in.candidates.insert(in.candidates.begin(), PackedCandidate{c.entity_id, {PieceSpan{0, 0}}});
      continue;
    }
    PackedCandidate pc{c.entity_id, {}};
    for (const MentionSpan& s : c.spans) {
      if (s.start < 0 || s.end >= static_cast<int>(doc.tokens.size()) || s.start > s.end) {
        throw ContractError("candidate span outside document " + doc.doc_id);
      }
      if (first[s.start] < 0 || last[s.end] < 0) {
        ++in.dropped_spans;
        continue;
      }
      pc.spans.push_back(PieceSpan{first[s.start], last[s.end]});
      for (int i = first[s.start]; i <= last[s.end]; ++i) in.indicator_ids[i] = 1;
    }
    if (pc.spans.empty()) {
      ++in.dropped_candidates;
      continue;
    }
    in.candidates.push_back(std::move(pc));
  }
  if (in.candidates.empty() || in.candidates.front().entity_id != kNaEntity) {
    in.candidates.insert(in.candidates.begin(), PackedCandidate{kNaEntity, {PieceSpan{0, 0}}});
  }
  return in;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  std::vector<const Matrix*> ma, mb;
  for_each_tensor(const_cast<ModelParams&>(a),
                  [&](const std::string&, Matrix& m) { ma.push_back(&m); });
  for_each_tensor(const_cast<ModelParams&>(b),
                  [&](const std::string&, Matrix& m) { mb.push_back(&m); });
  if (ma.size() != mb.size()) return false;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    if (!(*ma[i] == *mb[i])) return false;
  }
  return true;
}

ModelParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const int d = config.d;
  const double s = config.init_std;
  ModelParams p;
  p.token_emb = Matrix(config.vocab_size, d);
  fill_normal(p.token_emb, s, rng);
  p.segment_emb = Matrix(2, d);
  fill_normal(p.segment_emb, s, rng);
  // Sinusoidal start for the (trainable) position table, scaled to the same
  // per-element RMS as the other embeddings.
  p.position_emb = Matrix(config.max_seq_len, d);
  for (int pos = 0; pos < config.max_seq_len; ++pos) {
    for (int i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -2.0 * (i / 2) / d);
      const double angle = pos * freq;
      p.position_emb(pos, i) = s * std::numbers::sqrt2 * (i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  p.indicator_emb = Matrix(2, d);
  fill_normal(p.indicator_emb, s, rng);

  const int f = config.ffn_dim();
  for (int l = 0; l < config.layers; ++l) {
    LayerParams lp;
    lp.ln1_gain = Matrix(1, d, 1.0);
    lp.ln1_bias = Matrix(1, d);
    lp.ln2_gain = Matrix(1, d, 1.0);
    lp.ln2_bias = Matrix(1, d);
    for (Matrix* w : {&lp.wq, &lp.wk, &lp.wv, &lp.wo}) {
      *w = Matrix(d, d);
      fill_normal(*w, s, rng);
    }
    for (Matrix* b : {&lp.bq, &lp.bk, &lp.bv, &lp.bo, &lp.b2}) *b = Matrix(1, d);
    lp.w1 = Matrix(d, f);
    fill_normal(lp.w1, s, rng);
    lp.b1 = Matrix(1, f);
    lp.w2 = Matrix(f, d);
    fill_normal(lp.w2, s, rng);
    p.layers.push_back(std::move(lp));
  }
  if (config.layers > 0) {
    p.final_gain = Matrix(1, d, 1.0);
    p.final_bias = Matrix(1, d);
  }
  p.span_head = Matrix(d, 2);
  fill_normal(p.span_head, s, rng);
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for_each_tensor(z, [](const std::string&, Matrix& m) { m.set_zero(); });
  return z;
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for_each_tensor(const_cast<ModelParams&>(params),
                  [&](const std::string&, Matrix& m) { n += m.size(); });
  return n;
}

Matrix encode(const Model& model, const EncodedInput& input, EncoderTape* tape,
              const EncodeOptions& options) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  const int n = input.size();
  if (n > cfg.max_seq_len || n > p.position_emb.rows()) {
    throw ContractError("packed input longer than max_seq_len");
  }
  std::mt19937_64* rng = cfg.dropout > 0.0 ? options.rng : nullptr;

  Matrix x(n, cfg.d);
  const auto& k = kernels::active();
  for (int i = 0; i < n; ++i) {
    const int piece = input.pieces[i];
    if (piece < 0 || piece >= p.token_emb.rows()) throw ContractError("piece id out of range");
    double* xi = x.row(i).data();
    k.add(p.token_emb.row(piece).data(), xi, cfg.d);
    k.add(p.segment_emb.row(input.segment_ids[i]).data(), xi, cfg.d);
    k.add(p.position_emb.row(input.positions[i]).data(), xi, cfg.d);
    k.add(p.indicator_emb.row(input.indicator_ids[i]).data(), xi, cfg.d);
  }
  Matrix embed_mask = dropout_mask(n, cfg.d, cfg.dropout, rng);
  apply_mask(x, embed_mask);
  check_finite(x, "embeddings");

  EncoderTape local;
  EncoderTape& t = tape != nullptr ? *tape : local;
  t.embed_mask = std::move(embed_mask);
  t.layers.resize(p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    x = layer_forward(p.layers[l], cfg, x, t.layers[l], rng);
    check_finite(x, "layer " + std::to_string(l));
  }
  if (!p.layers.empty()) {
    x = layer_norm(x, p.final_gain, p.final_bias, t.final_hat, t.final_rstd);
  }
  if (tape == nullptr) {
    // Inference: the per-layer caches are not needed past this point.
    local.layers.clear();
  }
  return x;
}

void encode_backward(const Model& model, const EncodedInput& input, const EncoderTape& tape,
                     const Matrix& d_hidden, ModelParams& grads) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  Matrix dx = d_hidden;
  if (!p.layers.empty()) {
    dx = layer_norm_backward(dx, tape.final_hat, tape.final_rstd, p.final_gain, grads.final_gain,
                             grads.final_bias);
  }
  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
    dx = layer_backward(p.layers[l], cfg, tape.layers[l], dx, grads.layers[l]);
  }
  apply_mask(dx, tape.embed_mask);
  const auto& k = kernels::active();
  for (int i = 0; i < input.size(); ++i) {
    const double* di = dx.row(i).data();
    k.add(di, grads.token_emb.row(input.pieces[i]).data(), cfg.d);
    k.add(di, grads.segment_emb.row(input.segment_ids[i]).data(), cfg.d);
    k.add(di, grads.position_emb.row(input.positions[i]).data(), cfg.d);
    k.add(di, grads.indicator_emb.row(input.indicator_ids[i]).data(), cfg.d);
  }
}

}  // namespace docds
