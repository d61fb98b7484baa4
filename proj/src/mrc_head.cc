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

#include "docds/mrc_head.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "docds/errors.h"
#include "spdlog/fmt/fmt.h"

namespace docds {

StartEndScores score_tokens(const Matrix& hidden, const Matrix& span_head) {
  if (span_head.rows() != hidden.cols() || span_head.cols() != 2) {
    throw ContractError("span head must be d x 2");
  }
  const Matrix se = matmul(hidden, span_head);
  StartEndScores out;
  out.start.resize(se.rows());
  out.end.resize(se.rows());
  for (int i = 0; i < se.rows(); ++i) {
    out.start[i] = se(i, 0);
    out.end[i] = se(i, 1);
  }
  return out;
}

int EntityDistribution::index_of(const std::string& entity_id) const {
  auto it = std::find(entities.begin(), entities.end(), entity_id);
  return it == entities.end() ? -1 : static_cast<int>(it - entities.begin());
}

EntityDistribution score_spans(const StartEndScores& se,
                               const std::vector<PackedCandidate>& candidates) {
  if (candidates.empty() || candidates.front().entity_id != kNaEntity) {
    throw ContractError("candidate list must start with NA");
  }
  const int n = static_cast<int>(se.start.size());
  EntityDistribution dist;
  for (const PackedCandidate& c : candidates) {
    const int k = static_cast<int>(dist.entities.size());
    dist.entities.push_back(c.entity_id);
    for (const PieceSpan& s : c.spans) {
      if (s.start < 0 || s.end >= n || s.start > s.end) {
        throw ContractError(fmt::format("span ({}, {}) of {} outside sequence of {}", s.start,
                                        s.end, c.entity_id, n));
      }
      dist.spans.push_back(s);
      dist.owner.push_back(k);
      dist.span_scores.push_back(se.start[s.start] + se.end[s.end]);
    }
  }
  return dist;
}

void span_softmax(EntityDistribution& dist) {
  const auto& s = dist.span_scores;
  const double mx = *std::max_element(s.begin(), s.end());
  dist.span_probs.resize(s.size());
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    dist.span_probs[i] = std::exp(s[i] - mx);
    z += dist.span_probs[i];
  }
  for (double& p : dist.span_probs) p /= z;
  dist.entity_probs.assign(dist.entities.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) dist.entity_probs[dist.owner[i]] += dist.span_probs[i];
}

double calibrate(double p, double p_na) {
  if (p + p_na == 0.0) throw NumericError("confidence undefined: p and p(NA) are both zero");
  return p / (p + p_na);
}

void calibrate(EntityDistribution& dist) {
  const double p_na = dist.na_prob();
  dist.confidences.resize(dist.entity_probs.size());
  for (std::size_t k = 0; k < dist.entity_probs.size(); ++k) {
    dist.confidences[k] = k == 0 ? 0.5 : calibrate(dist.entity_probs[k], p_na);
  }
}

EntityDistribution distribution(const StartEndScores& se,
                                const std::vector<PackedCandidate>& candidates) {
  EntityDistribution dist = score_spans(se, candidates);
  span_softmax(dist);
  calibrate(dist);
  return dist;
}

void head_backward(const Matrix& hidden, const Matrix& span_head, const EntityDistribution& dist,
                   const std::vector<double>& d_span_scores, Matrix& d_span_head,
                   Matrix& d_hidden) {
  Matrix d_se(hidden.rows(), 2);
  for (std::size_t i = 0; i < dist.spans.size(); ++i) {
    d_se(dist.spans[i].start, 0) += d_span_scores[i];
    d_se(dist.spans[i].end, 1) += d_span_scores[i];
  }
  matmul_tn_acc(hidden, d_se, d_span_head);
  d_hidden = Matrix(hidden.rows(), hidden.cols());
  matmul_nt_acc(d_se, span_head, d_hidden);
}

std::vector<RankedEntity> rank_entities(const EntityDistribution& dist) {
  std::vector<RankedEntity> out;
  for (std::size_t k = 0; k < dist.entities.size(); ++k) {
    out.push_back({dist.entities[k], dist.entity_probs[k], dist.confidences[k]});
  }
  std::sort(out.begin(), out.end(), [](const RankedEntity& a, const RankedEntity& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return a.entity_id < b.entity_id;
  });
  return out;
}

std::vector<Prediction> predict(const Model& model, const EncodedInput& input,
                                const Question& question, const std::string& doc_id,
                                const PredictOptions& options) {
  const Matrix hidden = encode(model, input);
  const EntityDistribution dist =
      distribution(score_tokens(hidden, model.params.span_head), input.candidates);
  std::vector<Prediction> out;
  for (const RankedEntity& e : rank_entities(dist)) {
    if (options.top1_only && !out.empty()) break;
    if (e.entity_id == kNaEntity) {
      if (options.top1_only) break;
      continue;
    }
    out.push_back({question.head, question.relation_id, e.entity_id, e.prob, e.conf, doc_id});
  }
  return out;
}

std::vector<Prediction> merge_predictions(const std::vector<Prediction>& predictions) {
  std::map<std::tuple<std::string, std::string, std::string>, Prediction> best;
  for (const Prediction& p : predictions) {
    auto [it, inserted] = best.try_emplace({p.head, p.relation, p.tail}, p);
    if (!inserted && p.conf > it->second.conf) it->second = p;
  }
  std::vector<Prediction> out;
  out.reserve(best.size());
  for (auto& [k, p] : best) out.push_back(std::move(p));
  return out;
}

namespace {
constexpr const char* kPredictionHeader = "head_id\trelation_id\ttail_id\tentity_prob\tconf\tdoc_id";

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("bad number '" + s + "'", line);
  }
  return v;
}
}  // namespace

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions) {
  out << kPredictionHeader << '\n';
  for (const Prediction& p : predictions) {
    out << fmt::format("{}\t{}\t{}\t{:.17g}\t{:.17g}\t{}\n", p.head, p.relation, p.tail, p.prob,
                       p.conf, p.doc_id);
  }
}

void write_predictions(const std::filesystem::path& path,
                       const std::vector<Prediction>& predictions) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_predictions(out, predictions);
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == kPredictionHeader) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      const auto tab = line.find('\t', pos);
      f.push_back(line.substr(pos, tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (f.size() != 6) throw ParseError("expected 6 columns, got " + std::to_string(f.size()), line_no);
    if (f[2] == kNaEntity) throw ParseError("NA tail in prediction file", line_no);
    out.push_back({f[0], f[1], f[2], parse_double(f[3], line_no), parse_double(f[4], line_no), f[5]});
  }
  return out;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_predictions(in);
}

}  // namespace docds
