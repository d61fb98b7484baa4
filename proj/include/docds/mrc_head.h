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

#ifndef DOCDS_MRC_HEAD_H_
#define DOCDS_MRC_HEAD_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "docds/encoder.h"
#include "docds/tensor.h"

namespace docds {

struct StartEndScores {
  std::vector<double> start;
  std::vector<double> end;
};

// [S, E] = H * M for a d x 2 head matrix M.
StartEndScores score_tokens(const Matrix& hidden, const Matrix& span_head);

// Flattened candidate spans of one instance. Entity 0 is always NA.
struct EntityDistribution {
  std::vector<std::string> entities;
  std::vector<PieceSpan> spans;
  std::vector<int> owner;  // span -> entity index
  std::vector<double> span_scores;
  std::vector<double> span_probs;
  std::vector<double> entity_probs;
  std::vector<double> confidences;

  int index_of(const std::string& entity_id) const;  // -1 if absent
  double na_prob() const { return entity_probs.at(0); }
};

// score(i, j) = S[start] + E[end]. Throws ContractError for spans outside
// the sequence or a candidate list that does not start with NA.
EntityDistribution score_spans(const StartEndScores& se,
                               const std::vector<PackedCandidate>& candidates);

// Softmax over every span (NA included), then per-entity sums.
void span_softmax(EntityDistribution& dist);

// p / (p + p_na). Throws NumericError when both are zero.
double calibrate(double p, double p_na);
void calibrate(EntityDistribution& dist);

// score_spans + span_softmax + calibrate.
EntityDistribution distribution(const StartEndScores& se,
                                const std::vector<PackedCandidate>& candidates);

// Gradient of the loss w.r.t. the span head and hidden states, given
// dLoss/dscore for every flattened span.
void head_backward(const Matrix& hidden, const Matrix& span_head, const EntityDistribution& dist,
                   const std::vector<double>& d_span_scores, Matrix& d_span_head,
                   Matrix& d_hidden);

struct RankedEntity {
  std::string entity_id;
  double prob = 0.0;
  double conf = 0.0;
};

// Entities by probability, ties by id. Front is the top-1 answer.
std::vector<RankedEntity> rank_entities(const EntityDistribution& dist);

struct Prediction {
  std::string head;
  std::string relation;
  std::string tail;
  double prob = 0.0;
  double conf = 0.0;
  std::string doc_id;
};

struct PredictOptions {
  // Emit only the top-1 entity (nothing when it is NA). By default every
  // non-NA candidate is emitted with its confidence so that the ranking
  // downstream sees all of them.
  bool top1_only = false;
};

std::vector<Prediction> predict(const Model& model, const EncodedInput& input,
                                const Question& question, const std::string& doc_id,
                                const PredictOptions& options = {});

// Keeps one row per (head, relation, tail): the one with the highest conf.
std::vector<Prediction> merge_predictions(const std::vector<Prediction>& predictions);

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions);
void write_predictions(const std::filesystem::path& path,
                       const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions(std::istream& in);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

}  // namespace docds

#endif  // DOCDS_MRC_HEAD_H_
