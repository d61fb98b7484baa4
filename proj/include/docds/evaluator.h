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

#ifndef DOCDS_EVALUATOR_H_
#define DOCDS_EVALUATOR_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "docds/corpus.h"
#include "docds/mrc_head.h"
#include "json.hpp"

namespace docds {

struct RankedPrediction {
  KBTriple triple;
  double score = 0.0;
};

struct PRPoint {
  int rank = 0;  // 1-based
  double precision = 0.0;
  double recall = 0.0;
  double score = 0.0;
  bool hit = false;
};

struct PRCurve {
  std::vector<PRPoint> points;
  double auc = 0.0;
  std::map<int, double> p_at;  // only for N <= number of predictions
  std::size_t gold_size = 0;
  std::size_t hits = 0;
};

inline const std::vector<int> kDefaultPrecisionCutoffs = {100, 200, 300};

std::vector<RankedPrediction> to_ranked(const std::vector<Prediction>& predictions);

// Drops NA tails, keeps the max score per triple, sorts by score descending
// and then by (head, relation, tail). Throws NumericError on a non-finite score.
std::vector<RankedPrediction> rank_predictions(std::vector<RankedPrediction> predictions);

// Trapezoidal area under the rank-by-rank PR polyline, which starts at
// (recall 0, precision of rank 1). Throws ValidationError on empty gold.
PRCurve evaluate(const std::vector<RankedPrediction>& predictions, const std::set<KBTriple>& gold,
                 const std::vector<int>& cutoffs = kDefaultPrecisionCutoffs);

struct SubsetCurves {
  std::optional<PRCurve> multi;   // pairs seen in more than one sentence
  std::optional<PRCurve> single;  // pairs seen in exactly one sentence
};

// Gold and predictions are both restricted to the pairs of each subset;
// a subset without gold facts has no curve.
SubsetCurves subset_eval(const std::vector<RankedPrediction>& predictions,
                         const std::set<KBTriple>& gold,
                         const std::map<EntityPair, std::size_t>& sentence_counts,
                         const std::vector<int>& cutoffs = kDefaultPrecisionCutoffs);

std::map<EntityPair, std::size_t> sentence_counts(const PairIndex& index);

// Mean AUC over `rounds` random permutations of the scores among the
// deduplicated predictions: the no-signal reference for a ranking.
double shuffle_control_auc(const std::vector<RankedPrediction>& predictions,
                           const std::set<KBTriple>& gold, int rounds = 200,
                           std::uint64_t seed = 0);

// Distinct non-NA KB triples whose pair co-occurs in at least one sentence.
std::set<KBTriple> extractable_gold(const std::vector<KBTriple>& kb, const PairIndex& index);

void write_pr_csv(const std::filesystem::path& path, const PRCurve& curve);
nlohmann::ordered_json summary_json(const PRCurve& curve);

}  // namespace docds

#endif  // DOCDS_EVALUATOR_H_
