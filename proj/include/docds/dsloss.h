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

#ifndef DOCDS_DSLOSS_H_
#define DOCDS_DSLOSS_H_

#include <span>
#include <string>
#include <vector>

#include "docds/mrc_head.h"

namespace docds {

inline constexpr double kProbFloor = 1e-12;

struct LossConfig {
  double lambda = 0.1;
  double gamma = 2.0;
  bool use_noise_tolerant = true;
  bool use_risk_factor = true;
  // Treat the confidence weights and the risk factor as constants.
  bool detach_weights = true;

  void validate() const;
};

// The four rows of the loss ablation.
enum class LossVariant { kDSLoss, kNoRisk, kNoNoise, kNoBoth };

const char* to_string(LossVariant v);
LossVariant parse_loss_variant(const std::string& name);
LossConfig with_variant(LossConfig base, LossVariant v);

// Values that stay fixed when checking the detached gradient numerically:
// per-span weights (0 off the answer spans) and the risk factor.
struct FrozenFactors {
  std::vector<double> weights;
  double r = 1.0;
};

struct LossReport {
  double l_n = 0.0;    // includes the regularizer
  double reg = 0.0;    // lambda * sum p log p over wrong non-NA entities
  double r = 1.0;
  double total = 0.0;  // r * l_n
  std::vector<double> weights;   // per flattened span, 0 off the answer spans
  std::vector<double> d_scores;  // dTotal / dscore per flattened span
};

// w_j = p_j / sum p. Uniform (with a warning) if every probability is zero.
std::vector<double> confidence_weights(std::span<const double> span_probs);

// Entity indices of `answers` inside `dist`. Answers that lost all their
// spans to truncation are skipped; if none remain the answer is NA.
std::vector<int> answer_indices(const EntityDistribution& dist,
                                const std::vector<std::string>& answers);

double noise_tolerant_loss(const EntityDistribution& dist, const std::vector<int>& answers,
                           double lambda);
double risk_factor(const EntityDistribution& dist, const std::vector<int>& answers, double gamma);
// Uniform weight 1/|spans| per answer entity and no regularizer.
double cross_entropy(const EntityDistribution& dist, const std::vector<int>& answers);

LossReport dsloss(const EntityDistribution& dist, const std::vector<std::string>& answers,
                  const LossConfig& config, const FrozenFactors* frozen = nullptr);

}  // namespace docds

#endif  // DOCDS_DSLOSS_H_
