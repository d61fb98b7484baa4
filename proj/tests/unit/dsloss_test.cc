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

#include "docds/dsloss.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "docds/errors.h"
#include "oracles/random_dist.h"

namespace docds {
namespace {

// A distribution with prescribed span probabilities: span k sits at piece k
// with start score log p_k, so the softmax returns p exactly.
EntityDistribution with_probs(const std::vector<std::pair<std::string, std::vector<double>>>& ents) {
  StartEndScores se;
  std::vector<PackedCandidate> cands;
  int pos = 0;
  for (const auto& [id, probs] : ents) {
    PackedCandidate c{id, {}};
    for (double p : probs) {
      se.start.push_back(std::log(p));
      se.end.push_back(0.0);
      c.spans.push_back({pos, pos});
      ++pos;
    }
    cands.push_back(std::move(c));
  }
  return distribution(se, cands);
}

LossConfig plain(double lambda, bool risk) {
  LossConfig c;
  c.lambda = lambda;
  c.use_risk_factor = risk;
  return c;
}

TEST(ConfidenceWeights, HandValues) {
  EXPECT_EQ(confidence_weights(std::vector<double>{0.7}), std::vector<double>{1.0});
  EXPECT_EQ(confidence_weights(std::vector<double>{0.2, 0.2}), (std::vector<double>{0.5, 0.5}));
  const auto w = confidence_weights(std::vector<double>{0.1, 0.3});
  EXPECT_NEAR(w[0], 0.25, 1e-15);
  EXPECT_NEAR(w[1], 0.75, 1e-15);
  EXPECT_EQ(confidence_weights(std::vector<double>{0.0, 0.0}), (std::vector<double>{0.5, 0.5}));
}

TEST(NoiseTolerantLoss, WorkedValue) {
  const auto d = with_probs({{"NA", {0.2}}, {"a", {0.5}}, {"o", {0.3}}});
  const double l = noise_tolerant_loss(d, {1}, 0.1);
  EXPECT_NEAR(l, -std::log(0.5) + 0.1 * 0.3 * std::log(0.3), 1e-12);
  EXPECT_NEAR(l, 0.65703, 1e-5);
}

TEST(NoiseTolerantLoss, TwoSpanAnswer) {
  const auto d = with_probs({{"NA", {0.2}}, {"a", {0.6, 0.2}}});
  EXPECT_NEAR(noise_tolerant_loss(d, {1}, 0.1),
              -(0.75 * std::log(0.6) + 0.25 * std::log(0.2)), 1e-12);
}

TEST(NoiseTolerantLoss, NaNeverEntersTheRegularizer) {
  // Answer a; NA is wrong but not penalized.
  const auto d = with_probs({{"NA", {0.6}}, {"a", {0.4}}});
  EXPECT_NEAR(noise_tolerant_loss(d, {1}, 0.1), -std::log(0.4), 1e-12);
}

TEST(RiskFactor, HandValues) {
  const auto pos = with_probs({{"NA", {0.1}}, {"a", {0.6}}, {"o", {0.3}}});
  EXPECT_EQ(risk_factor(pos, {1}, 2.0), 1.0);
  const auto neg = with_probs({{"NA", {0.9}}, {"o", {0.1}}});
  EXPECT_NEAR(risk_factor(neg, {0}, 2.0), 0.04, 1e-12);
  const auto hard = with_probs({{"NA", {0.1}}, {"a", {0.2}}, {"o", {0.7}}});
  EXPECT_NEAR(risk_factor(hard, {1}, 2.0), 2.25, 1e-12);
  const auto only_na = with_probs({{"NA", {1.0}}});
  EXPECT_NEAR(risk_factor(only_na, {0}, 2.0), 0.0, 1e-12);
}

TEST(DSLoss, TotalIsRiskTimesNoiseTolerantTerm) {
  const auto d = with_probs({{"NA", {0.2}}, {"a", {0.5}}, {"o", {0.3}}});
  const auto rep = dsloss(d, {"a"}, LossConfig{});
  EXPECT_EQ(rep.r, 1.0);
  EXPECT_NEAR(rep.total, 0.65703, 1e-5);
  EXPECT_NEAR(rep.reg, 0.1 * 0.3 * std::log(0.3), 1e-12);

  const auto neg = with_probs({{"NA", {0.9}}, {"o", {0.1}}});
  const auto n = dsloss(neg, {kNaEntity}, plain(0.0, true));
  EXPECT_NEAR(n.r, 0.04, 1e-12);
  EXPECT_NEAR(n.l_n, -std::log(0.9), 1e-12);
  EXPECT_NEAR(n.total, 0.04 * -std::log(0.9), 1e-15);
  // 0.004216 is the product with l_n rounded to 0.1054.
  EXPECT_NEAR(n.total, 0.004216, 5e-6);
}

TEST(DSLoss, BothAblationsGiveCrossEntropy) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    const auto r = testing::random_scores(rng);
    const auto d = distribution(r.se, r.candidates);
    const std::string answer = d.entities.size() > 1 ? d.entities[1] : kNaEntity;
    const auto rep = dsloss(d, {answer}, with_variant({}, LossVariant::kNoBoth));
    EXPECT_EQ(rep.r, 1.0);
    EXPECT_NEAR(rep.total, cross_entropy(d, answer_indices(d, {answer})), 1e-12);
  }
}

TEST(DSLoss, VariantSwitches) {
  EXPECT_TRUE(with_variant({}, LossVariant::kDSLoss).use_risk_factor);
  EXPECT_FALSE(with_variant({}, LossVariant::kNoRisk).use_risk_factor);
  EXPECT_TRUE(with_variant({}, LossVariant::kNoRisk).use_noise_tolerant);
  EXPECT_FALSE(with_variant({}, LossVariant::kNoNoise).use_noise_tolerant);
  EXPECT_EQ(parse_loss_variant("-both"), LossVariant::kNoBoth);
  EXPECT_THROW(parse_loss_variant("both"), ConfigError);
  LossConfig bad;
  bad.gamma = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(DSLoss, AnswersLostToTruncationFallBackToNa) {
  const auto d = with_probs({{"NA", {0.5}}, {"o", {0.5}}});
  EXPECT_EQ(answer_indices(d, {"gone"}), std::vector<int>{0});
}

TEST(DSLoss, DetachedGradientMatchesFrozenFiniteDifferences) {
  // dTotal/dscore against central differences with weights and r held fixed.
  std::mt19937_64 rng(23);
  for (int t = 0; t < 40; ++t) {
    auto r = testing::random_scores(rng, 1.0);
    auto d = distribution(r.se, r.candidates);
    if (d.entities.size() < 2) continue;
    const std::vector<std::string> answers = {d.entities[1]};
    const LossConfig cfg;
    const auto base = dsloss(d, answers, cfg);
    const FrozenFactors frozen{base.weights, base.r};
    for (std::size_t j = 0; j < d.span_scores.size(); ++j) {
      auto eval = [&](double delta) {
        EntityDistribution e = d;
        e.span_scores[j] += delta;
        span_softmax(e);
        return dsloss(e, answers, cfg, &frozen).total;
      };
      const double h = 1e-6;
      const double numeric = (eval(h) - eval(-h)) / (2 * h);
      EXPECT_NEAR(base.d_scores[j], numeric, 1e-6 * (1.0 + std::abs(numeric)));
    }
  }
}

}  // namespace
}  // namespace docds
