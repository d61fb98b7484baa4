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

#include "docds/evaluator.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "docds/errors.h"
#include "oracles/rank_walk.h"

namespace docds {
namespace {

KBTriple t(const std::string& h, const std::string& tail) { return {h, "r", tail}; }

TEST(Evaluate, PerfectRanking) {
  const std::set<KBTriple> gold = {t("a", "x"), t("b", "y")};
  const auto c = evaluate({{t("a", "x"), 0.1}, {t("b", "y"), 0.9}}, gold);
  EXPECT_DOUBLE_EQ(c.points.back().precision, 1.0);
  EXPECT_DOUBLE_EQ(c.points.back().recall, 1.0);
  EXPECT_DOUBLE_EQ(c.auc, 1.0);
}

TEST(Evaluate, HandTrace) {
  const std::set<KBTriple> gold = {t("a", "x"), t("c", "z")};
  const auto c = evaluate({{t("a", "x"), 0.9}, {t("b", "y"), 0.8}, {t("c", "z"), 0.7}, {t("d", "w"), 0.6}},
                          gold, {2});
  ASSERT_EQ(c.points.size(), 4u);
  const double p[] = {1.0, 0.5, 2.0 / 3.0, 0.5};
  const double r[] = {0.5, 0.5, 1.0, 1.0};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(c.points[i].precision, p[i], 1e-15);
    EXPECT_NEAR(c.points[i].recall, r[i], 1e-15);
  }
  EXPECT_DOUBLE_EQ(c.p_at.at(2), 0.5);
}

TEST(Evaluate, NoPredictions) {
  const auto c = evaluate({}, {t("a", "x")});
  EXPECT_EQ(c.auc, 0.0);
  EXPECT_TRUE(c.p_at.empty());
  EXPECT_THROW(evaluate({}, {}), ValidationError);
}

TEST(Evaluate, NaTailsNeverRankAndNonFiniteScoresFail) {
  const auto c = evaluate({{t("a", kNaEntity), 0.99}, {t("a", "x"), 0.5}}, {t("a", "x")});
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_DOUBLE_EQ(c.auc, 1.0);
  EXPECT_THROW(evaluate({{t("a", "x"), std::numeric_limits<double>::quiet_NaN()}}, {t("a", "x")}),
               NumericError);
}

TEST(Evaluate, MatchesRankWalkOracle) {
  std::mt19937_64 rng(99);
  const std::vector<int> cutoffs = {1, 2, 5, 10, 50};
  for (int trial = 0; trial < 150; ++trial) {
    const auto c = testing::random_eval_case(rng, 50);
    const auto got = evaluate(c.predictions, c.gold, cutoffs);
    const auto want = testing::rank_walk(c.predictions, c.gold, cutoffs);
    ASSERT_EQ(got.points.size(), want.precision.size());
    EXPECT_NEAR(got.auc, want.auc, 1e-12);
    EXPECT_EQ(got.p_at.size(), want.p_at.size());
    for (const auto& [n, v] : want.p_at) EXPECT_NEAR(got.p_at.at(n), v, 1e-12);
  }
}

TEST(Evaluate, MonotoneTransformsKeepTheAuc) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = testing::random_eval_case(rng, 40);
    const double base = evaluate(c.predictions, c.gold).auc;
    auto warped = c.predictions;
    for (auto& p : warped) p.score = std::exp(3.0 * p.score) - 7.0;
    EXPECT_NEAR(evaluate(warped, c.gold).auc, base, 1e-12);
    for (auto& p : warped) p.score = 1.0 / (1.0 + std::exp(-p.score));
    EXPECT_NEAR(evaluate(warped, c.gold).auc, base, 1e-12);
  }
}

TEST(Evaluate, HitAtTheBottomNeverLowersTheAuc) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = testing::random_eval_case(rng, 30);
    c.gold.insert({"fresh", "r", "gold"});
    const double before = evaluate(c.predictions, c.gold).auc;
    c.predictions.push_back({{"fresh", "r", "gold"}, -1.0});
    EXPECT_GE(evaluate(c.predictions, c.gold).auc, before - 1e-15);
  }
}

TEST(Evaluate, HitCountIsNonDecreasing) {
  std::mt19937_64 rng(9);
  auto c = testing::random_eval_case(rng, 50);
  const auto curve = evaluate(c.predictions, c.gold);
  double prev = 0.0;
  for (const auto& p : curve.points) {
    const double hits = p.precision * p.rank;
    EXPECT_GE(hits, prev - 1e-9);
    prev = hits;
  }
}

TEST(Evaluate, TiesBreakDeterministically) {
  const std::vector<RankedPrediction> a = {{t("b", "y"), 0.5}, {t("a", "x"), 0.5}};
  const std::vector<RankedPrediction> b = {{t("a", "x"), 0.5}, {t("b", "y"), 0.5}};
  const auto ra = rank_predictions(a);
  EXPECT_EQ(ra[0].triple, t("a", "x"));
  EXPECT_EQ(evaluate(a, {t("a", "x")}).auc, evaluate(b, {t("a", "x")}).auc);
}

TEST(SubsetEval, PartitionBookkeeping) {
  const std::set<KBTriple> gold = {t("a", "x"), t("b", "y"), t("c", "z")};
  const std::map<EntityPair, std::size_t> counts = {
      {{"a", "x"}, 3}, {{"b", "y"}, 1}, {{"c", "z"}, 1}, {{"d", "w"}, 2}};
  const std::vector<RankedPrediction> pred = {
      {t("a", "x"), 0.9}, {t("d", "w"), 0.8}, {t("b", "y"), 0.7}, {t("c", "q"), 0.6}};
  const auto s = subset_eval(pred, gold, counts);
  ASSERT_TRUE(s.multi.has_value());
  ASSERT_TRUE(s.single.has_value());
  EXPECT_EQ(s.multi->gold_size, 1u);
  EXPECT_EQ(s.single->gold_size, 2u);
  EXPECT_EQ(s.multi->points.size(), 2u);   // (a,x) and (d,w)
  EXPECT_EQ(s.single->points.size(), 1u);  // (c,q) has no pair count
  EXPECT_EQ(evaluate(pred, gold).hits, s.multi->hits + s.single->hits);

  const auto only_single = subset_eval(pred, {t("b", "y")}, counts);
  EXPECT_FALSE(only_single.multi.has_value());
}

TEST(ShuffleControl, IsTheNoSignalReference) {
  std::set<KBTriple> gold;
  std::vector<RankedPrediction> pred;
  for (int i = 0; i < 40; ++i) {
    const auto tr = t("h" + std::to_string(i), "x");
    pred.push_back({tr, 1.0 - i / 40.0});
    if (i % 2 == 0) gold.insert(tr);
  }
  const double ctl = shuffle_control_auc(pred, gold, 500, 3);
  EXPECT_NEAR(ctl, 0.5, 0.05);
  EXPECT_EQ(ctl, shuffle_control_auc(pred, gold, 500, 3));
  EXPECT_THROW(shuffle_control_auc(pred, gold, 0), ValidationError);
  std::set<KBTriple> all;
  for (const auto& p : pred) all.insert(p.triple);
  EXPECT_DOUBLE_EQ(shuffle_control_auc(pred, all, 10), 1.0);
}

TEST(ExtractableGold, NeedsACooccurringPair) {
  const PairIndex idx = {{{"a", "x"}, {"s1"}}};
  const auto g = extractable_gold({t("a", "x"), t("b", "y"), t("a", kNaEntity)}, idx);
  EXPECT_EQ(g, (std::set<KBTriple>{t("a", "x")}));
}

TEST(Artifacts, PrCsvHasAHeaderAndOneRowPerRank) {
  const auto c = evaluate({{t("a", "x"), 0.9}, {t("b", "y"), 0.1}}, {t("a", "x")});
  const auto path = std::filesystem::temp_directory_path() / "docds_pr_test.csv";
  write_pr_csv(path, c);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "rank,precision,recall,score");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2);
  std::filesystem::remove(path);
  const auto j = summary_json(c);
  EXPECT_DOUBLE_EQ(j["auc"].get<double>(), 1.0);
  EXPECT_TRUE(j["p@100"].is_null());
}

}  // namespace
}  // namespace docds
