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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "docds/errors.h"
#include "spdlog/fmt/fmt.h"

namespace docds {

std::vector<RankedPrediction> to_ranked(const std::vector<Prediction>& predictions) {
  std::vector<RankedPrediction> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back({{p.head, p.relation, p.tail}, p.conf});
  return out;
}

std::vector<RankedPrediction> rank_predictions(std::vector<RankedPrediction> predictions) {
  std::map<KBTriple, double> best;
  for (const auto& p : predictions) {
    if (!std::isfinite(p.score)) throw NumericError("non-finite prediction score");
    if (p.triple.tail == kNaEntity) continue;
    auto [it, inserted] = best.try_emplace(p.triple, p.score);
    if (!inserted) it->second = std::max(it->second, p.score);
  }
  std::vector<RankedPrediction> out;
  out.reserve(best.size());
  for (const auto& [t, s] : best) out.push_back({t, s});
  // The map is already in triple order, so a stable sort on score settles ties.
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedPrediction& a, const RankedPrediction& b) { return a.score > b.score; });
  return out;
}

PRCurve evaluate(const std::vector<RankedPrediction>& predictions, const std::set<KBTriple>& gold,
                 const std::vector<int>& cutoffs) {
  if (gold.empty()) throw ValidationError("evaluation needs at least one gold triple");
  PRCurve curve;
  curve.gold_size = gold.size();
  const auto ranked = rank_predictions(predictions);
  const double g = static_cast<double>(gold.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const bool hit = gold.count(ranked[i].triple) > 0;
    hits += hit;
    const int rank = static_cast<int>(i) + 1;
    curve.points.push_back({rank, static_cast<double>(hits) / rank, static_cast<double>(hits) / g,
                            ranked[i].score, hit});
  }
  curve.hits = hits;
  double prev_r = 0.0;
  double prev_p = curve.points.empty() ? 0.0 : curve.points.front().precision;
  for (const auto& pt : curve.points) {
    curve.auc += (pt.recall - prev_r) * (pt.precision + prev_p) / 2.0;
    prev_r = pt.recall;
    prev_p = pt.precision;
  }
  for (int n : cutoffs) {
    if (n >= 1 && n <= static_cast<int>(curve.points.size())) {
      curve.p_at[n] = curve.points[n - 1].precision;
    }
  }
  return curve;
}

std::map<EntityPair, std::size_t> sentence_counts(const PairIndex& index) {
  std::map<EntityPair, std::size_t> out;
  for (const auto& [pair, ids] : index) out.emplace(pair, ids.size());
  return out;
}

SubsetCurves subset_eval(const std::vector<RankedPrediction>& predictions,
                         const std::set<KBTriple>& gold,
                         const std::map<EntityPair, std::size_t>& counts,
                         const std::vector<int>& cutoffs) {
  auto run = [&](bool multi) -> std::optional<PRCurve> {
    auto in_subset = [&](const KBTriple& t) {
      auto it = counts.find({t.head, t.tail});
      return it != counts.end() && it->second > 0 && (it->second > 1) == multi;
    };
    std::set<KBTriple> sub_gold;
    for (const auto& t : gold) {
      if (in_subset(t)) sub_gold.insert(t);
    }
    if (sub_gold.empty()) return std::nullopt;
    std::vector<RankedPrediction> sub_pred;
    for (const auto& p : predictions) {
      if (in_subset(p.triple)) sub_pred.push_back(p);
    }
    return evaluate(sub_pred, sub_gold, cutoffs);
  };
  return {run(true), run(false)};
}

double shuffle_control_auc(const std::vector<RankedPrediction>& predictions,
                           const std::set<KBTriple>& gold, int rounds, std::uint64_t seed) {
  if (rounds < 1) throw ValidationError("shuffle control needs at least one round");
  std::vector<RankedPrediction> order = rank_predictions(predictions);
  std::mt19937_64 rng(seed);
  double sum = 0.0;
  for (int r = 0; r < rounds; ++r) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); ++i) {
      order[i].score = static_cast<double>(order.size() - i);
    }
    sum += evaluate(order, gold, {}).auc;
  }
  return sum / rounds;
}

std::set<KBTriple> extractable_gold(const std::vector<KBTriple>& kb, const PairIndex& index) {
  std::set<KBTriple> out;
  for (const auto& t : kb) {
    if (t.tail == kNaEntity || t.relation == kNaEntity) continue;
    if (index.count({t.head, t.tail})) out.insert(t);
  }
  return out;
}

void write_pr_csv(const std::filesystem::path& path, const PRCurve& curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "rank,precision,recall,score\n";
  for (const auto& p : curve.points) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", p.rank, p.precision, p.recall, p.score);
  }
}

nlohmann::ordered_json summary_json(const PRCurve& curve) {
  nlohmann::ordered_json j;
  j["auc"] = curve.auc;
  for (int n : kDefaultPrecisionCutoffs) {
    auto it = curve.p_at.find(n);
    j[fmt::format("p@{}", n)] =
        it == curve.p_at.end() ? nlohmann::ordered_json() : nlohmann::ordered_json(it->second);
  }
  j["predictions"] = curve.points.size();
  j["gold"] = curve.gold_size;
  j["hits"] = curve.hits;
  return j;
}

}  // namespace docds
