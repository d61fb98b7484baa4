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

#include <algorithm>
#include <cmath>

#include "docds/errors.h"
#include "spdlog/spdlog.h"

namespace docds {
namespace {

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }
double safe_log_grad(double p) { return p > kProbFloor ? 1.0 / p : 0.0; }

std::vector<std::vector<int>> spans_by_entity(const EntityDistribution& dist) {
  std::vector<std::vector<int>> out(dist.entities.size());
  for (std::size_t j = 0; j < dist.owner.size(); ++j) out[dist.owner[j]].push_back(static_cast<int>(j));
  return out;
}

// Index of the largest entity probability among `ids`, first on ties.
int argmax_entity(const EntityDistribution& dist, const std::vector<int>& ids) {
  int best = -1;
  for (int k : ids) {
    if (best < 0 || dist.entity_probs[k] > dist.entity_probs[best]) best = k;
  }
  return best;
}

std::vector<int> non_na_entities(const EntityDistribution& dist) {
  std::vector<int> out;
  for (std::size_t k = 1; k < dist.entities.size(); ++k) out.push_back(static_cast<int>(k));
  return out;
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("loss: lambda must be >= 0");
  if (!(gamma >= 0.0)) throw ConfigError("loss: gamma must be >= 0");
}

const char* to_string(LossVariant v) {
  switch (v) {
    case LossVariant::kDSLoss: return "DSLoss";
    case LossVariant::kNoRisk: return "-risk";
    case LossVariant::kNoNoise: return "-noise";
    case LossVariant::kNoBoth: return "-both";
  }
  return "?";
}

LossVariant parse_loss_variant(const std::string& name) {
  for (auto v : {LossVariant::kDSLoss, LossVariant::kNoRisk, LossVariant::kNoNoise,
                 LossVariant::kNoBoth}) {
    if (name == to_string(v)) return v;
  }
  if (name == "dsloss") return LossVariant::kDSLoss;
  throw ConfigError("unknown loss variant '" + name + "' (DSLoss, -risk, -noise, -both)");
}

LossConfig with_variant(LossConfig base, LossVariant v) {
  base.use_risk_factor = v == LossVariant::kDSLoss || v == LossVariant::kNoNoise;
  base.use_noise_tolerant = v == LossVariant::kDSLoss || v == LossVariant::kNoRisk;
  return base;
}

std::vector<double> confidence_weights(std::span<const double> span_probs) {
  double total = 0.0;
  for (double p : span_probs) total += p;
  std::vector<double> w(span_probs.size());
  if (total <= 0.0) {
    spdlog::warn("answer spans carry no probability mass; using uniform weights");
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return w;
  }
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = span_probs[j] / total;
  return w;
}

std::vector<int> answer_indices(const EntityDistribution& dist,
                                const std::vector<std::string>& answers) {
  std::vector<int> out;
  for (const auto& a : answers) {
    if (int k = dist.index_of(a); k >= 0) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) out.push_back(0);
  return out;
}

double noise_tolerant_loss(const EntityDistribution& dist, const std::vector<int>& answers,
                           double lambda) {
  const auto spans = spans_by_entity(dist);
  double loss = 0.0;
  for (int a : answers) {
    std::vector<double> probs;
    for (int j : spans[a]) probs.push_back(dist.span_probs[j]);
    const auto w = confidence_weights(probs);
    for (std::size_t j = 0; j < probs.size(); ++j) loss -= w[j] * safe_log(probs[j]);
  }
  for (int o : non_na_entities(dist)) {
    if (std::find(answers.begin(), answers.end(), o) != answers.end()) continue;
    const double p = dist.entity_probs[o];
    loss += lambda * p * safe_log(p);
  }
  return loss;
}

double risk_factor(const EntityDistribution& dist, const std::vector<int>& answers, double gamma) {
  const double max_a = dist.entity_probs[argmax_entity(dist, answers)];
  const int o = argmax_entity(dist, non_na_entities(dist));
  const double max_p = o < 0 ? 0.0 : dist.entity_probs[o];
  return std::pow(1.0 - (max_a - max_p), gamma);
}

double cross_entropy(const EntityDistribution& dist, const std::vector<int>& answers) {
  const auto spans = spans_by_entity(dist);
  double loss = 0.0;
  for (int a : answers) {
    const double w = 1.0 / static_cast<double>(spans[a].size());
    for (int j : spans[a]) loss -= w * safe_log(dist.span_probs[j]);
  }
  return loss;
}

LossReport dsloss(const EntityDistribution& dist, const std::vector<std::string>& answers,
                  const LossConfig& config, const FrozenFactors* frozen) {
  config.validate();
  const auto answer_ids = answer_indices(dist, answers);
  const auto spans = spans_by_entity(dist);
  const auto& p = dist.span_probs;
  const std::size_t m = p.size();
  const bool detached = config.detach_weights || frozen != nullptr;
  if (frozen != nullptr && frozen->weights.size() != m) {
    throw ContractError("frozen weights do not match the span count");
  }

  LossReport rep;
  rep.weights.assign(m, 0.0);
  std::vector<double> g(m, 0.0);  // dL_n / dp per span

  if (config.use_noise_tolerant) {
    for (int a : answer_ids) {
      const auto& ja = spans[a];
      std::vector<double> pa;
      double mass = 0.0;
      for (int j : ja) {
        pa.push_back(p[j]);
        mass += p[j];
      }
      std::vector<double> w = confidence_weights(pa);
      if (frozen != nullptr) {
        for (std::size_t i = 0; i < ja.size(); ++i) w[i] = frozen->weights[ja[i]];
      }
      double weighted_log = 0.0;  // sum_k p_k log p_k, for the live-weight gradient
      for (std::size_t i = 0; i < ja.size(); ++i) {
        rep.weights[ja[i]] = w[i];
        rep.l_n -= w[i] * safe_log(pa[i]);
        weighted_log += pa[i] * safe_log(pa[i]);
      }
      for (std::size_t i = 0; i < ja.size(); ++i) {
        if (detached || mass <= 0.0) {
          g[ja[i]] -= w[i] * safe_log_grad(pa[i]);
        } else {
          g[ja[i]] += -(safe_log(pa[i]) + pa[i] * safe_log_grad(pa[i])) / mass +
                      weighted_log / (mass * mass);
        }
      }
    }
    for (std::size_t o = 1; o < dist.entities.size(); ++o) {
      if (std::binary_search(answer_ids.begin(), answer_ids.end(), static_cast<int>(o))) continue;
      const double po = dist.entity_probs[o];
      rep.reg += config.lambda * po * safe_log(po);
      const double go = config.lambda * (safe_log(po) + (po > kProbFloor ? 1.0 : 0.0));
      for (int j : spans[o]) g[j] += go;
    }
    rep.l_n += rep.reg;
  } else {
    for (int a : answer_ids) {
      const double w = 1.0 / static_cast<double>(spans[a].size());
      for (int j : spans[a]) {
        rep.weights[j] = w;
        rep.l_n -= w * safe_log(p[j]);
        g[j] -= w * safe_log_grad(p[j]);
      }
    }
  }

  if (config.use_risk_factor) {
    rep.r = frozen != nullptr ? frozen->r : risk_factor(dist, answer_ids, config.gamma);
  }
  rep.total = rep.r * rep.l_n;

  for (double& v : g) v *= rep.r;
  if (config.use_risk_factor && !detached && config.gamma != 0.0) {
    const int a_star = argmax_entity(dist, answer_ids);
    const int o_star = argmax_entity(dist, non_na_entities(dist));
    const double base = 1.0 - (dist.entity_probs[a_star] -
                               (o_star < 0 ? 0.0 : dist.entity_probs[o_star]));
    const double dr = config.gamma * std::pow(base, config.gamma - 1.0) * rep.l_n;
    for (int j : spans[a_star]) g[j] -= dr;
    if (o_star >= 0) {
      for (int j : spans[o_star]) g[j] += dr;
    }
  }

  // Softmax Jacobian: ds_m = p_m (g_m - sum_k g_k p_k).
  double mean = 0.0;
  for (std::size_t j = 0; j < m; ++j) mean += g[j] * p[j];
  rep.d_scores.resize(m);
  for (std::size_t j = 0; j < m; ++j) rep.d_scores[j] = p[j] * (g[j] - mean);
  return rep;
}

}  // namespace docds
