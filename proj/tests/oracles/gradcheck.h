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

#ifndef DOCDS_TESTS_ORACLES_GRADCHECK_H_
#define DOCDS_TESTS_ORACLES_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "docds/dsloss.h"
#include "docds/encoder.h"
#include "docds/trainer.h"

namespace docds::testing {

// A random packed instance over a tiny vocabulary. Candidate k > 0 gets
// `spans_per_candidate[k-1]` disjoint spans inside the document region.
inline EncodedInput random_input(std::mt19937_64& rng, int vocab_size, int length,
                                 const std::vector<int>& spans_per_candidate) {
  EncodedInput in;
  const int q_len = 3;
  std::uniform_int_distribution<int> tok(5, vocab_size - 1);
  in.pieces.push_back(2);
  for (int i = 0; i < q_len; ++i) in.pieces.push_back(tok(rng));
  in.pieces.push_back(3);
  in.document_offset = static_cast<int>(in.pieces.size());
  while (static_cast<int>(in.pieces.size()) < length - 1) in.pieces.push_back(tok(rng));
  in.pieces.push_back(3);
  const int n = static_cast<int>(in.pieces.size());
  in.segment_ids.resize(n);
  in.positions.resize(n);
  in.indicator_ids.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    in.segment_ids[i] = i < in.document_offset ? 0 : 1;
    in.positions[i] = i;
  }
  in.candidates.push_back({"NA", {{0, 0}}});
  // Disjoint slots of width <= 2 across the document region.
  std::vector<int> starts;
  for (int s = in.document_offset; s + 1 < n - 1; s += 2) starts.push_back(s);
  std::shuffle(starts.begin(), starts.end(), rng);
  std::size_t next = 0;
  for (std::size_t k = 0; k < spans_per_candidate.size(); ++k) {
    PackedCandidate c{"e" + std::to_string(k + 1), {}};
    for (int j = 0; j < spans_per_candidate[k] && next < starts.size(); ++j) {
      const int s = starts[next++];
      const int e = s + static_cast<int>(rng() % 2);
      c.spans.push_back({s, e});
      for (int i = s; i <= e; ++i) in.indicator_ids[i] = 1;
    }
    std::sort(c.spans.begin(), c.spans.end(),
              [](const PieceSpan& a, const PieceSpan& b) { return a.start < b.start; });
    in.candidates.push_back(std::move(c));
  }
  return in;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Central differences on every `stride`-th coordinate of every tensor.
// Relative error is |a - n| / max(|a| + |n|, floor) with a small absolute
// floor so that coordinates with a vanishing gradient do not dominate.
// Attention key biases have an exactly zero gradient; at h = 1e-5 their
// roundoff (about 1e-10) would exceed 1e-4 of the floor, so h = 1e-4.
inline GradCheckResult check_gradients(const Model& model, const EncodedInput& input,
                                       const std::vector<std::string>& answers,
                                       const LossConfig& loss, std::size_t stride = 1,
                                       double h = 1e-4, double floor = 1e-6) {
  ModelParams grads = zeros_like(model.params);
  const LossReport base = loss_and_grad(model, input, answers, loss, &grads);
  // Detached factors are constants of the objective, so the numeric side
  // freezes them at the base point.
  FrozenFactors frozen{base.weights, base.r};
  const FrozenFactors* fz = loss.detach_weights ? &frozen : nullptr;

  Model probe = model;
  std::vector<Matrix*> p_tensors, g_tensors;
  std::vector<std::string> names;
  for_each_tensor(probe.params, [&](const std::string& name, Matrix& m) {
    p_tensors.push_back(&m);
    names.push_back(name);
  });
  for_each_tensor(grads, [&](const std::string&, Matrix& m) { g_tensors.push_back(&m); });

  GradCheckResult out;
  std::size_t counter = 0;
  for (std::size_t t = 0; t < p_tensors.size(); ++t) {
    Matrix& p = *p_tensors[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (counter++ % stride != 0) continue;
      const double orig = p[i];
      p[i] = orig + h;
      const double up = loss_and_grad(probe, input, answers, loss, nullptr, nullptr, fz).total;
      p[i] = orig - h;
      const double down = loss_and_grad(probe, input, answers, loss, nullptr, nullptr, fz).total;
      p[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = (*g_tensors[t])[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max(std::abs(analytic) + std::abs(numeric), floor);
      ++out.checked;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst_tensor = names[t] + "[" + std::to_string(i) + "]";
        out.worst_analytic = analytic;
        out.worst_numeric = numeric;
      }
    }
  }
  return out;
}

}  // namespace docds::testing

#endif  // DOCDS_TESTS_ORACLES_GRADCHECK_H_
