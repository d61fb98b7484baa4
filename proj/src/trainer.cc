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

#include "docds/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "docds/errors.h"
#include "docds/evaluator.h"
#include "docds/hashing.h"
#include "docds/kernels.h"
#include "json.hpp"
#include "spdlog/fmt/fmt.h"
#include "spdlog/spdlog.h"

namespace docds {
namespace {

std::vector<Matrix*> tensors(ModelParams& p) {
  std::vector<Matrix*> out;
  for_each_tensor(p, [&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

[[noreturn]] void dump_and_throw(const TrainConfig& config, const std::vector<TrainingExample>& set,
                                 const std::vector<std::size_t>& batch, int epoch,
                                 std::size_t step, const std::string& reason) {
  nlohmann::ordered_json j;
  j["reason"] = reason;
  j["epoch"] = epoch;
  j["step"] = step;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i : batch) {
    const auto& ex = set[i];
    rows.push_back({{"doc_id", ex.doc_id},
                    {"head", ex.question.head},
                    {"relation_id", ex.question.relation_id},
                    {"answers", ex.answers},
                    {"pieces", ex.input.pieces}});
  }
  j["batch"] = std::move(rows);
  const auto path = config.dump_dir / "nonfinite_batch.json";
  std::error_code ec;
  std::filesystem::create_directories(config.dump_dir, ec);
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  throw NumericError(reason + " at epoch " + std::to_string(epoch) + ", step " +
                     std::to_string(step) + "; batch written to " + path.string());
}

}  // namespace

std::vector<TrainingExample> pack_instances(const std::vector<MRCInstance>& instances,
                                            const WordPieceVocab& vocab, int max_seq_len) {
  std::vector<TrainingExample> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    out.push_back({inst.doc->doc_id, inst.question, inst.answers,
                   pack(inst.question, *inst.doc, inst.candidates, vocab, max_seq_len)});
  }
  return out;
}

LossReport loss_and_grad(const Model& model, const EncodedInput& input,
                         const std::vector<std::string>& answers, const LossConfig& loss,
                         ModelParams* grads, std::mt19937_64* dropout_rng,
                         const FrozenFactors* frozen, double scale) {
  EncoderTape tape;
  const Matrix hidden =
      encode(model, input, grads != nullptr ? &tape : nullptr, EncodeOptions{dropout_rng});
  const EntityDistribution dist =
      distribution(score_tokens(hidden, model.params.span_head), input.candidates);
  LossReport rep = dsloss(dist, answers, loss, frozen);
  if (grads != nullptr && std::isfinite(rep.total)) {
    std::vector<double> d = rep.d_scores;
    for (double& v : d) v *= scale;
    Matrix d_hidden;
    head_backward(hidden, model.params.span_head, dist, d, grads->span_head, d_hidden);
    encode_backward(model, input, tape, d_hidden, *grads);
  }
  return rep;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (warmup_proportion < 0.0 || warmup_proportion > 1.0) {
    throw ConfigError("train: warmup_proportion must be in [0, 1]");
  }
  if (!(max_grad_norm > 0.0)) throw ConfigError("train: max_grad_norm must be > 0");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
}

Adam::Adam(const ModelParams& like, double beta1, double beta2, double eps)
    : m_(zeros_like(like)), v_(zeros_like(like)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(ModelParams& params, const ModelParams& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto ps = tensors(params);
  auto gs = tensors(const_cast<ModelParams&>(grads));
  auto ms = tensors(m_);
  auto vs = tensors(v_);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    Matrix& p = *ps[k];
    const Matrix& g = *gs[k];
    Matrix& m = *ms[k];
    Matrix& v = *vs[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

double scheduled_rate(std::size_t step, std::size_t total_steps, const TrainConfig& config) {
  if (total_steps == 0) return config.learning_rate;
  const auto warm = static_cast<std::size_t>(
      std::llround(config.warmup_proportion * static_cast<double>(total_steps)));
  if (step < warm) {
    return config.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warm);
  }
  const double left = static_cast<double>(total_steps - std::min(step, total_steps));
  return config.learning_rate * left / static_cast<double>(total_steps - warm);
}

double clip_gradients(ModelParams& grads, double max_norm) {
  double sq = 0.0;
  auto gs = tensors(grads);
  const auto& k = kernels::active();
  for (Matrix* g : gs) sq += k.dot(g->data(), g->data(), g->size());
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    for (Matrix* g : gs) k.scale(max_norm / norm, g->data(), g->size());
  }
  return norm;
}

HeadSplit split_by_head(const std::vector<TrainingExample>& examples, double fraction,
                        std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) throw ConfigError("validation fraction must be in [0, 1)");
  std::set<std::string> heads;
  for (const auto& ex : examples) heads.insert(ex.question.head);
  std::vector<std::string> order(heads.begin(), heads.end());
  std::shuffle(order.begin(), order.end(), std::mt19937_64(mix_seed(seed, "validation")));
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
  const std::set<std::string> val_heads(order.begin(), order.begin() + static_cast<long>(n_val));
  HeadSplit split;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (val_heads.count(examples[i].question.head) ? split.validation : split.train).push_back(i);
  }
  return split;
}

std::vector<Prediction> predict_all(const Model& model, const std::vector<TrainingExample>& examples,
                                    const PredictOptions& options) {
  std::vector<Prediction> out;
  for (const auto& ex : examples) {
    auto p = predict(model, ex.input, ex.question, ex.doc_id, options);
    out.insert(out.end(), p.begin(), p.end());
  }
  return merge_predictions(out);
}

double labeled_auc(const Model& model, const std::vector<TrainingExample>& examples) {
  std::set<KBTriple> gold;
  for (const auto& ex : examples) {
    for (const auto& a : ex.answers) {
      if (a != kNaEntity) gold.insert({ex.question.head, ex.question.relation_id, a});
    }
  }
  if (gold.empty()) return 0.0;
  return evaluate(to_ranked(predict_all(model, examples)), gold).auc;
}

TrainResult train(Model model, const std::vector<TrainingExample>& train_set,
                  const std::vector<TrainingExample>& validation_set, const TrainConfig& config,
                  const LossConfig& loss) {
  config.validate();
  loss.validate();
  TrainResult result;
  result.model = model;
  if (config.epochs == 0) return result;
  if (train_set.empty()) throw ValidationError("no training instances");

  const std::size_t n = train_set.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  const std::size_t per_epoch = (n + bs - 1) / bs;
  const std::size_t total = per_epoch * static_cast<std::size_t>(config.epochs);
  std::mt19937_64 shuffle_rng(mix_seed(config.seed, "shuffle"));
  std::mt19937_64 dropout_rng(mix_seed(config.seed, "dropout"));
  Adam adam(model.params, config.beta1, config.beta2, config.adam_eps);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  double best_auc = -std::numeric_limits<double>::infinity();
  int stale = 0;
  std::size_t step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < n; b += bs) {
      const std::vector<std::size_t> batch(order.begin() + static_cast<long>(b),
                                           order.begin() + static_cast<long>(std::min(n, b + bs)));
      ModelParams grads = zeros_like(model.params);
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (std::size_t i : batch) {
        LossReport rep;
        try {
          rep = loss_and_grad(model, train_set[i].input, train_set[i].answers, loss, &grads,
                              &dropout_rng, nullptr, scale);
        } catch (const NumericError& e) {
          dump_and_throw(config, train_set, batch, epoch, step, e.what());
        }
        if (!std::isfinite(rep.total)) {
          dump_and_throw(config, train_set, batch, epoch, step, "non-finite loss");
        }
        loss_sum += rep.total;
      }
      clip_gradients(grads, config.max_grad_norm);
      adam.step(model.params, grads, scheduled_rate(step, total, config));
      ++step;
    }

    EpochMetrics m{epoch, loss_sum / static_cast<double>(n),
                   validation_set.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : labeled_auc(model, validation_set)};
    result.history.push_back(m);
    spdlog::info("epoch {:>3}  train_loss {:.6f}  val_auc {:.4f}", m.epoch, m.train_loss, m.val_auc);

    if (validation_set.empty()) {
      result.model = model;
      result.best_epoch = epoch;
      continue;
    }
    if (m.val_auc > best_auc) {
      best_auc = m.val_auc;
      result.model = model;
      result.best_epoch = epoch;
      result.best_val_auc = m.val_auc;
      stale = 0;
    } else if (++stale >= config.patience) {
      spdlog::info("early stop after epoch {} (best epoch {})", epoch, result.best_epoch);
      break;
    }
  }
  result.steps = step;
  return result;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& history) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,train_loss,val_auc\n";
  for (const auto& m : history) {
    out << fmt::format("{},{:.17g},{:.17g}\n", m.epoch, m.train_loss, m.val_auc);
  }
}

}  // namespace docds
