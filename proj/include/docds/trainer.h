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

#ifndef DOCDS_TRAINER_H_
#define DOCDS_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "docds/dsloss.h"
#include "docds/encoder.h"
#include "docds/mrc_head.h"
#include "docds/question_tasks.h"

namespace docds {

// An instance packed once for the encoder.
struct TrainingExample {
  std::string doc_id;
  Question question;
  std::vector<std::string> answers;
  EncodedInput input;
};

std::vector<TrainingExample> pack_instances(const std::vector<MRCInstance>& instances,
                                            const WordPieceVocab& vocab, int max_seq_len);

// Forward pass, loss, and (when `grads` is set) backward pass of one example.
// Gradients are scaled by `scale` and added into `grads`.
LossReport loss_and_grad(const Model& model, const EncodedInput& input,
                         const std::vector<std::string>& answers, const LossConfig& loss,
                         ModelParams* grads, std::mt19937_64* dropout_rng = nullptr,
                         const FrozenFactors* frozen = nullptr, double scale = 1.0);

struct TrainConfig {
  double learning_rate = 3e-5;
  int batch_size = 32;
  int epochs = 30;
  double warmup_proportion = 0.1;
  double max_grad_norm = 1.0;
  int patience = 3;  // epochs without validation gain before stopping
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 13;
  // Where a batch that produced a non-finite loss is written.
  std::filesystem::path dump_dir = ".";

  void validate() const;
};

class Adam {
 public:
  Adam(const ModelParams& like, double beta1, double beta2, double eps);
  void step(ModelParams& params, const ModelParams& grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  ModelParams m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

// Linear warmup to the base rate, then linear decay to zero.
double scheduled_rate(std::size_t step, std::size_t total_steps, const TrainConfig& config);

// Rescales to `max_norm` when the global L2 norm exceeds it; returns the
// norm before clipping.
double clip_gradients(ModelParams& grads, double max_norm);

struct HeadSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Whole head entities go to validation until `fraction` of heads is reached.
HeadSplit split_by_head(const std::vector<TrainingExample>& examples, double fraction,
                        std::uint64_t seed);

std::vector<Prediction> predict_all(const Model& model, const std::vector<TrainingExample>& examples,
                                    const PredictOptions& options = {});

// AUC of merged predictions against the non-NA labels of `examples`; 0 when
// there are no such labels.
double labeled_auc(const Model& model, const std::vector<TrainingExample>& examples);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;
};

struct TrainResult {
  Model model;  // best validation epoch, or the last one without validation
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  std::size_t steps = 0;
};

TrainResult train(Model model, const std::vector<TrainingExample>& train_set,
                  const std::vector<TrainingExample>& validation_set, const TrainConfig& config,
                  const LossConfig& loss);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& history);

}  // namespace docds

#endif  // DOCDS_TRAINER_H_
