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

#ifndef DOCDS_PIPELINE_H_
#define DOCDS_PIPELINE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "docds/config.h"
#include "docds/corpus.h"
#include "docds/document_builder.h"
#include "docds/dsloss.h"
#include "docds/encoder.h"
#include "docds/evaluator.h"
#include "docds/question_tasks.h"
#include "docds/synthgen.h"
#include "docds/trainer.h"
#include "docds/wordpiece.h"
#include "json.hpp"

namespace docds {

// Every knob of a run. Sections of the TOML file match the field names:
// [synth] [builder] [instances] [encoder] [train] [loss] [vocab] [run].
struct PipelineConfig {
  SynthConfig synth;
  BuilderConfig builder;
  InstanceConfig instances;
  EncoderConfig encoder;
  TrainConfig train;
  LossConfig loss;
  WordPieceVocab::TrainOptions vocab;
  double validation_fraction = 0.2;
  std::uint64_t model_seed = 1;
  bool top1_only = false;
};

// Table-3 style defaults, with the encoder shrunk to desk scale.
PipelineConfig default_pipeline_config();

// Overwrites fields present in `table`; unknown keys are a ConfigError.
void apply_config(const ConfigTable& table, PipelineConfig& config);
nlohmann::ordered_json to_json(const PipelineConfig& config);

// Train and test halves of a distantly labeled dataset.
struct Dataset {
  RelationInventory inventory;
  EntityCatalog entities;
  std::vector<SentenceRecord> train_corpus;
  std::vector<KBTriple> train_kb;
  std::vector<SentenceRecord> test_corpus;
  std::vector<KBTriple> test_kb;
};

Dataset dataset_from_synth(const SynthData& data);
// Reads the layout written by write_synth.
Dataset load_dataset(const std::filesystem::path& dir);

std::vector<PseudoDocument> make_documents(const std::vector<SentenceRecord>& corpus,
                                           const BuilderConfig& config, BuildStats* stats = nullptr);

// Vocabulary over document tokens and question tokens.
WordPieceVocab train_vocab(const std::vector<PseudoDocument>& docs,
                           const std::vector<MRCInstance>& instances,
                           const WordPieceVocab::TrainOptions& options);

struct RunResult {
  TrainResult training;
  std::vector<Prediction> predictions;  // merged, test split
  std::set<KBTriple> gold;
  PRCurve curve;
  SubsetCurves subsets;
  std::size_t train_instances = 0;
  std::size_t test_instances = 0;
  nlohmann::ordered_json summary;
};

// Documents, instances, vocabulary, training, prediction and evaluation.
// Writes artifacts below `out_dir` unless it is empty.
RunResult run_pipeline(const Dataset& data, const PipelineConfig& config,
                       const std::filesystem::path& out_dir = {});

enum class SweepAxis { kSentences, kLoss, kDocMode };
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepRow {
  std::string setting;
  bool ok = false;
  std::string error;
  double val_auc = 0.0;
  double auc = 0.0;
  nlohmann::ordered_json summary;
};

// One run per setting of the axis. A failed run is recorded and the sweep
// goes on. `values` overrides the default settings of the axis when given;
// an explicitly empty list is a ConfigError.
std::vector<SweepRow> run_sweep(const Dataset& data, const PipelineConfig& base, SweepAxis axis,
                                const std::vector<std::string>* values = nullptr,
                                const std::filesystem::path& out_dir = {});
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

}  // namespace docds

#endif  // DOCDS_PIPELINE_H_
