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

#ifndef DOCDS_SYNTHGEN_H_
#define DOCDS_SYNTHGEN_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "docds/corpus.h"

namespace docds {

// A toy distantly supervised world. Typed entities take part in facts drawn
// from a fixed relation pool; every fact pair gets a group of template
// sentences, and distractor pairs get sentences that express nothing.
// A "noisy" fact group has only distractor sentences, so its label is wrong
// at the sentence level. Heads are split between train and test so that
// nothing learned about a particular head carries over.
struct SynthConfig {
  int n_entities = 50;
  int n_relations = 3;
  int n_facts = 200;
  int min_sentences = 1;  // per pair group
  int max_sentences = 3;
  double noise_rate = 0.3;       // share of train fact groups made noisy
  double test_noise_rate = 0.0;  // same for the test split
  double na_fraction = 0.5;      // share of (head, relation) questions without facts
  double test_fraction = 0.3;    // share of heads held out
  // Partners (fact or distractor) per head; 0 picks the largest fact count
  // plus two, so the partner count says nothing about the labels.
  int partners_per_head = 0;
  std::uint64_t seed = 7;

  void validate() const;
};

struct AnswerKeyRow {
  std::string sentence_id;
  KBTriple fact;
  bool expresses = false;
};

struct SynthSplit {
  std::vector<SentenceRecord> corpus;
  std::vector<KBTriple> kb;  // sorted
};

struct SynthStats {
  std::size_t slots = 0;             // (head, relation) questions
  std::size_t answerable_slots = 0;
  std::size_t fact_groups = 0;
  std::size_t noisy_groups = 0;      // over both splits
  std::size_t distractor_groups = 0;
};

struct SynthData {
  RelationInventory inventory;
  EntityCatalog entities;
  SynthSplit train;
  SynthSplit test;
  std::vector<AnswerKeyRow> answer_key;  // one row per fact sentence
  SynthStats stats;
};

// Number of relations available to n_relations.
int synth_relation_pool_size();

// Throws ConfigError when the config cannot be realized.
SynthData generate(const SynthConfig& config);

// <dir>/{train,test}/{corpus.jsonl,kb.tsv}, relations.tsv, entities.tsv and
// answer_key.tsv.
void write_synth(const std::filesystem::path& dir, const SynthData& data);

}  // namespace docds

#endif  // DOCDS_SYNTHGEN_H_
