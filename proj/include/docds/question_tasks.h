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

#ifndef DOCDS_QUESTION_TASKS_H_
#define DOCDS_QUESTION_TASKS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "docds/corpus.h"
#include "docds/document_builder.h"

namespace docds {

struct Question {
  std::string relation_id;
  std::string head;
  std::vector<std::string> text_tokens;

  friend bool operator==(const Question&, const Question&) = default;
};

struct Candidate {
  std::string entity_id;
  std::vector<MentionSpan> spans;  // document coordinates; NA holds (0,0)

  bool is_na() const { return entity_id == kNaEntity; }
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// NA first, then the remaining entities in id order.
struct CandidateSet {
  std::vector<Candidate> candidates;

  const Candidate* find(const std::string& entity_id) const;
  bool contains(const std::string& entity_id) const { return find(entity_id) != nullptr; }
  std::size_t size() const { return candidates.size(); }
};

struct MRCInstance {
  std::shared_ptr<const PseudoDocument> doc;
  Question question;
  CandidateSet candidates;
  std::vector<std::string> answers;  // sorted; {NA} when unanswered
};

struct InstanceConfig {
  // Probability of keeping an instance whose answer is NA.
  double negative_keep_ratio = 1.0;
  // Ask one question per extra pattern as well.
  bool multi_question = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Fills the entity slot of `pattern` with the head surface.
Question make_question(const std::string& relation_id, const std::string& pattern,
                       const EntityRef& head);
Question make_question(const RelationDef& relation, const EntityRef& head);

// Relations whose head type matches the entity's type (unset on either side
// matches everything), in inventory order.
std::vector<const RelationDef*> admissible_relations(const EntityRef& head,
                                                     const RelationInventory& inventory);

CandidateSet build_candidates(const PseudoDocument& doc, const std::string& head);

std::vector<MRCInstance> build_instances(const std::vector<PseudoDocument>& docs,
                                         const std::vector<KBTriple>& kb,
                                         const RelationInventory& inventory,
                                         const EntityCatalog& entities,
                                         const InstanceConfig& config = {});

void write_instances(std::ostream& out, const std::vector<MRCInstance>& instances);
void write_instances(const std::filesystem::path& path, const std::vector<MRCInstance>& instances);

// Reattaches instances to their documents by doc_id.
std::vector<MRCInstance> read_instances(std::istream& in,
                                        const std::vector<PseudoDocument>& docs);
std::vector<MRCInstance> read_instances(const std::filesystem::path& path,
                                        const std::vector<PseudoDocument>& docs);

}  // namespace docds

#endif  // DOCDS_QUESTION_TASKS_H_
