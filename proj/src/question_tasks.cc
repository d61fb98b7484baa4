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

#include "docds/question_tasks.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "docds/errors.h"
#include "docds/hashing.h"
#include "json.hpp"

namespace docds {
namespace {

std::size_t count_subsequence(const std::vector<std::string>& text,
                              const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > text.size()) return 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + needle.size() <= text.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), text.begin() + i)) ++count;
  }
  return count;
}

}  // namespace

const Candidate* CandidateSet::find(const std::string& entity_id) const {
  for (const auto& c : candidates) {
    if (c.entity_id == entity_id) return &c;
  }
  return nullptr;
}

void InstanceConfig::validate() const {
  if (negative_keep_ratio < 0.0 || negative_keep_ratio > 1.0) {
    throw ConfigError("negative_keep_ratio must be in [0, 1]");
  }
}

Question make_question(const std::string& relation_id, const std::string& pattern,
                       const EntityRef& head) {
  if (pattern.empty()) throw ConfigError("no question pattern for relation " + relation_id);
  validate_pattern(pattern);
  const std::string slot = kEntitySlot;
  std::string text = pattern;
  text.replace(text.find(slot), slot.size(), head.surface);

  Question q{relation_id, head.entity_id, split_whitespace(text)};
  const auto surface = split_whitespace(head.surface);
  if (count_subsequence(q.text_tokens, surface) != 1) {
    throw ConfigError("question for " + head.entity_id + " under " + relation_id +
                      " does not contain the head surface exactly once");
  }
  return q;
}

Question make_question(const RelationDef& relation, const EntityRef& head) {
  return make_question(relation.relation_id, relation.question_pattern, head);
}

std::vector<const RelationDef*> admissible_relations(const EntityRef& head,
                                                     const RelationInventory& inventory) {
  std::vector<const RelationDef*> out;
  for (const auto& r : inventory.relations()) {
    if (!head.entity_type || !r.head_type || *head.entity_type == *r.head_type) {
      out.push_back(&r);
    }
  }
  return out;
}

CandidateSet build_candidates(const PseudoDocument& doc, const std::string& head) {
  CandidateSet set;
  set.candidates.push_back(Candidate{kNaEntity, {MentionSpan{0, 0, kNaEntity}}});
  // mention_index is an ordered map, so candidates come out in id order.
  for (const auto& [entity, spans] : doc.mention_index) {
    if (entity == head || spans.empty()) continue;
    set.candidates.push_back(Candidate{entity, spans});
  }
  return set;
}

std::vector<MRCInstance> build_instances(const std::vector<PseudoDocument>& docs,
                                         const std::vector<KBTriple>& kb,
                                         const RelationInventory& inventory,
                                         const EntityCatalog& entities,
                                         const InstanceConfig& config) {
  config.validate();
  std::map<std::pair<std::string, std::string>, std::set<std::string>> tails;
  for (const auto& t : kb) tails[{t.head, t.relation}].insert(t.tail);

  std::vector<MRCInstance> out;
  for (const auto& d : docs) {
    auto doc = std::make_shared<const PseudoDocument>(d);
    const EntityRef head = entities.resolve(d.head);
    CandidateSet candidates = build_candidates(d, d.head);
    for (const RelationDef* rel : admissible_relations(head, inventory)) {
      std::vector<std::string> patterns{rel->question_pattern};
      if (config.multi_question) {
        patterns.insert(patterns.end(), rel->extra_patterns.begin(), rel->extra_patterns.end());
      }
      std::vector<std::string> answers;
      if (auto it = tails.find({d.head, rel->relation_id}); it != tails.end()) {
        for (const auto& t : it->second) {
          if (t != kNaEntity && candidates.contains(t)) answers.push_back(t);
        }
      }
      if (answers.empty()) answers.push_back(kNaEntity);
      const bool negative = answers.front() == kNaEntity;

      for (std::size_t p = 0; p < patterns.size(); ++p) {
        if (negative && config.negative_keep_ratio < 1.0) {
          std::mt19937_64 rng(mix_seed(config.seed, d.doc_id + '\t' + rel->relation_id + '\t' +
                                                        std::to_string(p)));
          if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= config.negative_keep_ratio) {
            continue;
          }
        }
        out.push_back(MRCInstance{doc, make_question(rel->relation_id, patterns[p], head),
                                  candidates, answers});
      }
    }
  }
  return out;
}

void write_instances(std::ostream& out, const std::vector<MRCInstance>& instances) {
  for (const auto& inst : instances) {
    nlohmann::ordered_json j;
    j["doc_id"] = inst.doc->doc_id;
    j["relation_id"] = inst.question.relation_id;
    j["head"] = inst.question.head;
    j["question_tokens"] = inst.question.text_tokens;
    auto cands = nlohmann::ordered_json::array();
    for (const auto& c : inst.candidates.candidates) {
      auto spans = nlohmann::ordered_json::array();
      for (const auto& s : c.spans) spans.push_back({s.start, s.end});
      cands.push_back({{"entity_id", c.entity_id}, {"spans", std::move(spans)}});
    }
    j["candidates"] = std::move(cands);
    j["answers"] = inst.answers;
    out << j.dump() << '\n';
  }
}

void write_instances(const std::filesystem::path& path, const std::vector<MRCInstance>& instances) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_instances(out, instances);
}

std::vector<MRCInstance> read_instances(std::istream& in,
                                        const std::vector<PseudoDocument>& docs) {
  std::unordered_map<std::string, std::shared_ptr<const PseudoDocument>> by_id;
  for (const auto& d : docs) by_id.emplace(d.doc_id, std::make_shared<const PseudoDocument>(d));

  std::vector<MRCInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      MRCInstance inst;
      const auto doc_id = j.at("doc_id").get<std::string>();
      auto it = by_id.find(doc_id);
      if (it == by_id.end()) throw ParseError("unknown doc_id " + doc_id, line_no);
      inst.doc = it->second;
      inst.question = Question{j.at("relation_id").get<std::string>(),
                               j.at("head").get<std::string>(),
                               j.at("question_tokens").get<std::vector<std::string>>()};
      for (const auto& c : j.at("candidates")) {
        Candidate cand{c.at("entity_id").get<std::string>(), {}};
        for (const auto& s : c.at("spans")) {
          cand.spans.push_back(MentionSpan{s.at(0).get<int>(), s.at(1).get<int>(), cand.entity_id});
        }
        inst.candidates.candidates.push_back(std::move(cand));
      }
      inst.answers = j.at("answers").get<std::vector<std::string>>();
      for (const auto& a : inst.answers) {
        if (!inst.candidates.contains(a)) {
          throw ParseError("answer " + a + " is not a candidate", line_no);
        }
      }
      out.push_back(std::move(inst));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed instance: ") + e.what(), line_no);
    }
  }
  return out;
}

std::vector<MRCInstance> read_instances(const std::filesystem::path& path,
                                        const std::vector<PseudoDocument>& docs) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_instances(in, docs);
}

}  // namespace docds
