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

#ifndef DOCDS_CORPUS_H_
#define DOCDS_CORPUS_H_

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace docds {

// Reserved entity id of the "no answer" candidate.
inline constexpr const char* kNaEntity = "NA";
// Slot token replaced by the head surface in question patterns.
inline constexpr const char* kEntitySlot = "[Entity]";

struct EntityRef {
  std::string entity_id;
  std::string surface;
  std::optional<std::string> entity_type;
};

// Inclusive token range [start, end] of one entity mention.
struct MentionSpan {
  int start = 0;
  int end = 0;
  std::string entity_id;

  friend auto operator<=>(const MentionSpan&, const MentionSpan&) = default;
};

struct SentenceRecord {
  std::string sentence_id;
  std::vector<std::string> tokens;
  std::vector<MentionSpan> mentions;

  friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

struct KBTriple {
  std::string head;
  std::string relation;
  std::string tail;

  friend auto operator<=>(const KBTriple&, const KBTriple&) = default;
};

struct RelationDef {
  std::string relation_id;
  std::optional<std::string> head_type;
  std::optional<std::string> tail_type;
  std::string question_pattern;
  // Additional patterns, used only when multi-question augmentation is on.
  std::vector<std::string> extra_patterns;
};

// Outcome counters shared by all loaders. Lenient loaders skip offending
// records and describe each one in `errors`.
struct LoadReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t duplicates = 0;
  std::size_t flagged = 0;  // accepted but noteworthy, e.g. self-relations
  std::vector<std::string> errors;
};

struct IngestionConfig {
  // Throw on the first bad record instead of skipping it.
  bool strict = false;
};

class RelationInventory {
 public:
  RelationInventory() = default;
  explicit RelationInventory(std::vector<RelationDef> relations);

  const std::vector<RelationDef>& relations() const { return relations_; }
  const RelationDef* find(const std::string& relation_id) const;
  bool contains(const std::string& relation_id) const { return find(relation_id) != nullptr; }
  bool empty() const { return relations_.empty(); }

 private:
  std::vector<RelationDef> relations_;
  std::unordered_map<std::string, std::size_t> index_;
};

class EntityCatalog {
 public:
  EntityCatalog() = default;
  explicit EntityCatalog(std::vector<EntityRef> entities);

  const EntityRef* find(const std::string& entity_id) const;
  // Catalog entry, or an untyped fallback whose surface is the id with
  // underscores turned into spaces.
  EntityRef resolve(const std::string& entity_id) const;
  const std::map<std::string, EntityRef>& entities() const { return entities_; }

 private:
  std::map<std::string, EntityRef> entities_;
};

// Throws ValidationError when a record breaks the SentenceRecord invariants.
void validate_sentence(const SentenceRecord& sentence);
// Throws ConfigError when the pattern does not hold exactly one entity slot.
void validate_pattern(const std::string& pattern);

struct CorpusLoad {
  std::vector<SentenceRecord> sentences;
  LoadReport report;
};

CorpusLoad parse_corpus(std::istream& in, const IngestionConfig& config = {});
CorpusLoad load_corpus(const std::filesystem::path& path, const IngestionConfig& config = {});
void write_corpus(std::ostream& out, const std::vector<SentenceRecord>& sentences);
void write_corpus(const std::filesystem::path& path, const std::vector<SentenceRecord>& sentences);

struct KBLoad {
  std::vector<KBTriple> triples;  // sorted, unique
  LoadReport report;
};

KBLoad parse_kb(std::istream& in, const RelationInventory& inventory,
                const IngestionConfig& config = {});
KBLoad load_kb(const std::filesystem::path& path, const RelationInventory& inventory,
               const IngestionConfig& config = {});
void write_kb(const std::filesystem::path& path, const std::vector<KBTriple>& triples);

RelationInventory parse_inventory(std::istream& in);
RelationInventory load_inventory(const std::filesystem::path& path);
void write_inventory(const std::filesystem::path& path, const RelationInventory& inventory);

EntityCatalog parse_entities(std::istream& in);
EntityCatalog load_entities(const std::filesystem::path& path);
void write_entities(const std::filesystem::path& path, const EntityCatalog& catalog);

using EntityPair = std::pair<std::string, std::string>;  // (head, tail)

// Ordered entity pair -> ids of sentences mentioning both entities.
// Lists are sorted by sentence id and duplicate-free.
using PairIndex = std::map<EntityPair, std::vector<std::string>>;

PairIndex index_pairs(const std::vector<SentenceRecord>& sentences);

// Sentence lookup by id.
using SentenceTable = std::unordered_map<std::string, SentenceRecord>;
SentenceTable make_sentence_table(const std::vector<SentenceRecord>& sentences);

// Splits on runs of ASCII whitespace.
std::vector<std::string> split_whitespace(const std::string& text);

}  // namespace docds

#endif  // DOCDS_CORPUS_H_
