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

#ifndef DOCDS_DOCUMENT_BUILDER_H_
#define DOCDS_DOCUMENT_BUILDER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "docds/corpus.h"

namespace docds {

// Token placed between consecutive sentences of a document. It counts
// against the document token budget.
inline constexpr const char* kSentenceSeparator = "[SENT]";

enum class DocMode {
  kEntity,  // all groups of a head packed together
  kPair,    // one document per (head, tail) group
  kSent,    // one randomly drawn sentence per (head, tail) group
};

DocMode parse_doc_mode(const std::string& name);
std::string to_string(DocMode mode);

struct BuilderConfig {
  int max_tokens = 300;    // M
  int max_sentences = 15;  // N
  DocMode mode = DocMode::kEntity;
  std::uint64_t seed = 0;  // sentence draw in kSent mode

  void validate() const;
};

// Sentences shared by one ordered entity pair, shortest first.
struct PairGroup {
  std::string head;
  std::string tail;
  std::vector<SentenceRecord> sentences;
};

struct SourceGroup {
  std::string tail;
  std::vector<std::string> sentence_ids;

  friend bool operator==(const SourceGroup&, const SourceGroup&) = default;
};

struct PseudoDocument {
  std::string doc_id;
  std::string head;
  std::vector<std::string> tokens;
  // Mentions in document coordinates, sorted, keyed by entity id.
  std::map<std::string, std::vector<MentionSpan>> mention_index;
  std::vector<SourceGroup> source_groups;

  friend bool operator==(const PseudoDocument&, const PseudoDocument&) = default;
};

struct BuildStats {
  std::size_t hard_cuts = 0;         // oversize sentences cut mid-sentence
  std::size_t dropped_mentions = 0;  // mentions crossing a hard cut
};

// Sorted by (token count, sentence id), truncated to the N shortest.
std::vector<PairGroup> build_groups(const PairIndex& pairs, const SentenceTable& sentences,
                                    const BuilderConfig& config);

std::vector<PseudoDocument> build_documents(const std::vector<PairGroup>& groups,
                                            const BuilderConfig& config,
                                            BuildStats* stats = nullptr);

// Token range [begin, end) of sentence `sentence` in group `group`.
struct Fragment {
  int group = 0;
  int sentence = 0;
  int begin = 0;
  int end = 0;

  friend bool operator==(const Fragment&, const Fragment&) = default;
};
using Piece = std::vector<Fragment>;

// Greedy packing plan over annotated lengths (group -> sentence -> tokens).
// Pieces hold at most `max_tokens` tokens counting one separator between
// consecutive fragments. Cuts happen at group boundaries, then sentence
// boundaries inside a group that alone exceeds the budget, then inside a
// sentence that alone exceeds it.
std::vector<Piece> plan_pieces(const std::vector<std::vector<int>>& sentence_lengths,
                               int max_tokens, std::size_t* hard_cuts = nullptr);

// Token-level view of plan_pieces: each piece is materialized with
// separators between fragments.
using AnnotatedTokens = std::vector<std::vector<std::vector<std::string>>>;
std::vector<std::vector<std::string>> split_oversize(const AnnotatedTokens& doc, int max_tokens,
                                                     std::size_t* hard_cuts = nullptr);

void write_documents(std::ostream& out, const std::vector<PseudoDocument>& docs);
void write_documents(const std::filesystem::path& path, const std::vector<PseudoDocument>& docs);
std::vector<PseudoDocument> read_documents(std::istream& in);
std::vector<PseudoDocument> read_documents(const std::filesystem::path& path);

}  // namespace docds

#endif  // DOCDS_DOCUMENT_BUILDER_H_
