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

#include "docds/document_builder.h"

#include <algorithm>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "docds/errors.h"
#include "docds/hashing.h"
#include "json.hpp"

namespace docds {
namespace {

using ordered_json = nlohmann::ordered_json;

class PiecePlanner {
 public:
  PiecePlanner(int max_tokens, std::vector<Piece>& out) : max_(max_tokens), out_(out) {}

  bool fits(int len) const { return length_ + separator() + len <= max_; }

  void append(const Fragment& f) {
    length_ += separator() + (f.end - f.begin);
    current_.push_back(f);
  }

  void flush() {
    if (current_.empty()) return;
    out_.push_back(std::move(current_));
    current_.clear();
    length_ = 0;
  }

 private:
  int separator() const { return current_.empty() ? 0 : 1; }

  int max_;
  std::vector<Piece>& out_;
  Piece current_;
  int length_ = 0;
};

void add_source(PseudoDocument& doc, const std::string& tail, const std::string& sentence_id) {
  if (doc.source_groups.empty() || doc.source_groups.back().tail != tail) {
    doc.source_groups.push_back(SourceGroup{tail, {}});
  }
  auto& ids = doc.source_groups.back().sentence_ids;
  if (ids.empty() || ids.back() != sentence_id) ids.push_back(sentence_id);
}

// Lays out the planned pieces of `groups` (all with the same head) as documents.
void materialize(const std::vector<const PairGroup*>& groups,
                 const std::vector<std::vector<const SentenceRecord*>>& sentences,
                 const std::string& id_prefix, int max_tokens,
                 std::vector<PseudoDocument>& docs, BuildStats& stats) {
  std::vector<std::vector<int>> lengths;
  for (const auto& group : sentences) {
    auto& l = lengths.emplace_back();
    for (const SentenceRecord* s : group) l.push_back(static_cast<int>(s->tokens.size()));
  }
  std::size_t cuts = 0;
  const auto pieces = plan_pieces(lengths, max_tokens, &cuts);
  if (cuts > 0) {
    spdlog::warn("document {}: {} sentence(s) longer than {} tokens were hard-cut", id_prefix,
                 cuts, max_tokens);
  }
  stats.hard_cuts += cuts;

  int index = 0;
  for (const Piece& piece : pieces) {
    PseudoDocument doc;
    doc.doc_id = id_prefix + "#" + std::to_string(index++);
    doc.head = groups.front()->head;
    for (const Fragment& f : piece) {
      if (!doc.tokens.empty()) doc.tokens.emplace_back(kSentenceSeparator);
      const SentenceRecord& s = *sentences[f.group][f.sentence];
      const int offset = static_cast<int>(doc.tokens.size());
      doc.tokens.insert(doc.tokens.end(), s.tokens.begin() + f.begin, s.tokens.begin() + f.end);
      for (const MentionSpan& m : s.mentions) {
        if (m.start >= f.begin && m.end < f.end) {
          doc.mention_index[m.entity_id].push_back(
              MentionSpan{m.start - f.begin + offset, m.end - f.begin + offset, m.entity_id});
        } else if (m.end >= f.begin && m.start < f.end) {
          ++stats.dropped_mentions;
        }
      }
      add_source(doc, groups[f.group]->tail, s.sentence_id);
    }
    for (auto& [entity, spans] : doc.mention_index) std::sort(spans.begin(), spans.end());
    docs.push_back(std::move(doc));
  }
}

}  // namespace

DocMode parse_doc_mode(const std::string& name) {
  if (name == "entity") return DocMode::kEntity;
  if (name == "pair") return DocMode::kPair;
  if (name == "sent") return DocMode::kSent;
  throw ConfigError("unknown document mode '" + name + "' (expected entity, pair or sent)");
}

std::string to_string(DocMode mode) {
  switch (mode) {
    case DocMode::kEntity:
      return "entity";
    case DocMode::kPair:
      return "pair";
    case DocMode::kSent:
      return "sent";
  }
  return "entity";
}

void BuilderConfig::validate() const {
  if (max_tokens < 1) throw ConfigError("max_tokens (M) must be >= 1");
  if (max_sentences < 1) throw ConfigError("max_sentences (N) must be >= 1");
}

std::vector<PairGroup> build_groups(const PairIndex& pairs, const SentenceTable& sentences,
                                    const BuilderConfig& config) {
  config.validate();
  std::vector<PairGroup> groups;
  groups.reserve(pairs.size());
  for (const auto& [pair, ids] : pairs) {
    PairGroup group{pair.first, pair.second, {}};
    group.sentences.reserve(ids.size());
    for (const auto& id : ids) {
      auto it = sentences.find(id);
      if (it == sentences.end()) throw ContractError("pair index names unknown sentence " + id);
      group.sentences.push_back(it->second);
    }
    std::sort(group.sentences.begin(), group.sentences.end(),
              [](const SentenceRecord& a, const SentenceRecord& b) {
                if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
                return a.sentence_id < b.sentence_id;
              });
    if (group.sentences.size() > static_cast<std::size_t>(config.max_sentences)) {
      group.sentences.resize(config.max_sentences);
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

std::vector<Piece> plan_pieces(const std::vector<std::vector<int>>& sentence_lengths,
                               int max_tokens, std::size_t* hard_cuts) {
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  std::vector<Piece> pieces;
  PiecePlanner planner(max_tokens, pieces);
  std::size_t cuts = 0;
  for (int g = 0; g < static_cast<int>(sentence_lengths.size()); ++g) {
    const auto& lengths = sentence_lengths[g];
    if (lengths.empty()) continue;
    int group_len = static_cast<int>(lengths.size()) - 1;
    for (int l : lengths) group_len += l;

    auto whole_group = [&] {
      for (int s = 0; s < static_cast<int>(lengths.size()); ++s) {
        planner.append(Fragment{g, s, 0, lengths[s]});
      }
    };
    if (planner.fits(group_len)) {
      whole_group();
      continue;
    }
    planner.flush();
    if (group_len <= max_tokens) {
      whole_group();
      continue;
    }
    for (int s = 0; s < static_cast<int>(lengths.size()); ++s) {
      const int len = lengths[s];
      if (planner.fits(len)) {
        planner.append(Fragment{g, s, 0, len});
        continue;
      }
      planner.flush();
      if (len <= max_tokens) {
        planner.append(Fragment{g, s, 0, len});
        continue;
      }
      ++cuts;
      for (int begin = 0; begin < len; begin += max_tokens) {
        planner.flush();
        planner.append(Fragment{g, s, begin, std::min(len, begin + max_tokens)});
      }
    }
  }
  planner.flush();
  if (hard_cuts != nullptr) *hard_cuts += cuts;
  return pieces;
}

std::vector<std::vector<std::string>> split_oversize(const AnnotatedTokens& doc, int max_tokens,
                                                     std::size_t* hard_cuts) {
  std::vector<std::vector<int>> lengths;
  for (const auto& group : doc) {
    auto& l = lengths.emplace_back();
    for (const auto& sentence : group) l.push_back(static_cast<int>(sentence.size()));
  }
  std::vector<std::vector<std::string>> out;
  for (const Piece& piece : plan_pieces(lengths, max_tokens, hard_cuts)) {
    auto& tokens = out.emplace_back();
    for (const Fragment& f : piece) {
      if (!tokens.empty()) tokens.emplace_back(kSentenceSeparator);
      const auto& s = doc[f.group][f.sentence];
      tokens.insert(tokens.end(), s.begin() + f.begin, s.begin() + f.end);
    }
  }
  return out;
}

std::vector<PseudoDocument> build_documents(const std::vector<PairGroup>& groups,
                                            const BuilderConfig& config, BuildStats* stats) {
  config.validate();
  BuildStats local;
  BuildStats& st = stats != nullptr ? *stats : local;
  std::vector<PseudoDocument> docs;

  std::vector<const PairGroup*> ordered;
  for (const auto& g : groups) {
    if (!g.sentences.empty()) ordered.push_back(&g);
  }
  std::sort(ordered.begin(), ordered.end(), [](const PairGroup* a, const PairGroup* b) {
    return std::tie(a->head, a->tail) < std::tie(b->head, b->tail);
  });

  auto sentence_ptrs = [](const PairGroup& g) {
    std::vector<const SentenceRecord*> out;
    for (const auto& s : g.sentences) out.push_back(&s);
    return out;
  };

  switch (config.mode) {
    case DocMode::kEntity: {
      for (std::size_t i = 0; i < ordered.size();) {
        std::size_t j = i;
        std::vector<const PairGroup*> head_groups;
        std::vector<std::vector<const SentenceRecord*>> sentences;
        while (j < ordered.size() && ordered[j]->head == ordered[i]->head) {
          head_groups.push_back(ordered[j]);
          sentences.push_back(sentence_ptrs(*ordered[j]));
          ++j;
        }
        materialize(head_groups, sentences, ordered[i]->head, config.max_tokens, docs, st);
        i = j;
      }
      break;
    }
    case DocMode::kPair: {
      for (const PairGroup* g : ordered) {
        materialize({g}, {sentence_ptrs(*g)}, g->head + "|" + g->tail, config.max_tokens, docs,
                    st);
      }
      break;
    }
    case DocMode::kSent: {
      for (const PairGroup* g : ordered) {
        std::mt19937_64 rng(mix_seed(config.seed, g->head + '\t' + g->tail));
        std::uniform_int_distribution<std::size_t> pick(0, g->sentences.size() - 1);
        const SentenceRecord* chosen = &g->sentences[pick(rng)];
        materialize({g}, {{chosen}}, g->head + "|" + g->tail, config.max_tokens, docs, st);
      }
      break;
    }
  }
  return docs;
}

void write_documents(std::ostream& out, const std::vector<PseudoDocument>& docs) {
  for (const auto& d : docs) {
    ordered_json j;
    j["doc_id"] = d.doc_id;
    j["head"] = d.head;
    j["tokens"] = d.tokens;
    ordered_json index = ordered_json::object();
    for (const auto& [entity, spans] : d.mention_index) {
      ordered_json list = ordered_json::array();
      for (const auto& m : spans) list.push_back({m.start, m.end});
      index[entity] = std::move(list);
    }
    j["mention_index"] = std::move(index);
    ordered_json sources = ordered_json::array();
    for (const auto& g : d.source_groups) {
      sources.push_back({{"tail", g.tail}, {"sentence_ids", g.sentence_ids}});
    }
    j["source_groups"] = std::move(sources);
    out << j.dump() << '\n';
  }
}

void write_documents(const std::filesystem::path& path, const std::vector<PseudoDocument>& docs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_documents(out, docs);
}

std::vector<PseudoDocument> read_documents(std::istream& in) {
  std::vector<PseudoDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PseudoDocument d;
      d.doc_id = j.at("doc_id").get<std::string>();
      d.head = j.at("head").get<std::string>();
      d.tokens = j.at("tokens").get<std::vector<std::string>>();
      for (const auto& [entity, spans] : j.at("mention_index").items()) {
        auto& list = d.mention_index[entity];
        for (const auto& s : spans) {
          const int start = s.at(0).get<int>();
          const int end = s.at(1).get<int>();
          if (start < 0 || start > end || end >= static_cast<int>(d.tokens.size())) {
            throw ParseError("mention span outside document " + d.doc_id, line_no);
          }
          list.push_back(MentionSpan{start, end, entity});
        }
      }
      for (const auto& g : j.at("source_groups")) {
        d.source_groups.push_back(SourceGroup{g.at("tail").get<std::string>(),
                                              g.at("sentence_ids").get<std::vector<std::string>>()});
      }
      docs.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed document: ") + e.what(), line_no);
    }
  }
  return docs;
}

std::vector<PseudoDocument> read_documents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_documents(in);
}

}  // namespace docds
