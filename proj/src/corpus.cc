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

#include "docds/corpus.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "docds/errors.h"
#include "json.hpp"

namespace docds {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cols;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::optional<std::string> optional_tag(const std::string& s) {
  if (s.empty() || s == "-") return std::nullopt;
  return s;
}

// Templated so that strict mode rethrows the concrete error type.
template <typename E>
void reject(LoadReport& report, const IngestionConfig& config, const E& error) {
  if (config.strict) throw error;
  ++report.rejected;
  report.errors.emplace_back(error.what());
}

SentenceRecord sentence_from_json(const json& j) {
  SentenceRecord s;
  s.sentence_id = j.at("sentence_id").get<std::string>();
  s.tokens = j.at("tokens").get<std::vector<std::string>>();
  if (j.contains("mentions")) {
    for (const auto& m : j.at("mentions")) {
      s.mentions.push_back(MentionSpan{m.at("start").get<int>(), m.at("end").get<int>(),
                                       m.at("entity_id").get<std::string>()});
    }
  }
  return s;
}

}  // namespace

RelationInventory::RelationInventory(std::vector<RelationDef> relations)
    : relations_(std::move(relations)) {
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    validate_pattern(relations_[i].question_pattern);
    for (const auto& extra : relations_[i].extra_patterns) validate_pattern(extra);
    if (!index_.emplace(relations_[i].relation_id, i).second) {
      throw ConfigError("duplicate relation id: " + relations_[i].relation_id);
    }
  }
}

const RelationDef* RelationInventory::find(const std::string& relation_id) const {
  auto it = index_.find(relation_id);
  return it == index_.end() ? nullptr : &relations_[it->second];
}

EntityCatalog::EntityCatalog(std::vector<EntityRef> entities) {
  for (auto& e : entities) {
    if (e.entity_id.empty()) throw ValidationError("empty entity id in catalog");
    const std::string id = e.entity_id;
    if (!entities_.emplace(id, std::move(e)).second) {
      throw ValidationError("duplicate entity id in catalog: " + id);
    }
  }
}

const EntityRef* EntityCatalog::find(const std::string& entity_id) const {
  auto it = entities_.find(entity_id);
  return it == entities_.end() ? nullptr : &it->second;
}

EntityRef EntityCatalog::resolve(const std::string& entity_id) const {
  if (const EntityRef* e = find(entity_id)) return *e;
  std::string surface = entity_id;
  std::replace(surface.begin(), surface.end(), '_', ' ');
  return EntityRef{entity_id, surface, std::nullopt};
}

void validate_sentence(const SentenceRecord& sentence) {
  if (sentence.sentence_id.empty()) throw ValidationError("sentence with empty sentence_id");
  if (sentence.tokens.empty()) {
    throw ValidationError("sentence " + sentence.sentence_id + ": empty token list");
  }
  const int n = static_cast<int>(sentence.tokens.size());
  std::set<MentionSpan> seen;
  for (const MentionSpan& m : sentence.mentions) {
    if (m.entity_id.empty() || m.entity_id == kNaEntity) {
      throw ValidationError("sentence " + sentence.sentence_id +
                            ": mention with empty or reserved entity id");
    }
    if (m.start < 0 || m.start > m.end || m.end >= n) {
      throw ValidationError("sentence " + sentence.sentence_id + ": mention of " + m.entity_id +
                            " span (" + std::to_string(m.start) + "," + std::to_string(m.end) +
                            ") outside " + std::to_string(n) + " tokens");
    }
    if (!seen.insert(m).second) {
      throw ValidationError("sentence " + sentence.sentence_id + ": duplicate mention of " +
                            m.entity_id);
    }
  }
}

void validate_pattern(const std::string& pattern) {
  const std::string slot = kEntitySlot;
  std::size_t count = 0;
  for (std::size_t pos = pattern.find(slot); pos != std::string::npos;
       pos = pattern.find(slot, pos + slot.size())) {
    ++count;
  }
  if (count != 1) {
    throw ConfigError("question pattern must contain exactly one " + slot + " slot: \"" +
                      pattern + "\"");
  }
}

CorpusLoad parse_corpus(std::istream& in, const IngestionConfig& config) {
  CorpusLoad out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    SentenceRecord record;
    try {
      record = sentence_from_json(json::parse(line));
    } catch (const json::exception& e) {
      reject(out.report, config, ParseError(std::string("malformed sentence: ") + e.what(), line_no));
      continue;
    }
    try {
      validate_sentence(record);
      if (!ids.insert(record.sentence_id).second) {
        throw ValidationError("duplicate sentence_id " + record.sentence_id);
      }
    } catch (const ValidationError& e) {
      reject(out.report, config,
             ValidationError("line " + std::to_string(line_no) + ": " + e.what()));
      continue;
    }
    ++out.report.accepted;
    out.sentences.push_back(std::move(record));
  }
  return out;
}

CorpusLoad load_corpus(const std::filesystem::path& path, const IngestionConfig& config) {
  auto in = open_input(path);
  return parse_corpus(in, config);
}

void write_corpus(std::ostream& out, const std::vector<SentenceRecord>& sentences) {
  for (const auto& s : sentences) {
    ordered_json j;
    j["sentence_id"] = s.sentence_id;
    j["tokens"] = s.tokens;
    j["mentions"] = ordered_json::array();
    for (const auto& m : s.mentions) {
      j["mentions"].push_back({{"entity_id", m.entity_id}, {"start", m.start}, {"end", m.end}});
    }
    out << j.dump() << '\n';
  }
}

void write_corpus(const std::filesystem::path& path, const std::vector<SentenceRecord>& sentences) {
  auto out = open_output(path);
  write_corpus(out, sentences);
}

KBLoad parse_kb(std::istream& in, const RelationInventory& inventory,
                const IngestionConfig& config) {
  KBLoad out;
  std::set<KBTriple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 3) {
      reject(out.report, config,
             ParseError("expected 3 tab-separated columns, got " + std::to_string(cols.size()),
                        line_no));
      continue;
    }
    for (auto& c : cols) {
      while (!c.empty() && c.front() == ' ') c.erase(c.begin());
      while (!c.empty() && c.back() == ' ') c.pop_back();
    }
    if (cols[0].empty() || cols[2].empty()) {
      reject(out.report, config, ParseError("empty entity id", line_no));
      continue;
    }
    if (!inventory.contains(cols[1])) {
      reject(out.report, config,
             ValidationError("line " + std::to_string(line_no) + ": unknown relation " + cols[1]));
      continue;
    }
    KBTriple t{cols[0], cols[1], cols[2]};
    if (!triples.insert(t).second) {
      ++out.report.duplicates;
      continue;
    }
    if (t.head == t.tail) ++out.report.flagged;
    ++out.report.accepted;
  }
  out.triples.assign(triples.begin(), triples.end());
  return out;
}

KBLoad load_kb(const std::filesystem::path& path, const RelationInventory& inventory,
               const IngestionConfig& config) {
  auto in = open_input(path);
  return parse_kb(in, inventory, config);
}

void write_kb(const std::filesystem::path& path, const std::vector<KBTriple>& triples) {
  auto out = open_output(path);
  for (const auto& t : triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

RelationInventory parse_inventory(std::istream& in) {
  std::vector<RelationDef> defs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line) || line.front() == '#') continue;
    const auto cols = split_tabs(line);
    if (cols.size() < 4) {
      throw ParseError("relation inventory needs relation_id, head_type, tail_type, pattern",
                       line_no);
    }
    RelationDef def;
    def.relation_id = cols[0];
    def.head_type = optional_tag(cols[1]);
    def.tail_type = optional_tag(cols[2]);
    def.question_pattern = cols[3];
    for (std::size_t i = 4; i < cols.size(); ++i) {
      if (!cols[i].empty()) def.extra_patterns.push_back(cols[i]);
    }
    try {
      validate_pattern(def.question_pattern);
      for (const auto& p : def.extra_patterns) validate_pattern(p);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
    defs.push_back(std::move(def));
  }
  return RelationInventory(std::move(defs));
}

RelationInventory load_inventory(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_inventory(in);
}

void write_inventory(const std::filesystem::path& path, const RelationInventory& inventory) {
  auto out = open_output(path);
  for (const auto& r : inventory.relations()) {
    out << r.relation_id << '\t' << r.head_type.value_or("-") << '\t' << r.tail_type.value_or("-")
        << '\t' << r.question_pattern;
    for (const auto& p : r.extra_patterns) out << '\t' << p;
    out << '\n';
  }
}

EntityCatalog parse_entities(std::istream& in) {
  std::vector<EntityRef> entities;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    const auto cols = split_tabs(line);
    if (cols.size() < 2 || cols.size() > 3) {
      throw ParseError("entity catalog needs entity_id, surface[, entity_type]", line_no);
    }
    entities.push_back(
        EntityRef{cols[0], cols[1], cols.size() == 3 ? optional_tag(cols[2]) : std::nullopt});
  }
  return EntityCatalog(std::move(entities));
}

EntityCatalog load_entities(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_entities(in);
}

void write_entities(const std::filesystem::path& path, const EntityCatalog& catalog) {
  auto out = open_output(path);
  for (const auto& [id, e] : catalog.entities()) {
    out << id << '\t' << e.surface << '\t' << e.entity_type.value_or("-") << '\n';
  }
}

PairIndex index_pairs(const std::vector<SentenceRecord>& sentences) {
  PairIndex index;
  for (const auto& s : sentences) {
    std::set<std::string> entities;
    for (const auto& m : s.mentions) entities.insert(m.entity_id);
    for (const auto& h : entities) {
      for (const auto& t : entities) {
        if (h != t) index[{h, t}].push_back(s.sentence_id);
      }
    }
  }
  for (auto& [pair, ids] : index) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  }
  return index;
}

SentenceTable make_sentence_table(const std::vector<SentenceRecord>& sentences) {
  SentenceTable table;
  table.reserve(sentences.size());
  for (const auto& s : sentences) table.emplace(s.sentence_id, s);
  return table;
}

std::vector<std::string> split_whitespace(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace docds
