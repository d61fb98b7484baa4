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

#include "docds/synthgen.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "docds/errors.h"
#include "docds/hashing.h"
#include "spdlog/fmt/fmt.h"

namespace docds {
namespace {

constexpr const char* kPerson = "person";
constexpr const char* kLocation = "location";
constexpr const char* kOrganization = "organization";
constexpr const char* kCountry = "country";

struct RelationTemplate {
  const char* id;
  const char* head_type;
  const char* tail_type;
  const char* question;
  const char* extra_question;
  std::vector<const char*> templates;  // {h} and {t} are the slots
};

// The first three relations take one head type each and all point at
// locations, so a reader must use the question rather than entity types.
const std::vector<RelationTemplate>& relation_pool() {
  static const std::vector<RelationTemplate> kPool = {
      {"place_of_birth", kPerson, kLocation, "where was [Entity] born ?",
       "[Entity] was born in which place ?",
       {"{h} was born in {t} .", "{t} is where {h} was born ."}},
      {"headquarters", kOrganization, kLocation, "where is [Entity] based ?",
       "[Entity] is based in which place ?",
       {"{h} is based in {t} .", "{t} is where {h} is based ."}},
      {"contains", kCountry, kLocation, "what place does [Entity] contain ?",
       "[Entity] does contain which place ?",
       {"{h} does contain {t} .", "{t} is what {h} does contain ."}},
      {"place_lived", kPerson, kLocation, "where did [Entity] live ?",
       "[Entity] did live in which place ?",
       {"{h} did live in {t} .", "{t} is where {h} did live ."}},
      {"place_of_death", kPerson, kLocation, "where did [Entity] die ?",
       "[Entity] did die in which place ?",
       {"{h} did die in {t} .", "{t} is where {h} did die ."}},
      {"founders", kOrganization, kPerson, "who founded [Entity] ?",
       "[Entity] was founded by whom ?",
       {"{h} was founded by {t} .", "{t} is who founded {h} ."}},
  };
  return kPool;
}

const std::vector<const char*>& distractor_templates() {
  static const std::vector<const char*> kTemplates = {
      "{h} visited {t} last summer .",
      "{h} wrote a letter about {t} .",
      "{h} and {t} were mentioned in the report .",
      "a photo shows {h} near {t} .",
      "{t} was discussed by {h} on the radio .",
  };
  return kTemplates;
}

const std::vector<const char*>& syllables() {
  static const std::vector<const char*> kSyllables = {
      "ka", "lo", "mi", "ra", "ven", "to", "sa", "ni", "del", "mor", "qui", "ba",
      "zu", "fe", "ril", "do", "ta", "gor", "en", "li", "pa", "shu", "ve", "ko"};
  return kSyllables;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

class NameMaker {
 public:
  explicit NameMaker(std::uint64_t seed) : rng_(seed) {}

  std::string word() {
    const auto& syl = syllables();
    std::uniform_int_distribution<std::size_t> pick(0, syl.size() - 1);
    std::uniform_int_distribution<int> len(2, 3);
    while (true) {
      std::string w;
      for (int i = len(rng_); i > 0; --i) w += syl[pick(rng_)];
      w = capitalize(w);
      if (used_.insert(w).second) return w;
    }
  }

 private:
  std::mt19937_64 rng_;
  std::set<std::string> used_;
};

struct Group {
  std::string head;
  std::string tail;
  const RelationTemplate* relation = nullptr;  // null for distractor pairs
  bool test = false;
  bool noisy = false;
};

SentenceRecord realize(const std::string& id, const char* pattern, const EntityRef& head,
                       const EntityRef& tail) {
  SentenceRecord s;
  s.sentence_id = id;
  for (const auto& tok : split_whitespace(pattern)) {
    const EntityRef* e = tok == "{h}" ? &head : tok == "{t}" ? &tail : nullptr;
    if (e == nullptr) {
      s.tokens.push_back(tok);
      continue;
    }
    const auto words = split_whitespace(e->surface);
    const int start = static_cast<int>(s.tokens.size());
    s.tokens.insert(s.tokens.end(), words.begin(), words.end());
    s.mentions.push_back({start, static_cast<int>(s.tokens.size()) - 1, e->entity_id});
  }
  std::sort(s.mentions.begin(), s.mentions.end());
  return s;
}

std::size_t rounded_share(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
}

}  // namespace

int synth_relation_pool_size() { return static_cast<int>(relation_pool().size()); }

void SynthConfig::validate() const {
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(fmt::format("synth: {} must be in [0, 1]", name));
  };
  rate(noise_rate, "noise_rate");
  rate(test_noise_rate, "test_noise_rate");
  rate(na_fraction, "na_fraction");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("synth: test_fraction must be in (0, 1)");
  }
  if (n_relations < 1 || n_relations > synth_relation_pool_size()) {
    throw ConfigError(fmt::format("synth: n_relations must be in [1, {}]", synth_relation_pool_size()));
  }
  if (n_entities < 4) throw ConfigError("synth: n_entities must be >= 4");
  if (n_facts < 0) throw ConfigError("synth: n_facts must be >= 0");
  if (min_sentences < 1 || max_sentences < min_sentences) {
    throw ConfigError("synth: need 1 <= min_sentences <= max_sentences");
  }
  if (partners_per_head < 0) throw ConfigError("synth: partners_per_head must be >= 0");
}

SynthData generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(mix_seed(config.seed, "synth"));
  const std::vector<RelationTemplate> relations(relation_pool().begin(),
                                                relation_pool().begin() + config.n_relations);

  // Entities by type. Organizations and countries exist only when a relation
  // uses them.
  auto needs = [&](const char* type) {
    for (const auto& r : relations) {
      if (std::string(r.head_type) == type || std::string(r.tail_type) == type) return true;
    }
    return false;
  };
  const int n = config.n_entities;
  const int n_org = needs(kOrganization) ? std::max(1, n / 5) : 0;
  const int n_country = needs(kCountry) ? std::max(1, n / 6) : 0;
  const int n_person = static_cast<int>(std::llround(0.5 * (n - n_org - n_country)));
  const int n_location = n - n_org - n_country - n_person;

  NameMaker names(mix_seed(config.seed, "names"));
  std::vector<EntityRef> entities;
  std::map<std::string, std::vector<std::string>> by_type;
  auto add_entities = [&](const char* type, const char* prefix, int count) {
    for (int i = 0; i < count; ++i) {
      std::string surface;
      if (std::string(type) == kPerson) {
        surface = names.word() + " " + names.word();
      } else if (std::string(type) == kOrganization) {
        surface = names.word() + " Group";
      } else if (std::string(type) == kCountry) {
        surface = names.word() + " Republic";
      } else {
        surface = names.word();
      }
      EntityRef e{fmt::format("{}_{:02d}", prefix, i), surface, std::string(type)};
      by_type[type].push_back(e.entity_id);
      entities.push_back(std::move(e));
    }
  };
  add_entities(kPerson, "per", n_person);
  add_entities(kLocation, "loc", n_location);
  add_entities(kOrganization, "org", n_org);
  add_entities(kCountry, "cty", n_country);
  EntityCatalog catalog(entities);

  std::vector<RelationDef> defs;
  for (const auto& r : relations) {
    defs.push_back({r.id, std::string(r.head_type), std::string(r.tail_type), r.question,
                    {r.extra_question}});
  }

  // Question slots, a share of which stays unanswerable.
  std::vector<std::pair<std::string, const RelationTemplate*>> slots;
  for (const auto& r : relations) {
    for (const auto& h : by_type[r.head_type]) slots.emplace_back(h, &r);
  }
  std::shuffle(slots.begin(), slots.end(), rng);
  const std::size_t n_na = rounded_share(config.na_fraction, slots.size());
  std::vector<std::pair<std::string, const RelationTemplate*>> answerable(slots.begin() + static_cast<long>(n_na),
                                                                          slots.end());
  if (config.n_facts > 0 && answerable.empty()) {
    throw ConfigError("synth: facts requested but na_fraction leaves no answerable question");
  }

  // Facts, dealt round-robin over answerable slots. A pair carries at most
  // one fact and never appears in both directions.
  std::set<std::pair<std::string, std::string>> used_pairs;
  auto pair_free = [&](const std::string& a, const std::string& b) {
    return a != b && !used_pairs.count({a, b}) && !used_pairs.count({b, a});
  };
  std::vector<Group> groups;
  std::map<std::string, std::size_t> facts_per_head;
  std::size_t placed = 0;
  std::size_t cursor = 0;
  std::size_t misses = 0;
  while (placed < static_cast<std::size_t>(config.n_facts)) {
    if (misses == answerable.size()) {
      throw ConfigError(fmt::format("synth: only {} of {} facts fit the entity pairs", placed,
                                    config.n_facts));
    }
    const auto& [head, rel] = answerable[cursor++ % answerable.size()];
    std::vector<std::string> tails;
    for (const auto& t : by_type[rel->tail_type]) {
      if (pair_free(head, t)) tails.push_back(t);
    }
    if (tails.empty()) {
      ++misses;
      continue;
    }
    misses = 0;
    const auto& tail = tails[std::uniform_int_distribution<std::size_t>(0, tails.size() - 1)(rng)];
    used_pairs.insert({head, tail});
    groups.push_back({head, tail, rel});
    ++facts_per_head[head];
    ++placed;
  }

  // Distractor partners bring every question head to the same partner count.
  std::set<std::string> heads;
  std::map<std::string, std::set<std::string>> tail_types;
  for (const auto& [h, r] : slots) {
    heads.insert(h);
    tail_types[h].insert(r->tail_type);
  }
  std::size_t max_facts = 0;
  for (const auto& [h, c] : facts_per_head) max_facts = std::max(max_facts, c);
  const std::size_t partners =
      config.partners_per_head > 0 ? static_cast<std::size_t>(config.partners_per_head) : max_facts + 2;
  for (const auto& h : heads) {
    std::vector<std::string> pool;
    for (const auto& type : tail_types[h]) {
      for (const auto& t : by_type[type]) {
        if (pair_free(h, t)) pool.push_back(t);
      }
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t have = facts_per_head.count(h) ? facts_per_head[h] : 0;
    for (std::size_t i = 0; have + i < partners && i < pool.size(); ++i) {
      used_pairs.insert({h, pool[i]});
      groups.push_back({h, pool[i], nullptr});
    }
  }
  std::sort(groups.begin(), groups.end(),
            [](const Group& a, const Group& b) { return std::tie(a.head, a.tail) < std::tie(b.head, b.tail); });

  // Held-out heads, then noisy fact groups per split.
  std::vector<std::string> head_order(heads.begin(), heads.end());
  std::shuffle(head_order.begin(), head_order.end(), rng);
  const std::set<std::string> test_heads(
      head_order.begin(), head_order.begin() + static_cast<long>(std::max<std::size_t>(
                                                   1, rounded_share(config.test_fraction, heads.size()))));
  for (auto& g : groups) g.test = test_heads.count(g.head) > 0;
  for (bool test : {false, true}) {
    std::vector<Group*> facts;
    for (auto& g : groups) {
      if (g.relation != nullptr && g.test == test) facts.push_back(&g);
    }
    std::shuffle(facts.begin(), facts.end(), rng);
    const std::size_t noisy = rounded_share(test ? config.test_noise_rate : config.noise_rate, facts.size());
    for (std::size_t i = 0; i < noisy; ++i) facts[i]->noisy = true;
  }

  SynthData data;
  data.inventory = RelationInventory(defs);
  data.entities = catalog;
  data.stats.slots = slots.size();
  std::set<std::pair<std::string, std::string>> answered;
  std::uniform_int_distribution<int> count(config.min_sentences, config.max_sentences);
  std::uniform_int_distribution<std::size_t> pick_distractor(0, distractor_templates().size() - 1);
  std::bernoulli_distribution coin(0.5);
  std::size_t next_id = 0;
  for (const auto& g : groups) {
    SynthSplit& split = g.test ? data.test : data.train;
    const EntityRef head = *catalog.find(g.head);
    const EntityRef tail = *catalog.find(g.tail);
    const int k = count(rng);
    for (int i = 0; i < k; ++i) {
      const std::string id = fmt::format("{}{:06d}", g.test ? "te" : "tr", next_id++);
      const bool express = g.relation != nullptr && !g.noisy && (i == 0 || coin(rng));
      const char* pattern =
          express ? g.relation->templates[std::uniform_int_distribution<std::size_t>(
                        0, g.relation->templates.size() - 1)(rng)]
                  : distractor_templates()[pick_distractor(rng)];
      split.corpus.push_back(realize(id, pattern, head, tail));
      if (g.relation != nullptr) {
        data.answer_key.push_back({id, {g.head, g.relation->id, g.tail}, express});
      }
    }
    if (g.relation != nullptr) {
      split.kb.push_back({g.head, g.relation->id, g.tail});
      answered.insert({g.head, g.relation->id});
      ++data.stats.fact_groups;
      data.stats.noisy_groups += g.noisy;
    } else {
      ++data.stats.distractor_groups;
    }
  }
  data.stats.answerable_slots = answered.size();
  std::sort(data.train.kb.begin(), data.train.kb.end());
  std::sort(data.test.kb.begin(), data.test.kb.end());
  return data;
}

void write_synth(const std::filesystem::path& dir, const SynthData& data) {
  for (const auto& [name, split] : {std::pair{"train", &data.train}, std::pair{"test", &data.test}}) {
    write_corpus(dir / name / "corpus.jsonl", split->corpus);
    write_kb(dir / name / "kb.tsv", split->kb);
  }
  write_inventory(dir / "relations.tsv", data.inventory);
  write_entities(dir / "entities.tsv", data.entities);
  std::ofstream key(dir / "answer_key.tsv");
  if (!key) throw Error("cannot write " + (dir / "answer_key.tsv").string());
  key << "sentence_id\thead\trelation\ttail\texpresses\n";
  for (const auto& row : data.answer_key) {
    key << row.sentence_id << '\t' << row.fact.head << '\t' << row.fact.relation << '\t'
        << row.fact.tail << '\t' << (row.expresses ? 1 : 0) << '\n';
  }
}

}  // namespace docds
