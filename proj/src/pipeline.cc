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

#include "docds/pipeline.h"

#include <fstream>
#include <functional>

#include "docds/checkpoint.h"
#include "docds/errors.h"
#include "spdlog/fmt/fmt.h"
#include "spdlog/spdlog.h"

namespace docds {
namespace {

// One named config field: how to read it from a table and how to report it.
struct Field {
  std::string section;
  std::string key;
  std::function<void(const ConfigTable&)> read;
  std::function<nlohmann::ordered_json()> value;
};

template <typename T>
Field bind(const std::string& section, const std::string& key, T& field) {
  return {section, key, [&field, section, key](const ConfigTable& t) { t.read(section, key, field); },
          [&field] { return nlohmann::ordered_json(field); }};
}

Field bind_mode(DocMode& mode) {
  return {"builder", "mode",
          [&mode](const ConfigTable& t) {
            if (auto s = t.get_string("builder", "mode")) mode = parse_doc_mode(*s);
          },
          [&mode] { return nlohmann::ordered_json(to_string(mode)); }};
}

// The ConfigTable reader has no unsigned 64-bit type; seeds go through int64.
Field bind_seed(const std::string& section, std::uint64_t& seed) {
  return {section, "seed",
          [&seed, section](const ConfigTable& t) {
            if (auto v = t.get_int(section, "seed")) {
              if (*v < 0) throw ConfigError(section + ".seed must be >= 0");
              seed = static_cast<std::uint64_t>(*v);
            }
          },
          [&seed] { return nlohmann::ordered_json(seed); }};
}

std::vector<Field> fields(PipelineConfig& c) {
  return {
      bind("synth", "n_entities", c.synth.n_entities),
      bind("synth", "n_relations", c.synth.n_relations),
      bind("synth", "n_facts", c.synth.n_facts),
      bind("synth", "min_sentences", c.synth.min_sentences),
      bind("synth", "max_sentences", c.synth.max_sentences),
      bind("synth", "noise_rate", c.synth.noise_rate),
      bind("synth", "test_noise_rate", c.synth.test_noise_rate),
      bind("synth", "na_fraction", c.synth.na_fraction),
      bind("synth", "test_fraction", c.synth.test_fraction),
      bind("synth", "partners_per_head", c.synth.partners_per_head),
      bind_seed("synth", c.synth.seed),
      bind("builder", "max_tokens", c.builder.max_tokens),
      bind("builder", "max_sentences", c.builder.max_sentences),
      bind_mode(c.builder.mode),
      bind_seed("builder", c.builder.seed),
      bind("instances", "negative_keep_ratio", c.instances.negative_keep_ratio),
      bind("instances", "multi_question", c.instances.multi_question),
      bind_seed("instances", c.instances.seed),
      bind("encoder", "d", c.encoder.d),
      bind("encoder", "layers", c.encoder.layers),
      bind("encoder", "heads", c.encoder.heads),
      bind("encoder", "ffn", c.encoder.ffn),
      bind("encoder", "max_seq_len", c.encoder.max_seq_len),
      bind("encoder", "dropout", c.encoder.dropout),
      bind("encoder", "init_std", c.encoder.init_std),
      bind("train", "learning_rate", c.train.learning_rate),
      bind("train", "batch_size", c.train.batch_size),
      bind("train", "epochs", c.train.epochs),
      bind("train", "warmup_proportion", c.train.warmup_proportion),
      bind("train", "max_grad_norm", c.train.max_grad_norm),
      bind("train", "patience", c.train.patience),
      bind("train", "beta1", c.train.beta1),
      bind("train", "beta2", c.train.beta2),
      bind("train", "adam_eps", c.train.adam_eps),
      bind_seed("train", c.train.seed),
      bind("train", "validation_fraction", c.validation_fraction),
      bind("loss", "lambda", c.loss.lambda),
      bind("loss", "gamma", c.loss.gamma),
      bind("loss", "use_noise_tolerant", c.loss.use_noise_tolerant),
      bind("loss", "use_risk_factor", c.loss.use_risk_factor),
      bind("loss", "detach_weights", c.loss.detach_weights),
      bind("vocab", "max_size", c.vocab.max_size),
      bind("vocab", "min_word_count", c.vocab.min_word_count),
      bind("vocab", "max_piece_chars", c.vocab.max_piece_chars),
      bind("vocab", "min_piece_count", c.vocab.min_piece_count),
      bind_seed("run", c.model_seed),
      bind("run", "top1_only", c.top1_only),
  };
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

PipelineConfig default_pipeline_config() {
  PipelineConfig c;
  c.encoder.d = 64;
  c.encoder.layers = 2;
  c.encoder.heads = 4;
  c.encoder.ffn = 128;
  c.encoder.init_std = 0.1;
  return c;
}

void apply_config(const ConfigTable& table, PipelineConfig& config) {
  auto fs = fields(config);
  for (const auto& [section, keys] : table.sections()) {
    for (const auto& [key, value] : keys) {
      const bool known = std::any_of(fs.begin(), fs.end(), [&](const Field& f) {
        return f.section == section && f.key == key;
      });
      if (!known) throw ConfigError("unknown config key " + section + "." + key);
    }
  }
  for (const auto& f : fs) f.read(table);
}

nlohmann::ordered_json to_json(const PipelineConfig& config) {
  nlohmann::ordered_json j;
  for (const auto& f : fields(const_cast<PipelineConfig&>(config))) j[f.section][f.key] = f.value();
  return j;
}

Dataset dataset_from_synth(const SynthData& data) {
  return {data.inventory,   data.entities, data.train.corpus,
          data.train.kb,    data.test.corpus, data.test.kb};
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset d;
  d.inventory = load_inventory(dir / "relations.tsv");
  if (std::filesystem::exists(dir / "entities.tsv")) d.entities = load_entities(dir / "entities.tsv");
  const IngestionConfig strict{true};
  d.train_corpus = load_corpus(dir / "train" / "corpus.jsonl", strict).sentences;
  d.train_kb = load_kb(dir / "train" / "kb.tsv", d.inventory, strict).triples;
  d.test_corpus = load_corpus(dir / "test" / "corpus.jsonl", strict).sentences;
  d.test_kb = load_kb(dir / "test" / "kb.tsv", d.inventory, strict).triples;
  return d;
}

std::vector<PseudoDocument> make_documents(const std::vector<SentenceRecord>& corpus,
                                           const BuilderConfig& config, BuildStats* stats) {
  const auto groups = build_groups(index_pairs(corpus), make_sentence_table(corpus), config);
  return build_documents(groups, config, stats);
}

WordPieceVocab train_vocab(const std::vector<PseudoDocument>& docs,
                           const std::vector<MRCInstance>& instances,
                           const WordPieceVocab::TrainOptions& options) {
  std::vector<std::vector<std::string>> streams;
  for (const auto& d : docs) streams.push_back(d.tokens);
  for (const auto& inst : instances) streams.push_back(inst.question.text_tokens);
  return WordPieceVocab::train(streams, options);
}

RunResult run_pipeline(const Dataset& data, const PipelineConfig& config,
                       const std::filesystem::path& out_dir) {
  const bool write = !out_dir.empty();
  RunResult result;

  BuildStats stats;
  const auto train_docs = make_documents(data.train_corpus, config.builder, &stats);
  const auto train_inst =
      build_instances(train_docs, data.train_kb, data.inventory, data.entities, config.instances);
  const WordPieceVocab vocab = train_vocab(train_docs, train_inst, config.vocab);

  EncoderConfig enc = config.encoder;
  enc.vocab_size = vocab.size();
  Model model{enc, init_params(enc, config.model_seed)};
  const auto examples = pack_instances(train_inst, vocab, enc.max_seq_len);
  const HeadSplit split = split_by_head(examples, config.validation_fraction, config.train.seed);
  std::vector<TrainingExample> train_set, val_set;
  for (auto i : split.train) train_set.push_back(examples[i]);
  for (auto i : split.validation) val_set.push_back(examples[i]);
  result.train_instances = examples.size();
  spdlog::info("{} documents, {} instances ({} train / {} validation), vocab {}", train_docs.size(),
               examples.size(), train_set.size(), val_set.size(), vocab.size());

  TrainConfig tc = config.train;
  if (write) tc.dump_dir = out_dir;
  result.training = train(model, train_set, val_set, tc, config.loss);

  const auto test_docs = make_documents(data.test_corpus, config.builder);
  const auto test_inst =
      build_instances(test_docs, data.test_kb, data.inventory, data.entities, config.instances);
  const auto test_examples = pack_instances(test_inst, vocab, enc.max_seq_len);
  result.test_instances = test_examples.size();
  result.predictions = predict_all(result.training.model, test_examples, PredictOptions{config.top1_only});

  const PairIndex test_pairs = index_pairs(data.test_corpus);
  result.gold = extractable_gold(data.test_kb, test_pairs);
  const auto ranked = to_ranked(result.predictions);
  result.curve = evaluate(ranked, result.gold);
  result.subsets = subset_eval(ranked, result.gold, sentence_counts(test_pairs));

  auto& s = result.summary;
  s = summary_json(result.curve);
  s["best_epoch"] = result.training.best_epoch;
  s["best_val_auc"] = result.training.best_val_auc;
  s["epochs_run"] = result.training.history.size();
  s["train_instances"] = result.train_instances;
  s["test_instances"] = result.test_instances;
  s["hard_cuts"] = stats.hard_cuts;
  if (!result.gold.empty()) s["shuffle_auc"] = shuffle_control_auc(ranked, result.gold);
  if (result.subsets.multi) s["auc_multi"] = result.subsets.multi->auc;
  if (result.subsets.single) s["auc_single"] = result.subsets.single->auc;

  if (write) {
    write_documents(out_dir / "documents.train.jsonl", train_docs);
    write_documents(out_dir / "documents.test.jsonl", test_docs);
    write_instances(out_dir / "instances.train.jsonl", train_inst);
    write_instances(out_dir / "instances.test.jsonl", test_inst);
    vocab.save(out_dir / "vocab.txt");
    save_checkpoint(out_dir / "model.ckpt", result.training.model,
                    {{"best_epoch", result.training.best_epoch}});
    write_metrics_csv(out_dir / "metrics.csv", result.training.history);
    write_predictions(out_dir / "predictions.tsv", result.predictions);
    write_pr_csv(out_dir / "pr.csv", result.curve);
    write_json(out_dir / "summary.json", s);
  }
  return result;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "sentences" || name == "N") return SweepAxis::kSentences;
  if (name == "loss") return SweepAxis::kLoss;
  if (name == "mode" || name == "doc-mode") return SweepAxis::kDocMode;
  throw ConfigError("unknown sweep axis '" + name + "' (sentences, loss, mode)");
}

std::vector<SweepRow> run_sweep(const Dataset& data, const PipelineConfig& base, SweepAxis axis,
                                const std::vector<std::string>* values,
                                const std::filesystem::path& out_dir) {
  std::vector<std::string> settings;
  switch (axis) {
    case SweepAxis::kSentences: settings = {"5", "10", "15", "20"}; break;
    case SweepAxis::kLoss: settings = {"DSLoss", "-risk", "-noise", "-both"}; break;
    case SweepAxis::kDocMode: settings = {"entity", "pair", "sent"}; break;
  }
  if (values != nullptr) settings = *values;
  if (settings.empty()) throw ConfigError("sweep axis has no settings");

  std::vector<SweepRow> rows;
  for (const auto& setting : settings) {
    SweepRow row;
    row.setting = setting;
    try {
      PipelineConfig c = base;
      switch (axis) {
        case SweepAxis::kSentences: c.builder.max_sentences = std::stoi(setting); break;
        case SweepAxis::kLoss: c.loss = with_variant(c.loss, parse_loss_variant(setting)); break;
        case SweepAxis::kDocMode: c.builder.mode = parse_doc_mode(setting); break;
      }
      const auto dir = out_dir.empty() ? out_dir : out_dir / sanitize(setting);
      const RunResult r = run_pipeline(data, c, dir);
      row.ok = true;
      row.val_auc = r.training.best_val_auc;
      row.auc = r.curve.auc;
      row.summary = r.summary;
    } catch (const std::exception& e) {
      row.error = e.what();
      spdlog::error("sweep setting {} failed: {}", setting, e.what());
    }
    rows.push_back(std::move(row));
  }
  if (!out_dir.empty()) write_sweep_csv(out_dir / "sweep.csv", rows);
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "setting,status,val_auc,auc,p@100,p@200,p@300\n";
  auto cell = [](const nlohmann::ordered_json& s, const char* key) -> std::string {
    if (!s.is_object() || !s.contains(key) || s[key].is_null()) return "";
    return fmt::format("{:.6f}", s[key].get<double>());
  };
  for (const auto& r : rows) {
    out << r.setting << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      out << fmt::format("{:.6f},{:.6f}", r.val_auc, r.auc) << ',' << cell(r.summary, "p@100") << ','
          << cell(r.summary, "p@200") << ',' << cell(r.summary, "p@300");
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

}  // namespace docds
