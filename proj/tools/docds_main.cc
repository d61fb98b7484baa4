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

// docds: document-based distant supervision pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "docds/checkpoint.h"
#include "docds/errors.h"
#include "docds/hashing.h"
#include "docds/kernels.h"
#include "docds/pipeline.h"
#include "spdlog/spdlog.h"

namespace {

using docds::PipelineConfig;
namespace fs = std::filesystem;

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Flag values stay unset unless given, so they only override what the
// defaults and the --config file already decided.
struct Overrides {
  std::optional<int> max_tokens, max_sentences;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_entities, n_relations, n_facts;
  std::optional<double> noise_rate, na_fraction;
  std::optional<double> negative_keep_ratio;
  bool multi_question = false;
  std::optional<int> epochs, batch_size;
  std::optional<double> learning_rate;
  std::optional<std::string> loss;
  bool live_weights = false;
  bool top1_only = false;

  void apply(PipelineConfig& c) const {
    if (max_tokens) c.builder.max_tokens = *max_tokens;
    if (max_sentences) c.builder.max_sentences = *max_sentences;
    if (mode) c.builder.mode = docds::parse_doc_mode(*mode);
    if (seed) {
      c.synth.seed = c.builder.seed = c.instances.seed = c.train.seed = *seed;
      c.model_seed = docds::mix_seed(*seed, "model");
    }
    if (n_entities) c.synth.n_entities = *n_entities;
    if (n_relations) c.synth.n_relations = *n_relations;
    if (n_facts) c.synth.n_facts = *n_facts;
    if (noise_rate) c.synth.noise_rate = *noise_rate;
    if (na_fraction) c.synth.na_fraction = *na_fraction;
    if (negative_keep_ratio) c.instances.negative_keep_ratio = *negative_keep_ratio;
    if (multi_question) c.instances.multi_question = true;
    if (epochs) c.train.epochs = *epochs;
    if (batch_size) c.train.batch_size = *batch_size;
    if (learning_rate) c.train.learning_rate = *learning_rate;
    if (loss) c.loss = docds::with_variant(c.loss, docds::parse_loss_variant(*loss));
    if (live_weights) c.loss.detach_weights = false;
    if (top1_only) c.top1_only = true;
  }
};

struct Context {
  std::string config_path;
  std::string out = ".";
  std::string log_level = "info";
  Overrides flags;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  nlohmann::ordered_json outputs = nlohmann::ordered_json::object();

  PipelineConfig config() const {
    PipelineConfig c = docds::default_pipeline_config();
    if (!config_path.empty()) docds::apply_config(docds::ConfigTable::load(config_path), c);
    flags.apply(c);
    return c;
  }
  fs::path out_dir() const { return fs::path(out); }
};

void write_manifest(const Context& ctx, const std::string& command, const PipelineConfig& config,
                    const std::string& started) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["tool_version"] = DOCDS_VERSION;
  m["isa"] = docds::kernels::isa_name(docds::kernels::active_isa());
  m["seed"] = config.train.seed;
  m["config"] = docds::to_json(config);
  m["config_file"] = ctx.config_path;
  m["inputs"] = ctx.inputs;
  m["outputs"] = ctx.outputs;
  m["started"] = started;
  m["finished"] = utc_now();
  fs::create_directories(ctx.out_dir());
  std::ofstream(ctx.out_dir() / "run_manifest.json") << m.dump(2) << '\n';
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path);
  if (!out) throw docds::Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Where synthetic data for end-to-end runs lives: DOCDS_CACHE_DIR when set.
fs::path synth_dir(const Context& ctx, const docds::SynthConfig& s) {
  if (const char* cache = std::getenv("DOCDS_CACHE_DIR"); cache != nullptr && *cache != '\0') {
    const std::string key = docds::to_json(PipelineConfig{.synth = s})["synth"].dump();
    return fs::path(cache) / fmt::format("synth_{:016x}", docds::fnv1a(key));
  }
  return ctx.out_dir() / "data";
}

docds::Dataset synthesize(Context& ctx, const PipelineConfig& c) {
  const auto data = docds::generate(c.synth);
  const fs::path dir = synth_dir(ctx, c.synth);
  docds::write_synth(dir, data);
  ctx.outputs["data"] = dir.string();
  return docds::dataset_from_synth(data);
}

void add_builder_flags(CLI::App* cmd, Overrides& f) {
  cmd->add_option("--max-tokens", f.max_tokens, "document token cap M (default 300)");
  cmd->add_option("--max-sentences", f.max_sentences, "sentences kept per pair group N (default 15)");
  cmd->add_option("--mode", f.mode, "document mode")->check(CLI::IsMember({"entity", "pair", "sent"}));
}

void add_synth_flags(CLI::App* cmd, Overrides& f) {
  cmd->add_option("--n-entities", f.n_entities);
  cmd->add_option("--n-relations", f.n_relations);
  cmd->add_option("--n-facts", f.n_facts);
  cmd->add_option("--noise-rate", f.noise_rate)->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--na-fraction", f.na_fraction)->check(CLI::Range(0.0, 1.0));
}

void add_train_flags(CLI::App* cmd, Overrides& f) {
  cmd->add_option("--epochs", f.epochs);
  cmd->add_option("--batch-size", f.batch_size);
  cmd->add_option("--lr", f.learning_rate, "peak learning rate");
  cmd->add_option("--loss", f.loss, "loss variant")
      ->check(CLI::IsMember({"DSLoss", "dsloss", "-risk", "-noise", "-both"}));
  cmd->add_flag("--live-weights", f.live_weights,
                "let gradients flow through the span weights and the risk factor");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Document-based distant supervision for relation extraction"};
  // Global options may also follow the subcommand.
  app.fallthrough();
  app.set_version_flag("--version", DOCDS_VERSION);
  app.require_subcommand(1);
  Context ctx;
  Overrides& f = ctx.flags;
  app.add_option("--config", ctx.config_path, "TOML config; flags override it")
      ->check(CLI::ExistingFile);
  app.add_option("--out", ctx.out, "output directory");
  app.add_option("--seed", f.seed, "seed for every stage");
  app.add_option("--log-level", ctx.log_level)
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_synth_flags(synth, f);

  // build-docs
  std::string corpus_path;
  auto* build_docs = app.add_subcommand("build-docs", "pack a corpus into pseudo documents");
  build_docs->add_option("--corpus", corpus_path, "corpus JSONL")->required()->check(CLI::ExistingFile);
  add_builder_flags(build_docs, f);

  // build-instances
  std::string docs_path, kb_path, relations_path, entities_path;
  auto* build_inst = app.add_subcommand("build-instances", "turn documents into MRC instances");
  build_inst->add_option("--documents", docs_path)->required()->check(CLI::ExistingFile);
  build_inst->add_option("--kb", kb_path)->required()->check(CLI::ExistingFile);
  build_inst->add_option("--relations", relations_path)->required()->check(CLI::ExistingFile);
  build_inst->add_option("--entities", entities_path)->check(CLI::ExistingFile);
  build_inst->add_option("--negative-keep-ratio", f.negative_keep_ratio)->check(CLI::Range(0.0, 1.0));
  build_inst->add_flag("--multi-question", f.multi_question, "one question per pattern");

  // train
  std::string instances_path;
  auto* train = app.add_subcommand("train", "train the reader");
  train->add_option("--documents", docs_path)->required()->check(CLI::ExistingFile);
  train->add_option("--instances", instances_path)->required()->check(CLI::ExistingFile);
  add_train_flags(train, f);

  // predict
  std::string model_path, vocab_path;
  auto* predict = app.add_subcommand("predict", "score test instances");
  predict->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  predict->add_option("--vocab", vocab_path)->required()->check(CLI::ExistingFile);
  predict->add_option("--documents", docs_path)->required()->check(CLI::ExistingFile);
  predict->add_option("--instances", instances_path)->required()->check(CLI::ExistingFile);
  predict->add_flag("--top1-only", f.top1_only, "emit only the top-1 answer per question");

  // evaluate
  std::string predictions_path;
  auto* evaluate = app.add_subcommand("evaluate", "held-out PR curve, AUC and P@N");
  evaluate->add_option("--predictions", predictions_path)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--gold", kb_path, "gold KB TSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--relations", relations_path)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--corpus", corpus_path,
                       "test corpus; restricts gold to co-occurring pairs and enables Multi/Single")
      ->check(CLI::ExistingFile);

  // sweep
  std::string axis, data_dir;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "one run per setting of an axis");
  sweep->add_option("--axis", axis, "sentences | loss | mode")->required();
  sweep->add_option("--values", values, "settings to run instead of the axis defaults");
  sweep->add_option("--data", data_dir, "dataset directory (default: synthesize)")
      ->check(CLI::ExistingDirectory);
  add_synth_flags(sweep, f);
  add_builder_flags(sweep, f);
  add_train_flags(sweep, f);

  // end-to-end
  auto* e2e = app.add_subcommand("end-to-end", "synth, documents, instances, train, predict, evaluate");
  e2e->add_option("--data", data_dir, "dataset directory (default: synthesize)")
      ->check(CLI::ExistingDirectory);
  add_synth_flags(e2e, f);
  add_builder_flags(e2e, f);
  add_train_flags(e2e, f);
  e2e->add_flag("--top1-only", f.top1_only, "emit only the top-1 answer per question");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  spdlog::set_level(spdlog::level::from_str(ctx.log_level));
  const std::string started = utc_now();
  std::string stage;
  try {
    stage = "config";
    const PipelineConfig config = ctx.config();
    const fs::path out = ctx.out_dir();
    fs::create_directories(out);
    std::string command;

    if (synth->parsed()) {
      command = "synth";
      stage = "synth";
      const auto data = docds::generate(config.synth);
      docds::write_synth(out, data);
      ctx.outputs["data"] = out.string();
      spdlog::info("{} train / {} test sentences, {} facts ({} noisy groups)",
                   data.train.corpus.size(), data.test.corpus.size(), data.stats.fact_groups,
                   data.stats.noisy_groups);
    } else if (build_docs->parsed()) {
      command = "build-docs";
      stage = "build-docs";
      config.builder.validate();
      ctx.inputs["corpus"] = corpus_path;
      const auto corpus = docds::load_corpus(corpus_path);
      for (const auto& err : corpus.report.errors) spdlog::warn("{}", err);
      docds::BuildStats stats;
      const auto docs = docds::make_documents(corpus.sentences, config.builder, &stats);
      docds::write_documents(out / "documents.jsonl", docs);
      ctx.outputs["documents"] = (out / "documents.jsonl").string();
      spdlog::info("{} documents, {} hard cuts", docs.size(), stats.hard_cuts);
    } else if (build_inst->parsed()) {
      command = "build-instances";
      stage = "build-instances";
      ctx.inputs = {{"documents", docs_path}, {"kb", kb_path}, {"relations", relations_path}};
      const auto inventory = docds::load_inventory(relations_path);
      docds::EntityCatalog entities;
      if (!entities_path.empty()) entities = docds::load_entities(entities_path);
      const auto docs = docds::read_documents(fs::path(docs_path));
      const auto kb = docds::load_kb(kb_path, inventory).triples;
      const auto inst = docds::build_instances(docs, kb, inventory, entities, config.instances);
      docds::write_instances(out / "instances.jsonl", inst);
      ctx.outputs["instances"] = (out / "instances.jsonl").string();
      spdlog::info("{} instances", inst.size());
    } else if (train->parsed()) {
      command = "train";
      stage = "train";
      ctx.inputs = {{"documents", docs_path}, {"instances", instances_path}};
      const auto docs = docds::read_documents(fs::path(docs_path));
      const auto inst = docds::read_instances(fs::path(instances_path), docs);
      const auto vocab = docds::train_vocab(docs, inst, config.vocab);
      docds::EncoderConfig enc = config.encoder;
      enc.vocab_size = vocab.size();
      docds::Model model{enc, docds::init_params(enc, config.model_seed)};
      const auto examples = docds::pack_instances(inst, vocab, enc.max_seq_len);
      const auto split = docds::split_by_head(examples, config.validation_fraction, config.train.seed);
      std::vector<docds::TrainingExample> tr, va;
      for (auto i : split.train) tr.push_back(examples[i]);
      for (auto i : split.validation) va.push_back(examples[i]);
      docds::TrainConfig tc = config.train;
      tc.dump_dir = out;
      const auto result = docds::train(model, tr, va, tc, config.loss);
      vocab.save(out / "vocab.txt");
      docds::save_checkpoint(out / "model.ckpt", result.model, {{"best_epoch", result.best_epoch}});
      docds::write_metrics_csv(out / "metrics.csv", result.history);
      ctx.outputs = {{"model", (out / "model.ckpt").string()},
                     {"vocab", (out / "vocab.txt").string()},
                     {"metrics", (out / "metrics.csv").string()}};
    } else if (predict->parsed()) {
      command = "predict";
      stage = "predict";
      ctx.inputs = {{"model", model_path}, {"vocab", vocab_path}, {"documents", docs_path},
                    {"instances", instances_path}};
      const auto model = docds::load_checkpoint(fs::path(model_path));
      const auto vocab = docds::WordPieceVocab::load(vocab_path);
      if (vocab.size() != model.config.vocab_size) {
        throw docds::ValidationError("vocabulary does not match the checkpoint");
      }
      const auto docs = docds::read_documents(fs::path(docs_path));
      const auto inst = docds::read_instances(fs::path(instances_path), docs);
      const auto examples = docds::pack_instances(inst, vocab, model.config.max_seq_len);
      const auto preds = docds::predict_all(model, examples, {config.top1_only});
      docds::write_predictions(out / "predictions.tsv", preds);
      ctx.outputs["predictions"] = (out / "predictions.tsv").string();
      spdlog::info("{} predictions", preds.size());
    } else if (evaluate->parsed()) {
      command = "evaluate";
      stage = "evaluate";
      ctx.inputs = {{"predictions", predictions_path}, {"gold", kb_path}, {"relations", relations_path}};
      const auto inventory = docds::load_inventory(relations_path);
      const auto kb = docds::load_kb(kb_path, inventory).triples;
      const auto ranked = docds::to_ranked(docds::read_predictions(fs::path(predictions_path)));
      std::set<docds::KBTriple> gold;
      std::optional<docds::SubsetCurves> subsets;
      if (!corpus_path.empty()) {
        ctx.inputs["corpus"] = corpus_path;
        const auto pairs = docds::index_pairs(docds::load_corpus(corpus_path).sentences);
        gold = docds::extractable_gold(kb, pairs);
        subsets = docds::subset_eval(ranked, gold, docds::sentence_counts(pairs));
      } else {
        for (const auto& t : kb) {
          if (t.tail != docds::kNaEntity) gold.insert(t);
        }
      }
      const auto curve = docds::evaluate(ranked, gold);
      auto summary = docds::summary_json(curve);
      if (subsets && subsets->multi) summary["auc_multi"] = subsets->multi->auc;
      if (subsets && subsets->single) summary["auc_single"] = subsets->single->auc;
      docds::write_pr_csv(out / "pr.csv", curve);
      write_json(out / "summary.json", summary);
      ctx.outputs = {{"pr", (out / "pr.csv").string()}, {"summary", (out / "summary.json").string()}};
      std::cout << summary.dump(2) << '\n';
    } else if (sweep->parsed()) {
      command = "sweep";
      stage = "sweep";
      const auto parsed_axis = docds::parse_sweep_axis(axis);
      const bool given = sweep->count("--values") > 0;
      if (given && values.empty()) throw docds::ConfigError("--values given without settings");
      docds::Dataset data;
      if (!data_dir.empty()) {
        ctx.inputs["data"] = data_dir;
        data = docds::load_dataset(data_dir);
      } else {
        data = synthesize(ctx, config);
      }
      const auto rows = docds::run_sweep(data, config, parsed_axis, given ? &values : nullptr, out);
      ctx.outputs["sweep"] = (out / "sweep.csv").string();
      for (const auto& r : rows) {
        std::cout << fmt::format("{:>8}  {}  val_auc {:.4f}  auc {:.4f}\n", r.setting,
                                 r.ok ? "ok    " : "FAILED", r.val_auc, r.auc);
      }
    } else if (e2e->parsed()) {
      command = "end-to-end";
      stage = "synth";
      docds::Dataset data;
      if (!data_dir.empty()) {
        ctx.inputs["data"] = data_dir;
        data = docds::load_dataset(data_dir);
      } else {
        data = synthesize(ctx, config);
      }
      stage = "pipeline";
      const auto result = docds::run_pipeline(data, config, out);
      ctx.outputs["summary"] = (out / "summary.json").string();
      std::cout << result.summary.dump(2) << '\n';
    }
    write_manifest(ctx, command, config, started);
    return 0;
  } catch (const docds::ConfigError& e) {
    std::cerr << "docds: configuration error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "docds: " << stage << " failed: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}
