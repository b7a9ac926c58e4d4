#include "opinionxf/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "opinionxf/baselines.hpp"
#include "opinionxf/checkpoint.hpp"
#include "opinionxf/config.hpp"
#include "opinionxf/corpus.hpp"
#include "opinionxf/dataset.hpp"
#include "opinionxf/embeddings.hpp"
#include "opinionxf/evaluation.hpp"
#include "opinionxf/training.hpp"

namespace opinionxf {

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("OPINIONXF_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    return std::stoull(raw);
  } catch (const std::exception&) {
    throw ConfigError("OPINIONXF_SEED is not an integer");
  }
}

RunConfig load_and_resolve(const CommandOptions& options) {
  RunConfig cfg = load_run_config(options.config_path);
  if (const auto seed = env_seed()) cfg.override_seed(*seed);
  if (options.seed) cfg.override_seed(*options.seed);
  if (options.out_dir) cfg.paths.out_dir = *options.out_dir;
  if (options.threads != 0) cfg.training.threads = options.threads;
  return cfg;
}

// Every command copies its configuration next to its outputs, with a
// content hash, so a run can be reproduced from the output directory alone.
void echo_config(const RunConfig& cfg, const CommandOptions& options,
                 std::ostream& log) {
  std::filesystem::create_directories(cfg.paths.out_dir);
  const std::string bytes = read_file_bytes(options.config_path);
  {
    std::ofstream out(cfg.paths.out_dir / "config_used.ini", std::ios::binary);
    out << bytes;
  }
  const std::string digest = fnv1a_hex(bytes);
  {
    std::ofstream out(cfg.paths.out_dir / "config_used.hash");
    out << digest << '\n';
  }
  log << "config " << options.config_path.string() << " (hash " << digest
      << ")\n";
}

std::set<std::string> declared_topics(const GeneratorConfig& generator) {
  std::set<std::string> topics;
  for (const auto& t : generator.topics) topics.insert(t.name);
  return topics;
}

struct LoadedCorpus {
  std::vector<SurveyRecord> records;
  std::vector<DeckText> decks;
  std::map<std::string, std::vector<double>> precomputed;
  bool has_precomputed = false;
};

LoadedCorpus load_corpus_files(const RunConfig& cfg) {
  LoadedCorpus out;
  out.records = load_records(cfg.paths.dataset, declared_topics(cfg.generator));
  out.decks = load_decks(cfg.paths.decks);
  if (!cfg.paths.embeddings.empty() &&
      std::filesystem::exists(cfg.paths.embeddings)) {
    out.precomputed = load_precomputed(cfg.paths.embeddings);
    out.has_precomputed = true;
  }
  return out;
}

}  // namespace

void run_datagen(const CommandOptions& options, std::ostream& log) {
  const RunConfig cfg = load_and_resolve(options);
  cfg.generator.validate();
  echo_config(cfg, options, log);
  const auto& out_dir = cfg.paths.out_dir;

  const auto records = generate_synthetic(cfg.generator);
  write_records(out_dir / "dataset.jsonl", records);

  std::vector<DeckText> decks;
  decks.reserve(cfg.generator.topics.size());
  for (const auto& topic : cfg.generator.topics)
    decks.push_back(synthesize_topic_deck(topic.name));
  write_decks(out_dir / "decks.jsonl", decks);

  std::map<std::string, std::vector<double>> vectors;
  for (const auto& deck : decks)
    vectors[deck.deck_id] =
        hashed_presentation_vector(deck, cfg.generator.embed_dim).vec;
  const auto vocab = build_vocabulary(records);
  for (std::size_t q = 0; q < vocab.question_count(); ++q)
    for (std::size_t id = 0; id < vocab.size(q); ++id) {
      const std::string& answer = vocab.answer_of(q, id);
      vectors["q" + std::to_string(q) + ":" + answer] =
          hash_embed(answer, cfg.generator.embed_dim);
    }
  write_precomputed(out_dir / "embeddings.txt", vectors,
                    cfg.generator.embed_dim);

  const auto measured = measure_shift_rate(records);
  const auto oracle = BayesOracle::from_config(cfg.generator);
  log << "generated " << records.size() << " records over "
      << cfg.generator.topics.size() << " topics\n";
  log << "shift rates (measured | analytic):\n";
  char buf[64];
  for (const auto& [topic, rates] : measured) {
    const std::size_t t = oracle.topic_index(topic);
    log << "  " << topic << ":";
    for (std::size_t q = 0; q < rates.size(); ++q) {
      std::snprintf(buf, sizeof(buf), " %.3f|%.3f", rates[q],
                    oracle.expected_shift_rate(t, q));
      log << buf;
    }
    log << '\n';
  }
}

void run_train(const CommandOptions& options, std::ostream& log) {
  const RunConfig cfg = load_and_resolve(options);
  echo_config(cfg, options, log);
  const auto corpus = load_corpus_files(cfg);

  const auto split_result =
      split(corpus.records, cfg.split_ratio, cfg.training.seed);
  const auto outcome =
      train(split_result, corpus.decks, cfg.training, cfg.model,
            corpus.has_precomputed ? &corpus.precomputed : nullptr);

  const auto& out_dir = cfg.paths.out_dir;
  save_checkpoint(out_dir / "checkpoint.opxf", outcome.best);
  write_history_csv(out_dir / "history.csv", outcome.history);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "best epoch %zu: val_loss %.6f val_macro_f1 %.4f (%zu epochs)\n",
                outcome.best.epoch, outcome.best.val_loss,
                outcome.best.val_macro_f1, outcome.history.size());
  log << buf;
  log << "checkpoint " << (out_dir / "checkpoint.opxf").string() << '\n';
}

void run_eval(const CommandOptions& options, std::ostream& log) {
  const RunConfig cfg = load_and_resolve(options);
  echo_config(cfg, options, log);
  if (options.checkpoint_path.empty())
    throw ConfigError("eval: --checkpoint is required");
  const auto ckpt = load_checkpoint(options.checkpoint_path);

  RunConfig data_cfg = cfg;
  if (!options.dataset_path.empty()) data_cfg.paths.dataset = options.dataset_path;
  const auto corpus = load_corpus_files(data_cfg);

  const auto ctx = CorpusContext::with_vocab(
      ckpt.vocab, corpus.decks, ckpt.model_config.embed_dim,
      corpus.has_precomputed ? &corpus.precomputed : nullptr);
  const auto items = ctx.encode(corpus.records);

  OpinionXfModel model(ckpt.model_config, ckpt.params);
  const auto report = evaluate(
      [&model](const EncodedItem& item) { return model.predict_ids(item); },
      items);

  const auto& out_dir = cfg.paths.out_dir;
  write_eval_report_csv(out_dir / "eval_report.csv", report);
  write_per_topic_csv(out_dir / "eval_per_topic.csv", report);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "macro_f1 %.4f micro_accuracy %.4f n=%zu\n",
                report.macro_f1, report.micro_accuracy, report.n_eval);
  log << buf;
}

void run_compare(const CommandOptions& options, std::ostream& log) {
  const RunConfig cfg = load_and_resolve(options);
  echo_config(cfg, options, log);
  const auto corpus = load_corpus_files(cfg);
  const auto split_result =
      split(corpus.records, cfg.split_ratio, cfg.training.seed);
  const auto* pre = corpus.has_precomputed ? &corpus.precomputed : nullptr;

  std::vector<SurveyRecord> all_records = split_result.train;
  all_records.insert(all_records.end(), split_result.validation.begin(),
                     split_result.validation.end());
  const auto ctx =
      CorpusContext::build(all_records, corpus.decks, cfg.model.embed_dim, pre);
  const auto train_items = ctx.encode(split_result.train);
  const auto val_items = ctx.encode(split_result.validation);
  const auto sizes = ctx.vocab.sizes();

  const std::string split_tag = split_identity(split_result);
  std::vector<SystemEval> systems;
  auto add_row = [&systems, &split_tag, &log](const std::string& name,
                                              const EvalReport& report) {
    systems.push_back({name, report, split_tag});
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-16s accuracy %.3f f1 %.3f\n",
                  name.c_str(), report.micro_accuracy, report.macro_f1);
    log << buf;
  };

  add_row("majority", baseline_majority(train_items, val_items, sizes));
  add_row("logreg", baseline_logreg(train_items, val_items, sizes));
  add_row("meanpool_mlp",
          baseline_meanpool_mlp(train_items, val_items, ctx.answer_table(pre),
                                sizes, cfg.training, cfg.model.d_model));

  struct Variant {
    const char* name;
    bool fusion, quantum, contrastive;
  };
  const Variant variants[] = {
      {"normal", false, false, false},
      {"frequency_fusion", true, false, false},
      {"quantum", true, true, true},
  };
  for (const auto& variant : variants) {
    ModelConfig mcfg = cfg.model;
    mcfg.use_fusion = variant.fusion;
    mcfg.use_quantum = variant.quantum;
    mcfg.use_contrastive = variant.contrastive;
    const auto outcome =
        train(split_result, corpus.decks, cfg.training, mcfg, pre);
    OpinionXfModel best(outcome.best.model_config, outcome.best.params);
    add_row(variant.name,
            evaluate(
                [&best](const EncodedItem& item) {
                  return best.predict_ids(item);
                },
                val_items));
  }

  const auto table = compare_systems(systems);
  const auto& out_dir = cfg.paths.out_dir;
  std::ofstream out(out_dir / "comparison.csv");
  if (!out) throw IoError("cannot write comparison.csv");
  out << table.to_csv();
  log << "comparison " << (out_dir / "comparison.csv").string() << '\n';
}

int run_verify(std::ostream& log) {
  const auto results = run_verification();
  log << format_verification_table(results);
  int failures = 0;
  for (const auto& r : results)
    if (!r.pass) ++failures;
  return failures;
}

}  // namespace opinionxf
