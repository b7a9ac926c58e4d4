#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "opinionxf/verify.hpp"

namespace opinionxf {

// Seed precedence: --seed flag, then OPINIONXF_SEED, then the config file.
struct CommandOptions {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out_dir;  // --out
  std::optional<std::uint64_t> seed;             // --seed
  std::size_t threads = 0;                       // --threads, 0 = config value
  std::filesystem::path checkpoint_path;         // eval only
  std::filesystem::path dataset_path;            // eval only, optional override
};

// Writes dataset.jsonl, decks.jsonl and embeddings.txt into the output
// directory and prints measured vs analytic shift rates per topic.
void run_datagen(const CommandOptions& options, std::ostream& log);

// Trains one model per the config; writes checkpoint.opxf and history.csv.
void run_train(const CommandOptions& options, std::ostream& log);

// Evaluates a checkpoint over a dataset; writes eval_report.csv and
// eval_per_topic.csv.
void run_eval(const CommandOptions& options, std::ostream& log);

// Trains the three encoder variants plus the three baselines on one shared
// split and writes comparison.csv.
void run_compare(const CommandOptions& options, std::ostream& log);

// Runs the oracle suite; returns the number of failed checks.
int run_verify(std::ostream& log);

}  // namespace opinionxf
