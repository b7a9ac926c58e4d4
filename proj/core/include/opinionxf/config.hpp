#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "opinionxf/dataset.hpp"
#include "opinionxf/model.hpp"
#include "opinionxf/training.hpp"

namespace opinionxf {

struct PathsConfig {
  std::filesystem::path dataset;
  std::filesystem::path decks;
  std::filesystem::path embeddings;  // optional precomputed vectors
  std::filesystem::path out_dir = "out";
};

// Merged view of every section of the run configuration file. The file is
// key/value text with [section] headers; each [topic] block appends one
// topic to the generator. Full schema in docs/config.md.
struct RunConfig {
  GeneratorConfig generator;
  ModelConfig model;
  TrainConfig training;
  PathsConfig paths;
  double split_ratio = 0.8;

  // Applies the --seed flag / OPINIONXF_SEED env override to the
  // generator, model, and training seeds at once.
  void override_seed(std::uint64_t seed);
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

std::string read_file_bytes(const std::filesystem::path& path);

// Default configuration text matching GeneratorConfig::defaults(); printed
// by `opinionxf datagen --emit-default-config`.
std::string default_config_text();

}  // namespace opinionxf
