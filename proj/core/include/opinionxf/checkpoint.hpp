#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "opinionxf/evaluation.hpp"
#include "opinionxf/training.hpp"

namespace opinionxf {

// Versioned text container: one header line, the model config, metadata,
// the vocabulary (JSON array per question), then every parameter tensor
// with its name and shape. Floats use %.17g so reloads are bit-exact.
// Layout details in docs/formats.md.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<TrainHistoryRow>& history);

void write_eval_report_csv(const std::filesystem::path& path,
                           const EvalReport& report);
void write_per_topic_csv(const std::filesystem::path& path,
                         const EvalReport& report);

std::string fnv1a_hex(const std::string& payload);
std::string serialize_model_config(const ModelConfig& config);
ModelConfig parse_model_config(const std::string& line);

}  // namespace opinionxf
