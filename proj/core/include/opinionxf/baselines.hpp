#pragma once

#include <string>
#include <vector>

#include "opinionxf/evaluation.hpp"
#include "opinionxf/training.hpp"

namespace opinionxf {

// Per question, the training set's modal post-answer id (ties resolve to
// the smallest id, which is the lexicographically smallest answer).
std::vector<std::size_t> majority_classes(
    const std::vector<EncodedItem>& train_items,
    const std::vector<std::size_t>& vocab_sizes);

EvalReport baseline_majority(const std::vector<EncodedItem>& train_items,
                             const std::vector<EncodedItem>& eval_items,
                             const std::vector<std::size_t>& vocab_sizes);

// Per-question multinomial logistic regression on the concatenated one-hot
// of all pre-answers, full-batch gradient descent from zero weights.
struct LogRegOptions {
  double learning_rate = 0.25;
  std::size_t max_iterations = 1500;
  double tolerance = 1e-7;  // stop when the loss improvement drops below it
  // When set, receives the per-iteration training loss of question 0's head.
  std::vector<double>* loss_trace = nullptr;
};
EvalReport baseline_logreg(const std::vector<EncodedItem>& train_items,
                           const std::vector<EncodedItem>& eval_items,
                           const std::vector<std::size_t>& vocab_sizes,
                           const LogRegOptions& options = {});

// Mean of the pre-answer embedding vectors concatenated with the
// presentation vector, one hidden GELU layer of width d_model, Q linear
// heads; trained with the shared AdamW/cosine/clip recipe.
EvalReport baseline_meanpool_mlp(const std::vector<EncodedItem>& train_items,
                                 const std::vector<EncodedItem>& eval_items,
                                 const AnswerEmbeddingTable& table,
                                 const std::vector<std::size_t>& vocab_sizes,
                                 const TrainConfig& config,
                                 std::size_t hidden_width);

// One comparison row per evaluated system.
struct ComparisonRow {
  std::string model;
  double accuracy = 0.0;
  double f1 = 0.0;
};
struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::string to_csv() const;  // 3-decimal accuracy/f1 columns
  static ComparisonTable from_csv(const std::string& text);
};

// Stable digest of a split, used to refuse comparisons across different
// splits.
std::string split_identity(const DatasetSplit& split);

struct SystemEval {
  std::string name;
  EvalReport report;
  std::string split_tag;
};

// Rows in input order; every system must carry the same split tag.
ComparisonTable compare_systems(const std::vector<SystemEval>& systems);

}  // namespace opinionxf
