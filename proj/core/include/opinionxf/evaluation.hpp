#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "opinionxf/corpus.hpp"

namespace opinionxf {

// Predicted/target answer ids per record per question, plus the context
// needed for per-topic breakdowns.
struct PredCells {
  std::vector<std::vector<std::size_t>> preds;
  std::vector<std::vector<std::size_t>> targets;
  std::vector<std::vector<std::size_t>> pre;  // pre-exposure ids
  std::vector<std::string> topics;
};

struct TopicMetrics {
  double macro_f1 = 0.0;
  double micro_accuracy = 0.0;
  // Among cells whose answer actually changed (post != pre), the fraction
  // the model predicted correctly.
  double shift_agreement = 0.0;
  double shift_rate = 0.0;  // measured fraction of changed cells
  std::size_t n_records = 0;
};

struct EvalReport {
  double macro_f1 = 0.0;
  double micro_accuracy = 0.0;
  std::vector<double> per_question_f1;
  std::map<std::string, TopicMetrics> per_topic;
  std::size_t n_eval = 0;
};

// Macro-F1 convention: within each question, every class that occurs in
// the gold labels or in the predictions contributes an F1 (0 when a
// denominator vanishes); classes absent from both are excluded. The
// per-question macro scores are then averaged across questions.
double macro_f1(const std::vector<std::vector<std::size_t>>& preds,
                const std::vector<std::vector<std::size_t>>& targets);

double micro_accuracy(const std::vector<std::vector<std::size_t>>& preds,
                      const std::vector<std::vector<std::size_t>>& targets);

std::vector<double> per_question_f1(
    const std::vector<std::vector<std::size_t>>& preds,
    const std::vector<std::vector<std::size_t>>& targets);

EvalReport build_report(const PredCells& cells);

using Predictor = std::function<std::vector<std::size_t>(const EncodedItem&)>;

EvalReport evaluate(const Predictor& predictor,
                    const std::vector<EncodedItem>& items);

PredCells collect_cells(const Predictor& predictor,
                        const std::vector<EncodedItem>& items);

}  // namespace opinionxf
