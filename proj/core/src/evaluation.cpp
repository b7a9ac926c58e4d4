#include "opinionxf/evaluation.hpp"

#include <algorithm>

namespace opinionxf {

namespace {

void check_aligned(const std::vector<std::vector<std::size_t>>& preds,
                   const std::vector<std::vector<std::size_t>>& targets) {
  if (preds.empty() || preds.size() != targets.size())
    throw EmptyInputError("metrics: empty or misaligned prediction lists");
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].size() != targets[i].size() ||
        preds[i].size() != preds[0].size())
      throw SchemaError("metrics: ragged prediction rows");
}

// Macro-F1 for one question's cells; classes appearing in neither gold nor
// predictions are excluded, vanishing denominators score 0.
double question_macro_f1(const std::vector<std::size_t>& preds,
                         const std::vector<std::size_t>& targets) {
  std::size_t max_class = 0;
  for (std::size_t v : preds) max_class = std::max(max_class, v);
  for (std::size_t v : targets) max_class = std::max(max_class, v);
  const std::size_t n_classes = max_class + 1;
  std::vector<std::size_t> tp(n_classes, 0), pred_count(n_classes, 0),
      gold_count(n_classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ++pred_count[preds[i]];
    ++gold_count[targets[i]];
    if (preds[i] == targets[i]) ++tp[preds[i]];
  }
  double sum = 0.0;
  std::size_t included = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (pred_count[c] == 0 && gold_count[c] == 0) continue;
    ++included;
    const double p = pred_count[c] == 0
                         ? 0.0
                         : static_cast<double>(tp[c]) / pred_count[c];
    const double r = gold_count[c] == 0
                         ? 0.0
                         : static_cast<double>(tp[c]) / gold_count[c];
    if (p + r > 0.0) sum += 2.0 * p * r / (p + r);
  }
  return included == 0 ? 0.0 : sum / static_cast<double>(included);
}

}  // namespace

std::vector<double> per_question_f1(
    const std::vector<std::vector<std::size_t>>& preds,
    const std::vector<std::vector<std::size_t>>& targets) {
  check_aligned(preds, targets);
  const std::size_t q_count = preds[0].size();
  std::vector<double> out(q_count);
  std::vector<std::size_t> p_col(preds.size()), t_col(preds.size());
  for (std::size_t q = 0; q < q_count; ++q) {
    for (std::size_t i = 0; i < preds.size(); ++i) {
      p_col[i] = preds[i][q];
      t_col[i] = targets[i][q];
    }
    out[q] = question_macro_f1(p_col, t_col);
  }
  return out;
}

double macro_f1(const std::vector<std::vector<std::size_t>>& preds,
                const std::vector<std::vector<std::size_t>>& targets) {
  const auto per_q = per_question_f1(preds, targets);
  double sum = 0.0;
  for (double v : per_q) sum += v;
  return sum / static_cast<double>(per_q.size());
}

double micro_accuracy(const std::vector<std::vector<std::size_t>>& preds,
                      const std::vector<std::vector<std::size_t>>& targets) {
  check_aligned(preds, targets);
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t q = 0; q < preds[i].size(); ++q) {
      ++total;
      if (preds[i][q] == targets[i][q]) ++correct;
    }
  return static_cast<double>(correct) / static_cast<double>(total);
}

EvalReport build_report(const PredCells& cells) {
  check_aligned(cells.preds, cells.targets);
  EvalReport report;
  report.n_eval = cells.preds.size();
  report.macro_f1 = macro_f1(cells.preds, cells.targets);
  report.micro_accuracy = micro_accuracy(cells.preds, cells.targets);
  report.per_question_f1 = per_question_f1(cells.preds, cells.targets);

  std::map<std::string, std::vector<std::size_t>> by_topic;
  for (std::size_t i = 0; i < cells.topics.size(); ++i)
    by_topic[cells.topics[i]].push_back(i);
  for (const auto& [topic, rows] : by_topic) {
    std::vector<std::vector<std::size_t>> p, t;
    p.reserve(rows.size());
    t.reserve(rows.size());
    std::size_t shifted = 0, shifted_correct = 0, total_cells = 0;
    for (std::size_t i : rows) {
      p.push_back(cells.preds[i]);
      t.push_back(cells.targets[i]);
      for (std::size_t q = 0; q < cells.targets[i].size(); ++q) {
        ++total_cells;
        if (cells.targets[i][q] != cells.pre[i][q]) {
          ++shifted;
          if (cells.preds[i][q] == cells.targets[i][q]) ++shifted_correct;
        }
      }
    }
    TopicMetrics tm;
    tm.n_records = rows.size();
    tm.macro_f1 = macro_f1(p, t);
    tm.micro_accuracy = micro_accuracy(p, t);
    tm.shift_rate = total_cells == 0
                        ? 0.0
                        : static_cast<double>(shifted) / total_cells;
    tm.shift_agreement =
        shifted == 0 ? 0.0 : static_cast<double>(shifted_correct) / shifted;
    report.per_topic[topic] = tm;
  }
  return report;
}

PredCells collect_cells(const Predictor& predictor,
                        const std::vector<EncodedItem>& items) {
  if (items.empty()) throw EmptyInputError("evaluate: no records");
  PredCells cells;
  cells.preds.reserve(items.size());
  cells.targets.reserve(items.size());
  cells.pre.reserve(items.size());
  cells.topics.reserve(items.size());
  for (const auto& item : items) {
    cells.preds.push_back(predictor(item));
    cells.targets.push_back(item.post_ids);
    cells.pre.push_back(item.pre_ids);
    cells.topics.push_back(item.topic);
  }
  return cells;
}

EvalReport evaluate(const Predictor& predictor,
                    const std::vector<EncodedItem>& items) {
  return build_report(collect_cells(predictor, items));
}

}  // namespace opinionxf
