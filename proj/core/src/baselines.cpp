#include "opinionxf/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "opinionxf/checkpoint.hpp"
#include "opinionxf/ops.hpp"

namespace opinionxf {

std::vector<std::size_t> majority_classes(
    const std::vector<EncodedItem>& train_items,
    const std::vector<std::size_t>& vocab_sizes) {
  if (train_items.empty())
    throw EmptyInputError("baseline_majority: empty training set");
  const std::size_t q_count = vocab_sizes.size();
  std::vector<std::size_t> modal(q_count, 0);
  for (std::size_t q = 0; q < q_count; ++q) {
    std::vector<std::size_t> counts(vocab_sizes[q], 0);
    for (const auto& item : train_items) ++counts[item.post_ids[q]];
    // First maximum wins: ids are in lexicographic answer order, so ties
    // resolve to the lexicographically smallest answer.
    std::size_t best = 0;
    for (std::size_t v = 1; v < counts.size(); ++v)
      if (counts[v] > counts[best]) best = v;
    modal[q] = best;
  }
  return modal;
}

EvalReport baseline_majority(const std::vector<EncodedItem>& train_items,
                             const std::vector<EncodedItem>& eval_items,
                             const std::vector<std::size_t>& vocab_sizes) {
  const auto modal = majority_classes(train_items, vocab_sizes);
  return evaluate([&modal](const EncodedItem&) { return modal; }, eval_items);
}

namespace {

// One multinomial regression head per question over the concatenated
// one-hot encoding of all pre-answers.
struct LogRegModel {
  std::vector<std::size_t> offsets;  // per-question input offset
  std::size_t input_dim = 0;
  std::vector<Tensor> weights;  // per question: (input_dim + 1) x V_q, last row bias

  std::vector<double> features(const EncodedItem& item) const {
    std::vector<double> x(input_dim, 0.0);
    for (std::size_t q = 0; q < offsets.size(); ++q)
      x[offsets[q] + item.pre_ids[q]] = 1.0;
    return x;
  }

  std::vector<double> head_logits(const std::vector<double>& x,
                                  std::size_t q) const {
    const Tensor& w = weights[q];
    std::vector<double> logits(w.cols, 0.0);
    for (std::size_t j = 0; j < w.cols; ++j) logits[j] = w(input_dim, j);
    for (std::size_t i = 0; i < input_dim; ++i) {
      if (x[i] == 0.0) continue;
      for (std::size_t j = 0; j < w.cols; ++j) logits[j] += x[i] * w(i, j);
    }
    return logits;
  }
};

}  // namespace

EvalReport baseline_logreg(const std::vector<EncodedItem>& train_items,
                           const std::vector<EncodedItem>& eval_items,
                           const std::vector<std::size_t>& vocab_sizes,
                           const LogRegOptions& options) {
  if (train_items.empty())
    throw EmptyInputError("baseline_logreg: empty training set");
  LogRegModel model;
  model.offsets.resize(vocab_sizes.size());
  for (std::size_t q = 0; q < vocab_sizes.size(); ++q) {
    model.offsets[q] = model.input_dim;
    model.input_dim += vocab_sizes[q];
  }
  for (std::size_t q = 0; q < vocab_sizes.size(); ++q)
    model.weights.emplace_back(model.input_dim + 1, vocab_sizes[q], 0.0);

  std::vector<std::vector<double>> features;
  features.reserve(train_items.size());
  for (const auto& item : train_items) features.push_back(model.features(item));

  const double inv_n = 1.0 / static_cast<double>(train_items.size());
  // Full-batch gradient descent per head, deterministic from zero init.
  for (std::size_t q = 0; q < vocab_sizes.size(); ++q) {
    Tensor& w = model.weights[q];
    Tensor grad(w.rows, w.cols);
    double prev_loss = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
      grad.fill(0.0);
      double loss = 0.0;
      for (std::size_t i = 0; i < train_items.size(); ++i) {
        const auto logits = model.head_logits(features[i], q);
        const auto probs = softmax(logits);
        const std::size_t y = train_items[i].post_ids[q];
        loss -= std::log(std::max(probs[y], 1e-300));
        for (std::size_t j = 0; j < probs.size(); ++j) {
          const double delta = probs[j] - (j == y ? 1.0 : 0.0);
          grad(model.input_dim, j) += delta;  // bias row
          for (std::size_t f = 0; f < model.input_dim; ++f)
            if (features[i][f] != 0.0) grad(f, j) += delta;
        }
      }
      loss *= inv_n;
      if (q == 0 && options.loss_trace != nullptr)
        options.loss_trace->push_back(loss);
      for (std::size_t k = 0; k < w.data.size(); ++k)
        w.data[k] -= options.learning_rate * inv_n * grad.data[k];
      if (std::fabs(prev_loss - loss) < options.tolerance) break;
      prev_loss = loss;
    }
  }

  return evaluate(
      [&model](const EncodedItem& item) {
        const auto x = model.features(item);
        std::vector<std::size_t> pred(model.offsets.size());
        for (std::size_t q = 0; q < model.offsets.size(); ++q)
          pred[q] = argmax_index(model.head_logits(x, q));
        return pred;
      },
      eval_items);
}

namespace {

// Mean pre-answer embedding concatenated with the presentation vector into
// one hidden GELU layer and per-question heads; shares TrainableModel so
// the standard loop trains it.
class MeanPoolMlp : public TrainableModel {
 public:
  MeanPoolMlp(const AnswerEmbeddingTable& table,
              std::vector<std::size_t> vocab_sizes, std::size_t hidden,
              std::uint64_t seed)
      : table_(table), vocab_sizes_(std::move(vocab_sizes)) {
    const std::size_t in_dim = 2 * table_.embed_dim;
    Pcg32 rng(seed);
    auto uniform = [&rng](std::size_t r, std::size_t c, std::size_t fan_in) {
      Tensor t(r, c);
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      t.fill_uniform(rng, -bound, bound);
      return t;
    };
    params_.add("mlp.w1", uniform(in_dim, hidden, in_dim));
    params_.add("mlp.b1", uniform(1, hidden, in_dim));
    for (std::size_t q = 0; q < vocab_sizes_.size(); ++q) {
      params_.add("mlp.head.q" + std::to_string(q) + ".w",
                  uniform(hidden, vocab_sizes_[q], hidden));
      params_.add("mlp.head.q" + std::to_string(q) + ".b",
                  uniform(1, vocab_sizes_[q], hidden));
    }
  }

  ParamStore& params() override { return params_; }
  const ParamStore& params() const override { return params_; }

  std::vector<double> input_features(const EncodedItem& item) const {
    const std::size_t e = table_.embed_dim;
    std::vector<double> x(2 * e, 0.0);
    const double inv_q = 1.0 / static_cast<double>(item.pre_ids.size());
    for (std::size_t q = 0; q < item.pre_ids.size(); ++q) {
      const double* row = table_.per_question[q].row_ptr(item.pre_ids[q]);
      for (std::size_t i = 0; i < e; ++i) x[i] += row[i] * inv_q;
    }
    for (std::size_t i = 0; i < e; ++i) x[e + i] = item.deck_vec[i];
    return x;
  }

  Tape::Id sample_loss(Tape& tape, const EncodedItem& item, GradStore* grads,
                       double, Pcg32*,
                       const std::vector<const std::vector<double>*>*)
      const override {
    auto use = [&](const std::string& name) {
      const std::size_t idx = params_.index_of(name);
      Tensor* sink = grads != nullptr ? &grads->at(idx) : nullptr;
      return tape.param(params_.entry(idx).value, sink);
    };
    const auto x = tape.input(Tensor::row_vector(input_features(item)));
    const auto hidden =
        tape.gelu(tape.add(tape.matmul(x, use("mlp.w1")), use("mlp.b1")));
    std::vector<Tape::Id> terms;
    terms.reserve(vocab_sizes_.size());
    for (std::size_t q = 0; q < vocab_sizes_.size(); ++q) {
      const std::string base = "mlp.head.q" + std::to_string(q) + ".";
      const auto logits = tape.add(tape.matmul(hidden, use(base + "w")),
                                   use(base + "b"));
      terms.push_back(tape.cross_entropy_logits(logits, item.post_ids[q]));
    }
    return tape.add_scalars(terms);
  }

  std::vector<std::size_t> predict_ids(const EncodedItem& item) const override {
    Tape tape;
    auto use = [&](const std::string& name) {
      return tape.param(params_.get(name), nullptr);
    };
    const auto x = tape.input(Tensor::row_vector(input_features(item)));
    const auto hidden =
        tape.gelu(tape.add(tape.matmul(x, use("mlp.w1")), use("mlp.b1")));
    std::vector<std::size_t> out(vocab_sizes_.size());
    for (std::size_t q = 0; q < vocab_sizes_.size(); ++q) {
      const std::string base = "mlp.head.q" + std::to_string(q) + ".";
      const auto logits = tape.add(tape.matmul(hidden, use(base + "w")),
                                   use(base + "b"));
      out[q] = argmax_index(tape.val_row(logits));
    }
    return out;
  }

 private:
  const AnswerEmbeddingTable& table_;
  std::vector<std::size_t> vocab_sizes_;
  ParamStore params_;
};

}  // namespace

EvalReport baseline_meanpool_mlp(const std::vector<EncodedItem>& train_items,
                                 const std::vector<EncodedItem>& eval_items,
                                 const AnswerEmbeddingTable& table,
                                 const std::vector<std::size_t>& vocab_sizes,
                                 const TrainConfig& config,
                                 std::size_t hidden_width) {
  MeanPoolMlp model(table, vocab_sizes, hidden_width, config.seed);
  TrainConfig resolved = config;
  resolved.batch_size = config.effective_batch(false);
  auto loop = train_loop(model, train_items, eval_items, resolved, 0.0,
                         vocab_sizes, 0.0);
  model.params() = std::move(loop.best_params);
  return evaluate(
      [&model](const EncodedItem& item) { return model.predict_ids(item); },
      eval_items);
}

std::string split_identity(const DatasetSplit& split) {
  std::string payload = std::to_string(split.seed) + "|";
  for (const auto& r : split.train) payload += r.participant_id + ",";
  payload += "|";
  for (const auto& r : split.validation) payload += r.participant_id + ",";
  return fnv1a_hex(payload);
}

ComparisonTable compare_systems(const std::vector<SystemEval>& systems) {
  if (systems.empty()) throw ComparisonError("compare: no systems");
  ComparisonTable table;
  for (const auto& system : systems) {
    if (system.split_tag != systems.front().split_tag)
      throw ComparisonError("compare: system \"" + system.name +
                            "\" was evaluated on a different split");
    table.rows.push_back({system.name, system.report.micro_accuracy,
                          system.report.macro_f1});
  }
  return table;
}

std::string ComparisonTable::to_csv() const {
  std::ostringstream out;
  out << "model,accuracy,f1\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.3f,%.3f", row.accuracy, row.f1);
    out << row.model << ',' << buf << '\n';
  }
  return out.str();
}

ComparisonTable ComparisonTable::from_csv(const std::string& text) {
  ComparisonTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "model,accuracy,f1")
    throw FormatError("comparison csv: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw FormatError("comparison csv: bad row \"" + line + "\"");
    ComparisonRow row;
    row.model = line.substr(0, c1);
    row.accuracy = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    row.f1 = std::stod(line.substr(c2 + 1));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace opinionxf
