#include "opinionxf/training.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "opinionxf/evaluation.hpp"
#include "opinionxf/ops.hpp"

namespace opinionxf {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
// Distinct pcg32 stream ids so shuffling and dropout never share draws.
constexpr std::uint64_t kShuffleStream = 101;
constexpr std::uint64_t kDropoutStreamBase = 1u << 20;
}  // namespace

void TrainConfig::validate() const {
  if (!(lr_max > lr_min) || lr_min < 0.0)
    throw ConfigError("training: need lr_max > lr_min >= 0");
  if (weight_decay < 0.0) throw ConfigError("training: weight_decay < 0");
  if (clip_norm <= 0.0) throw ConfigError("training: clip_norm must be > 0");
  if (epochs < 20 || epochs > 100)
    throw ConfigError("training: epochs must be in [20, 100]");
  if (lambda_contrastive < 0.0)
    throw ConfigError("training: lambda_contrastive < 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("training: betas must be in [0, 1)");
  if (eps_adam <= 0.0) throw ConfigError("training: eps_adam must be > 0");
  if (threads == 0) throw ConfigError("training: threads must be >= 1");
}

double cross_entropy_total(const std::vector<std::vector<double>>& logits,
                           const std::vector<std::size_t>& targets) {
  if (logits.size() != targets.size())
    throw SchemaError("cross_entropy_total: size mismatch");
  double total = 0.0;
  for (std::size_t q = 0; q < logits.size(); ++q) {
    const auto& row = logits[q];
    if (targets[q] >= row.size())
      throw SchemaError("cross_entropy_total: target out of range");
    double m = row[0];
    for (double v : row) m = std::max(m, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - m);
    total += std::log(z) + m - row[targets[q]];
  }
  return total;
}

double cosine_alignment_loss(const std::vector<double>& u,
                             const std::vector<double>& v) {
  if (u.size() != v.size())
    throw SchemaError("cosine_alignment_loss: size mismatch");
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu < 1e-30 || nv < 1e-30) return 1.0;  // cosine 0 by convention
  return 1.0 - dot(u, v) / (nu * nv);
}

double total_loss(const TrainableModel& model,
                  const std::vector<EncodedItem>& batch, double lambda) {
  if (batch.empty()) throw EmptyInputError("total_loss: empty batch");
  double sum = 0.0;
  for (const auto& item : batch) {
    Tape tape;
    const auto loss =
        model.sample_loss(tape, item, nullptr, lambda, nullptr, nullptr);
    sum += tape.val(loss).data[0];
  }
  return sum / static_cast<double>(batch.size());
}

double clip_gradients(GradStore& grads, double max_norm) {
  if (max_norm <= 0.0) throw ConfigError("clip_gradients: max_norm must be > 0");
  if (!grads.all_finite())
    throw NumericError("clip_gradients: non-finite gradient");
  const double norm = grads.global_norm();
  if (norm > max_norm) grads.scale(max_norm / norm);
  assert(grads.global_norm() <= max_norm + 1e-9);
  return norm;
}

AdamWState::AdamWState(const ParamStore& params) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params.entry(i).value;
    m.emplace_back(t.rows, t.cols);
    v.emplace_back(t.rows, t.cols);
  }
}

void adamw_step(ParamStore& params, const GradStore& grads, AdamWState& state,
                std::size_t t, double lr, const TrainConfig& config) {
  if (t < 1) throw ConfigError("adamw_step: t must be >= 1");
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& entry = params.entry(p);
    if (!entry.trainable) continue;
    Tensor& w = entry.value;
    const Tensor& g = grads.at(p);
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (std::size_t i = 0; i < w.data.size(); ++i) {
      const double gi = g.data[i];
      m.data[i] = config.beta1 * m.data[i] + (1.0 - config.beta1) * gi;
      v.data[i] = config.beta2 * v.data[i] + (1.0 - config.beta2) * gi * gi;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      w.data[i] -= lr * (mhat / (std::sqrt(vhat) + config.eps_adam) +
                         config.weight_decay * w.data[i]);
    }
  }
}

double cosine_anneal_lr(std::size_t t, std::size_t total, double lr_max,
                        double lr_min) {
  if (total == 0) throw ConfigError("cosine_anneal_lr: total steps is 0");
  if (t > total) throw ConfigError("cosine_anneal_lr: t > total");
  const double frac = static_cast<double>(t) / static_cast<double>(total);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(kPi * frac));
}

namespace {

struct BatchResult {
  double loss_sum = 0.0;
};

// Runs forward/backward for items[order[lo..hi)] accumulating into grads.
BatchResult run_chunk(const TrainableModel& model,
                      const std::vector<EncodedItem>& items,
                      const std::vector<std::size_t>& order, std::size_t lo,
                      std::size_t hi, GradStore& grads, double lambda,
                      double dropout_rate, std::uint64_t dropout_seed,
                      std::uint64_t sample_counter_base,
                      const std::vector<std::vector<double>>* batch_summaries,
                      std::size_t batch_lo) {
  BatchResult result;
  for (std::size_t pos = lo; pos < hi; ++pos) {
    const EncodedItem& item = items[order[pos]];
    Tape tape;
    Pcg32 dropout_rng(dropout_seed,
                      kDropoutStreamBase + sample_counter_base + pos);
    std::vector<const std::vector<double>*> negatives;
    if (batch_summaries != nullptr) {
      negatives.reserve(batch_summaries->size() - 1);
      for (std::size_t j = 0; j < batch_summaries->size(); ++j)
        if (batch_lo + j != pos) negatives.push_back(&(*batch_summaries)[j]);
    }
    const auto loss = model.sample_loss(
        tape, item, &grads, lambda,
        dropout_rate > 0.0 ? &dropout_rng : nullptr,
        batch_summaries != nullptr ? &negatives : nullptr);
    result.loss_sum += tape.val(loss).data[0];
    tape.backward(loss);
  }
  return result;
}

}  // namespace

double macro_f1_of_model(const TrainableModel& model,
                         const std::vector<EncodedItem>& items) {
  std::vector<std::vector<std::size_t>> preds, targets;
  preds.reserve(items.size());
  targets.reserve(items.size());
  for (const auto& item : items) {
    preds.push_back(model.predict_ids(item));
    targets.push_back(item.post_ids);
  }
  return macro_f1(preds, targets);
}

LoopOutcome train_loop(TrainableModel& model,
                       const std::vector<EncodedItem>& train_items,
                       const std::vector<EncodedItem>& val_items,
                       const TrainConfig& config, double lambda,
                       const std::vector<std::size_t>& vocab_sizes,
                       double dropout_rate) {
  (void)vocab_sizes;
  config.validate();
  if (train_items.empty()) throw TrainingError("train: empty training split");
  if (val_items.empty()) throw TrainingError("train: empty validation split");

  const std::size_t n = train_items.size();
  const std::size_t batch = std::min<std::size_t>(
      n, config.batch_size != 0 ? config.batch_size : 64);
  const std::size_t batches_per_epoch = (n + batch - 1) / batch;
  const std::size_t total_steps = config.epochs * batches_per_epoch;

  ParamStore& params = model.params();
  AdamWState state(params);
  GradStore grads(params);
  Pcg32 shuffle_rng(config.seed, kShuffleStream);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  LoopOutcome out;
  out.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double epoch_loss_sum = 0.0;
    double last_lr = 0.0;
    const std::uint64_t epoch_counter_base =
        static_cast<std::uint64_t>(epoch - 1) * n;

    for (std::size_t lo = 0; lo < n; lo += batch) {
      const std::size_t hi = std::min(n, lo + batch);
      const std::size_t bsize = hi - lo;
      grads.zero();

      // Detached summary vectors for the optional in-batch negative term.
      std::vector<std::vector<double>> summaries;
      const std::vector<std::vector<double>>* summaries_ptr = nullptr;
      if (config.inbatch_negatives && lambda > 0.0 && bsize > 1) {
        summaries.reserve(bsize);
        bool supported = true;
        for (std::size_t pos = lo; pos < hi && supported; ++pos) {
          summaries.push_back(model.summary_v(train_items[order[pos]]));
          supported = !summaries.back().empty();
        }
        if (supported) summaries_ptr = &summaries;
      }

      double batch_loss_sum = 0.0;
      try {
      if (config.threads <= 1 || bsize < 2 * config.threads) {
        batch_loss_sum =
            run_chunk(model, train_items, order, lo, hi, grads, lambda,
                      dropout_rate, config.seed, epoch_counter_base,
                      summaries_ptr, lo)
                .loss_sum;
      } else {
        // Contiguous chunks, merged in chunk order so the reduction order
        // is fixed for a given thread count.
        const std::size_t n_threads = config.threads;
        std::vector<GradStore> partial;
        partial.reserve(n_threads);
        for (std::size_t k = 0; k < n_threads; ++k) partial.emplace_back(params);
        std::vector<BatchResult> results(n_threads);
        std::vector<std::exception_ptr> errors(n_threads);
        std::vector<std::thread> workers;
        const std::size_t chunk = (bsize + n_threads - 1) / n_threads;
        for (std::size_t k = 0; k < n_threads; ++k) {
          const std::size_t clo = lo + k * chunk;
          const std::size_t chi = std::min(hi, clo + chunk);
          if (clo >= chi) break;
          workers.emplace_back([&, k, clo, chi]() {
            try {
              results[k] = run_chunk(model, train_items, order, clo, chi,
                                     partial[k], lambda, dropout_rate,
                                     config.seed, epoch_counter_base,
                                     summaries_ptr, lo);
            } catch (...) {
              errors[k] = std::current_exception();
            }
          });
        }
        for (auto& w : workers) w.join();
        for (const auto& err : errors)
          if (err) std::rethrow_exception(err);
        for (std::size_t k = 0; k < partial.size(); ++k) {
          grads.add(partial[k]);
          batch_loss_sum += results[k].loss_sum;
        }
      }
      } catch (const NumericError& e) {
        throw TrainingError("training diverged at epoch " +
                            std::to_string(epoch) + ", step " +
                            std::to_string(step) + ": " + e.what());
      }

      grads.scale(1.0 / static_cast<double>(bsize));
      if (!grads.all_finite())
        throw TrainingError("training diverged: non-finite gradients at epoch " +
                            std::to_string(epoch) + ", step " +
                            std::to_string(step));
      clip_gradients(grads, config.clip_norm);
      last_lr = cosine_anneal_lr(step, total_steps, config.lr_max, config.lr_min);
      adamw_step(params, grads, state, step + 1, last_lr, config);
      ++step;
      epoch_loss_sum += batch_loss_sum;
    }

    const double train_loss = epoch_loss_sum / static_cast<double>(n);
    const double val_loss = total_loss(model, val_items, lambda);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw TrainingError("training diverged: non-finite loss at epoch " +
                          std::to_string(epoch));
    const double val_f1 = macro_f1_of_model(model, val_items);

    out.history.push_back({epoch, train_loss, val_loss, val_f1, last_lr});
    if (val_loss < out.best_val_loss) {
      out.best_val_loss = val_loss;
      out.best_val_macro_f1 = val_f1;
      out.best_epoch = epoch;
      out.best_params = params;  // deep copy snapshot
    }
  }
  return out;
}

TrainOutcome train(const DatasetSplit& split, const std::vector<DeckText>& decks,
                   const TrainConfig& config, ModelConfig model_config,
                   const std::map<std::string, std::vector<double>>* precomputed) {
  config.validate();
  if (split.train.empty()) throw TrainingError("train: empty training split");
  if (split.validation.empty())
    throw TrainingError("train: empty validation split");

  std::vector<SurveyRecord> all_records = split.train;
  all_records.insert(all_records.end(), split.validation.begin(),
                     split.validation.end());
  const auto ctx = CorpusContext::build(all_records, decks,
                                        model_config.embed_dim, precomputed);
  model_config.vocab_sizes = ctx.vocab.sizes();
  model_config.validate();

  OpinionXfModel model(model_config, ctx.answer_table(precomputed));
  const auto train_items = ctx.encode(split.train);
  const auto val_items = ctx.encode(split.validation);

  TrainConfig resolved = config;
  resolved.batch_size = config.effective_batch(model_config.use_quantum);
  const double lambda =
      (model_config.use_contrastive && model_config.use_fusion)
          ? config.lambda_contrastive
          : 0.0;

  auto loop = train_loop(model, train_items, val_items, resolved, lambda,
                         ctx.vocab.sizes(), model_config.dropout);

  TrainOutcome out;
  out.best.model_config = model_config;
  out.best.params = std::move(loop.best_params);
  out.best.vocab = ctx.vocab;
  out.best.epoch = loop.best_epoch;
  out.best.val_loss = loop.best_val_loss;
  out.best.val_macro_f1 = loop.best_val_macro_f1;
  out.best.config_hash = describe_config_hash(model_config, resolved);
  out.history = std::move(loop.history);
  return out;
}

}  // namespace opinionxf
