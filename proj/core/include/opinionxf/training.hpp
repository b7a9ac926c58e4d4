#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opinionxf/corpus.hpp"
#include "opinionxf/model.hpp"
#include "opinionxf/param_store.hpp"

namespace opinionxf {

struct TrainConfig {
  double lr_max = 2e-3;
  double lr_min = 0.0;
  double weight_decay = 1e-4;
  double clip_norm = 1.0;
  std::size_t batch_size = 0;  // 0 -> 64 classical, 32 with the quantum token
  std::size_t epochs = 40;     // accepted range [20, 100]
  double lambda_contrastive = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  bool inbatch_negatives = false;
  std::uint64_t seed = 1234;
  std::size_t threads = 1;

  void validate() const;
  std::size_t effective_batch(bool use_quantum) const {
    if (batch_size != 0) return batch_size;
    return use_quantum ? 32 : 64;
  }
};

struct Checkpoint {
  ModelConfig model_config;
  ParamStore params;
  AnswerVocabulary vocab;
  std::size_t epoch = 0;
  double val_loss = 0.0;
  double val_macro_f1 = 0.0;
  std::string config_hash;
};

struct TrainHistoryRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_macro_f1 = 0.0;
  double lr = 0.0;
};

struct TrainOutcome {
  Checkpoint best;
  std::vector<TrainHistoryRow> history;
};

// ---- loss pieces (plain-value forms) ---------------------------------------

// Sum over questions of CE(softmax(logits_q), target_q).
double cross_entropy_total(const std::vector<std::vector<double>>& logits,
                           const std::vector<std::size_t>& targets);

// 1 - cos(u, v); a zero vector on either side yields 1 by convention.
double cosine_alignment_loss(const std::vector<double>& u,
                             const std::vector<double>& v);

// Mean over the batch of per-sample loss (CE plus lambda * alignment when
// the model supports summaries and use_contrastive is set).
double total_loss(const TrainableModel& model,
                  const std::vector<EncodedItem>& batch, double lambda);

// ---- optimizer -------------------------------------------------------------

// Scales all gradients by max_norm/g when the global L2 norm g exceeds
// max_norm; returns the pre-clip norm. Non-finite gradients are an error.
double clip_gradients(GradStore& grads, double max_norm);

struct AdamWState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  explicit AdamWState(const ParamStore& params);
};

// Decoupled AdamW update, step count t >= 1:
//   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   w <- w - lr * (mhat / (sqrt(vhat) + eps) + wd * w)
// Non-trainable parameters are skipped.
void adamw_step(ParamStore& params, const GradStore& grads, AdamWState& state,
                std::size_t t, double lr, const TrainConfig& config);

// lr_min + (lr_max - lr_min) * (1 + cos(pi * t / total)) / 2, 0 <= t <= total.
double cosine_anneal_lr(std::size_t t, std::size_t total, double lr_max,
                        double lr_min);

// ---- loops -----------------------------------------------------------------

// Epoch loop over any trainable model: seeded shuffling, batched
// forward/backward, clip, AdamW with per-step cosine annealing, epoch-end
// validation, checkpoint kept at the strictly lowest validation loss.
// The checkpoint's model_config/vocab fields are left for the caller.
struct LoopOutcome {
  ParamStore best_params;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double best_val_macro_f1 = 0.0;
  std::vector<TrainHistoryRow> history;
};
LoopOutcome train_loop(TrainableModel& model,
                       const std::vector<EncodedItem>& train_items,
                       const std::vector<EncodedItem>& val_items,
                       const TrainConfig& config, double lambda,
                       const std::vector<std::size_t>& vocab_sizes,
                       double dropout_rate);

// Macro-F1 of a model's argmax predictions over a record set.
double macro_f1_of_model(const TrainableModel& model,
                         const std::vector<EncodedItem>& items);

// Stable hex digest of the model + training configuration, recorded in
// checkpoints and echoed by the CLI.
std::string describe_config_hash(const ModelConfig& model_config,
                                 const TrainConfig& train_config);

// Full pipeline: vocabulary and deck vectors from the split's records,
// model init from the answer table, train_loop, checkpoint assembly.
TrainOutcome train(const DatasetSplit& split, const std::vector<DeckText>& decks,
                   const TrainConfig& config, ModelConfig model_config,
                   const std::map<std::string, std::vector<double>>* precomputed =
                       nullptr);

}  // namespace opinionxf
