#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opinionxf/corpus.hpp"
#include "opinionxf/embeddings.hpp"
#include "opinionxf/param_store.hpp"
#include "opinionxf/tape.hpp"

namespace opinionxf {

struct ModelConfig {
  std::size_t d_model = 128;
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t ff_width = 0;  // 0 -> 4 * d_model
  std::size_t embed_dim = 384;
  std::vector<std::size_t> vocab_sizes;  // V_q; its length is Q
  bool use_fusion = false;
  bool use_quantum = false;
  bool use_contrastive = false;
  std::size_t fusion_bands = 0;  // K; 0 -> d_model / 4
  std::size_t quantum_feature_i = 0;
  std::size_t quantum_feature_j = 1;
  double dropout = 0.0;
  bool freeze_answer_embeddings = false;
  std::uint64_t seed = 7;

  std::size_t question_count() const { return vocab_sizes.size(); }
  std::size_t special_tokens() const { return use_quantum ? 2 : 1; }
  std::size_t sequence_length() const {
    return special_tokens() + question_count();
  }
  std::size_t ff() const { return ff_width != 0 ? ff_width : 4 * d_model; }
  std::size_t bands() const {
    return fusion_bands != 0 ? fusion_bands : d_model / 4;
  }
  void validate() const;  // throws ConfigError
};

// Generic interface shared by the main model and the trainable baselines so
// one training loop serves both.
class TrainableModel {
 public:
  virtual ~TrainableModel() = default;
  virtual ParamStore& params() = 0;
  virtual const ParamStore& params() const = 0;
  // Scalar loss node for one sample; `lambda` weights the alignment term
  // where the model supports one. `negatives` supplies detached summary
  // vectors of other batch samples for the optional in-batch negative term.
  virtual Tape::Id sample_loss(
      Tape& tape, const EncodedItem& item, GradStore* grads, double lambda,
      Pcg32* dropout_rng,
      const std::vector<const std::vector<double>*>* negatives) const = 0;
  virtual std::vector<std::size_t> predict_ids(const EncodedItem& item) const = 0;
  // Mean of the augmented question tokens; empty when unsupported.
  virtual std::vector<double> summary_v(const EncodedItem& item) const {
    (void)item;
    return {};
  }
};

// Transformer encoder over [presentation token, optional quantum token,
// Q question tokens] with per-question classification heads.
class OpinionXfModel : public TrainableModel {
 public:
  // Fresh init: answer embeddings come from the table through a seeded
  // E -> d_model projection, everything else from seeded
  // uniform(-1/sqrt(d_in), 1/sqrt(d_in)); layer-norm affine starts at 1/0.
  OpinionXfModel(ModelConfig config, const AnswerEmbeddingTable& table);

  // Rebuild from checkpointed parameters.
  OpinionXfModel(ModelConfig config, ParamStore params);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() override { return params_; }
  const ParamStore& params() const override { return params_; }

  struct ForwardIds {
    std::vector<Tape::Id> logits;     // one 1xV_q row per question
    Tape::Id summary_u = Tape::npos;  // fused presentation token
    Tape::Id summary_v = Tape::npos;  // mean augmented question token
  };

  // Token assembly: presentation projection (replaced by the fused vector
  // when fusion is on), optional quantum token at position 1, per-question
  // answer + identity embeddings, positional encodings added last.
  struct AssembledTokens {
    Tape::Id tokens = Tape::npos;  // (S+Q) x d_model
    Tape::Id summary_u = Tape::npos;
    Tape::Id summary_v = Tape::npos;
  };
  AssembledTokens assemble_tokens(Tape& tape,
                                  const std::vector<std::size_t>& pre_ids,
                                  const std::vector<double>& deck_vec,
                                  GradStore* grads = nullptr) const;

  // Pre-norm encoder stack over an (S+Q) x d_model sequence; shape preserved.
  Tape::Id encode(Tape& tape, Tape::Id tokens, GradStore* grads = nullptr,
                  Pcg32* dropout_rng = nullptr) const;

  // Per-question linear heads over the contextual tokens at positions S..S+Q-1.
  std::vector<Tape::Id> heads(Tape& tape, Tape::Id contextual,
                              GradStore* grads = nullptr) const;

  ForwardIds forward(Tape& tape, const std::vector<std::size_t>& pre_ids,
                     const std::vector<double>& deck_vec,
                     GradStore* grads = nullptr,
                     Pcg32* dropout_rng = nullptr) const;

  Tape::Id sample_loss(
      Tape& tape, const EncodedItem& item, GradStore* grads, double lambda,
      Pcg32* dropout_rng,
      const std::vector<const std::vector<double>*>* negatives) const override;

  std::vector<std::vector<double>> predict(
      const std::vector<std::size_t>& pre_ids,
      const std::vector<double>& deck_vec) const;
  std::vector<std::size_t> predict_ids(const EncodedItem& item) const override;
  std::vector<double> summary_v(const EncodedItem& item) const override;

 private:
  Tape::Id use(Tape& tape, const std::string& name, GradStore* grads) const;

  ModelConfig config_;
  ParamStore params_;
};

std::size_t argmax_index(const std::vector<double>& values);

}  // namespace opinionxf
