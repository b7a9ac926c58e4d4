#include "opinionxf/model.hpp"

#include <cmath>

#include "opinionxf/fusion.hpp"
#include "opinionxf/ops.hpp"

namespace opinionxf {

void ModelConfig::validate() const {
  if (d_model < 2) throw ConfigError("model: d_model must be >= 2");
  if (n_heads == 0 || d_model % n_heads != 0)
    throw ConfigError("model: d_model must be divisible by n_heads");
  if (n_layers == 0) throw ConfigError("model: n_layers must be >= 1");
  if (vocab_sizes.empty()) throw ConfigError("model: no questions (empty vocab_sizes)");
  for (std::size_t v : vocab_sizes)
    if (v < 2) throw ConfigError("model: every question needs >= 2 answers");
  if (embed_dim < 8) throw ConfigError("model: embed_dim must be >= 8");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ConfigError("model: dropout must be in [0, 1)");
  if (use_fusion) {
    std::size_t n = d_model;
    while (n % 2 == 0) n /= 2;
    if (n != 1)
      throw ConfigError("model: use_fusion requires a power-of-two d_model");
    const std::size_t k = bands();
    if (k < 1 || k > d_model / 2)
      throw ConfigError("model: fusion_bands must be in [1, d_model/2]");
  }
  if (use_quantum) {
    if (quantum_feature_i == quantum_feature_j)
      throw ConfigError("model: quantum feature indices must differ");
    if (quantum_feature_i >= d_model || quantum_feature_j >= d_model)
      throw ConfigError("model: quantum feature indices must be < d_model");
  }
}

std::size_t argmax_index(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

namespace {

Tensor seeded_uniform(Pcg32& rng, std::size_t rows, std::size_t cols,
                      std::size_t fan_in) {
  Tensor t(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  t.fill_uniform(rng, -bound, bound);
  return t;
}

}  // namespace

OpinionXfModel::OpinionXfModel(ModelConfig config,
                               const AnswerEmbeddingTable& table)
    : config_(std::move(config)) {
  config_.validate();
  const std::size_t d = config_.d_model;
  const std::size_t e = config_.embed_dim;
  const std::size_t q_count = config_.question_count();
  if (table.per_question.size() != q_count || table.embed_dim != e)
    throw ConfigError("model init: answer table does not match config");

  Pcg32 rng(config_.seed);
  // Shared projection that turns E-dim answer embeddings into the initial
  // d_model token embeddings. Kept in the store so checkpoints reproduce
  // the init exactly.
  const Tensor& proj =
      params_.add("answer_proj.w", seeded_uniform(rng, e, d, e));
  for (std::size_t q = 0; q < q_count; ++q) {
    if (table.per_question[q].rows != config_.vocab_sizes[q])
      throw ConfigError("model init: answer table rows mismatch at question " +
                        std::to_string(q));
    params_.add("answer_emb.q" + std::to_string(q),
                matmul(table.per_question[q], proj),
                /*trainable=*/!config_.freeze_answer_embeddings);
  }
  params_.add("question_emb", seeded_uniform(rng, q_count, d, d));
  params_.add("pos_emb",
              seeded_uniform(rng, config_.sequence_length(), d, d));
  params_.add("pres_proj.w", seeded_uniform(rng, e, d, e));
  params_.add("pres_proj.b", seeded_uniform(rng, 1, d, e));
  for (std::size_t l = 0; l < config_.n_layers; ++l) {
    const std::string base = "enc.l" + std::to_string(l) + ".";
    params_.add(base + "ln1.gain", Tensor(1, d, 1.0));
    params_.add(base + "ln1.bias", Tensor(1, d, 0.0));
    for (const char* name : {"wq", "wk", "wv", "wo"})
      params_.add(base + "attn." + name, seeded_uniform(rng, d, d, d));
    for (const char* name : {"bq", "bk", "bv", "bo"})
      params_.add(base + "attn." + name, seeded_uniform(rng, 1, d, d));
    params_.add(base + "ln2.gain", Tensor(1, d, 1.0));
    params_.add(base + "ln2.bias", Tensor(1, d, 0.0));
    params_.add(base + "ff.w1", seeded_uniform(rng, d, config_.ff(), d));
    params_.add(base + "ff.b1", seeded_uniform(rng, 1, config_.ff(), d));
    params_.add(base + "ff.w2",
                seeded_uniform(rng, config_.ff(), d, config_.ff()));
    params_.add(base + "ff.b2", seeded_uniform(rng, 1, d, config_.ff()));
  }
  for (std::size_t q = 0; q < q_count; ++q) {
    const std::string base = "head.q" + std::to_string(q) + ".";
    params_.add(base + "w",
                seeded_uniform(rng, d, config_.vocab_sizes[q], d));
    params_.add(base + "b", seeded_uniform(rng, 1, config_.vocab_sizes[q], d));
  }
  if (config_.use_fusion) {
    const std::size_t k = config_.bands();
    params_.add("fusion.w1", seeded_uniform(rng, 2 * k, 2 * k, 2 * k));
    params_.add("fusion.b1", seeded_uniform(rng, 1, 2 * k, 2 * k));
    params_.add("fusion.w2", seeded_uniform(rng, 2 * k, k, 2 * k));
    params_.add("fusion.b2", seeded_uniform(rng, 1, k, 2 * k));
  }
  if (config_.use_quantum) {
    params_.add("quantum.w", seeded_uniform(rng, 1, d, 1));
    params_.add("quantum.b", seeded_uniform(rng, 1, d, 1));
  }
}

OpinionXfModel::OpinionXfModel(ModelConfig config, ParamStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  if (config_.freeze_answer_embeddings) {
    for (std::size_t q = 0; q < config_.question_count(); ++q) {
      const auto idx = params_.index_of("answer_emb.q" + std::to_string(q));
      params_.entry(idx).trainable = false;
    }
  }
}

Tape::Id OpinionXfModel::use(Tape& tape, const std::string& name,
                             GradStore* grads) const {
  const std::size_t idx = params_.index_of(name);
  const auto& entry = params_.entry(idx);
  Tensor* sink =
      (grads != nullptr && entry.trainable) ? &grads->at(idx) : nullptr;
  return tape.param(entry.value, sink);
}

OpinionXfModel::AssembledTokens OpinionXfModel::assemble_tokens(
    Tape& tape, const std::vector<std::size_t>& pre_ids,
    const std::vector<double>& deck_vec, GradStore* grads) const {
  const std::size_t q_count = config_.question_count();
  if (pre_ids.size() != q_count)
    throw SchemaError("assemble_tokens: pre_ids length mismatch");
  for (std::size_t q = 0; q < q_count; ++q)
    if (pre_ids[q] >= config_.vocab_sizes[q])
      throw SchemaError("assemble_tokens: answer id out of range at question " +
                        std::to_string(q));
  if (deck_vec.size() != config_.embed_dim)
    throw SchemaError("assemble_tokens: deck vector has wrong dimension");

  const auto deck = tape.input(Tensor::row_vector(deck_vec));
  auto pres = tape.add(tape.matmul(deck, use(tape, "pres_proj.w", grads)),
                       use(tape, "pres_proj.b", grads));

  const auto question_emb = use(tape, "question_emb", grads);
  std::vector<Tape::Id> q_rows(q_count);
  for (std::size_t q = 0; q < q_count; ++q) {
    const auto answer_row =
        tape.select_rows(use(tape, "answer_emb.q" + std::to_string(q), grads),
                         {pre_ids[q]});
    const auto identity_row = tape.select_rows(question_emb, {q});
    q_rows[q] = tape.add(answer_row, identity_row);
  }
  auto q_tokens = tape.concat_rows(q_rows);

  AssembledTokens out;
  if (config_.use_fusion) {
    const auto fused = fuse_on_tape(
        tape, pres, q_tokens, use(tape, "fusion.w1", grads),
        use(tape, "fusion.b1", grads), use(tape, "fusion.w2", grads),
        use(tape, "fusion.b2", grads), config_.bands());
    pres = fused.fused_p;
    q_tokens = fused.augmented_q;
    out.summary_u = fused.fused_p;
    out.summary_v = tape.mean_rows(fused.augmented_q);
  }

  std::vector<Tape::Id> rows{pres};
  if (config_.use_quantum) {
    rows.push_back(tape.quantum_token(
        pres, use(tape, "quantum.w", grads), use(tape, "quantum.b", grads),
        config_.quantum_feature_i, config_.quantum_feature_j));
  }
  rows.push_back(q_tokens);
  out.tokens = tape.add(tape.concat_rows(rows), use(tape, "pos_emb", grads));
  return out;
}

Tape::Id OpinionXfModel::encode(Tape& tape, Tape::Id tokens, GradStore* grads,
                                Pcg32* dropout_rng) const {
  const double rate = dropout_rng != nullptr ? config_.dropout : 0.0;
  const std::size_t dh = config_.d_model / config_.n_heads;
  auto seq = tokens;
  for (std::size_t l = 0; l < config_.n_layers; ++l) {
    const std::string base = "enc.l" + std::to_string(l) + ".";
    const auto normed = tape.layer_norm_rows(seq, use(tape, base + "ln1.gain", grads),
                                             use(tape, base + "ln1.bias", grads));
    const auto qm = tape.add_row(
        tape.matmul(normed, use(tape, base + "attn.wq", grads)),
        use(tape, base + "attn.bq", grads));
    const auto km = tape.add_row(
        tape.matmul(normed, use(tape, base + "attn.wk", grads)),
        use(tape, base + "attn.bk", grads));
    const auto vm = tape.add_row(
        tape.matmul(normed, use(tape, base + "attn.wv", grads)),
        use(tape, base + "attn.bv", grads));
    std::vector<Tape::Id> head_outs(config_.n_heads);
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t h = 0; h < config_.n_heads; ++h) {
      const auto qh = tape.slice_cols(qm, h * dh, (h + 1) * dh);
      const auto kh = tape.slice_cols(km, h * dh, (h + 1) * dh);
      const auto vh = tape.slice_cols(vm, h * dh, (h + 1) * dh);
      const auto scores = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh);
      head_outs[h] = tape.matmul(tape.softmax_rows(scores), vh);
    }
    auto attn = tape.add_row(
        tape.matmul(tape.concat_cols(head_outs),
                    use(tape, base + "attn.wo", grads)),
        use(tape, base + "attn.bo", grads));
    if (rate > 0.0) attn = tape.dropout(attn, rate, *dropout_rng);
    seq = tape.add(seq, attn);

    const auto normed2 = tape.layer_norm_rows(seq, use(tape, base + "ln2.gain", grads),
                                              use(tape, base + "ln2.bias", grads));
    auto ff = tape.add_row(
        tape.matmul(
            tape.gelu(tape.add_row(
                tape.matmul(normed2, use(tape, base + "ff.w1", grads)),
                use(tape, base + "ff.b1", grads))),
            use(tape, base + "ff.w2", grads)),
        use(tape, base + "ff.b2", grads));
    if (rate > 0.0) ff = tape.dropout(ff, rate, *dropout_rng);
    seq = tape.add(seq, ff);
  }
  return seq;
}

std::vector<Tape::Id> OpinionXfModel::heads(Tape& tape, Tape::Id contextual,
                                            GradStore* grads) const {
  const std::size_t s = config_.special_tokens();
  std::vector<Tape::Id> logits(config_.question_count());
  for (std::size_t q = 0; q < config_.question_count(); ++q) {
    const std::string base = "head.q" + std::to_string(q) + ".";
    const auto row = tape.slice_rows(contextual, s + q, s + q + 1);
    logits[q] = tape.add(tape.matmul(row, use(tape, base + "w", grads)),
                         use(tape, base + "b", grads));
  }
  return logits;
}

OpinionXfModel::ForwardIds OpinionXfModel::forward(
    Tape& tape, const std::vector<std::size_t>& pre_ids,
    const std::vector<double>& deck_vec, GradStore* grads,
    Pcg32* dropout_rng) const {
  const auto assembled = assemble_tokens(tape, pre_ids, deck_vec, grads);
  const auto contextual = encode(tape, assembled.tokens, grads, dropout_rng);
  ForwardIds out;
  out.logits = heads(tape, contextual, grads);
  out.summary_u = assembled.summary_u;
  out.summary_v = assembled.summary_v;
  return out;
}

Tape::Id OpinionXfModel::sample_loss(
    Tape& tape, const EncodedItem& item, GradStore* grads, double lambda,
    Pcg32* dropout_rng,
    const std::vector<const std::vector<double>*>* negatives) const {
  const auto fw = forward(tape, item.pre_ids, item.deck_vec, grads, dropout_rng);
  std::vector<Tape::Id> terms;
  terms.reserve(fw.logits.size() + 2);
  for (std::size_t q = 0; q < fw.logits.size(); ++q)
    terms.push_back(tape.cross_entropy_logits(fw.logits[q], item.post_ids[q]));
  const bool align = lambda > 0.0 && config_.use_contrastive &&
                     config_.use_fusion && fw.summary_u != Tape::npos;
  if (align) {
    auto loss = tape.cosine_align_loss(fw.summary_u, fw.summary_v);
    if (negatives != nullptr && !negatives->empty()) {
      // Detached in-batch negatives: hinge on the cosine against other
      // samples' summary vectors, mirroring a cosine-embedding loss with
      // negative pairs at margin 0.
      std::vector<Tape::Id> hinge_terms;
      hinge_terms.reserve(negatives->size());
      for (const auto* neg : *negatives) {
        const auto neg_id = tape.input(Tensor::row_vector(*neg));
        const auto one_minus_cos = tape.cosine_align_loss(fw.summary_u, neg_id);
        hinge_terms.push_back(tape.relu(tape.affine(one_minus_cos, -1.0, 1.0)));
      }
      const auto neg_mean =
          tape.scale(tape.add_scalars(hinge_terms),
                     1.0 / static_cast<double>(hinge_terms.size()));
      loss = tape.add_scalars({loss, neg_mean});
    }
    terms.push_back(tape.scale(loss, lambda));
  }
  return tape.add_scalars(terms);
}

std::vector<std::vector<double>> OpinionXfModel::predict(
    const std::vector<std::size_t>& pre_ids,
    const std::vector<double>& deck_vec) const {
  Tape tape;
  const auto fw = forward(tape, pre_ids, deck_vec);
  std::vector<std::vector<double>> logits;
  logits.reserve(fw.logits.size());
  for (const auto id : fw.logits) logits.push_back(tape.val_row(id));
  return logits;
}

std::vector<std::size_t> OpinionXfModel::predict_ids(
    const EncodedItem& item) const {
  const auto logits = predict(item.pre_ids, item.deck_vec);
  std::vector<std::size_t> out(logits.size());
  for (std::size_t q = 0; q < logits.size(); ++q)
    out[q] = argmax_index(logits[q]);
  return out;
}

std::vector<double> OpinionXfModel::summary_v(const EncodedItem& item) const {
  if (!config_.use_fusion) return {};
  Tape tape;
  const auto fw = forward(tape, item.pre_ids, item.deck_vec);
  return tape.val_row(fw.summary_v);
}

}  // namespace opinionxf
