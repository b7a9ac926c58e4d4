#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "opinionxf/checkpoint.hpp"
#include "opinionxf/embeddings.hpp"
#include "opinionxf/model.hpp"
#include "opinionxf/ops.hpp"

using namespace opinionxf;

namespace {

ModelConfig small_config(std::size_t q_count = 3, std::size_t v = 3) {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.ff_width = 16;
  cfg.embed_dim = 16;
  cfg.vocab_sizes.assign(q_count, v);
  cfg.seed = 21;
  return cfg;
}

AnswerEmbeddingTable table_for(const ModelConfig& cfg) {
  AnswerEmbeddingTable table;
  table.embed_dim = cfg.embed_dim;
  for (std::size_t q = 0; q < cfg.vocab_sizes.size(); ++q) {
    Tensor m(cfg.vocab_sizes[q], cfg.embed_dim);
    for (std::size_t id = 0; id < m.rows; ++id) {
      const auto vec = hash_embed(
          "question " + std::to_string(q) + " option " + std::to_string(id),
          cfg.embed_dim);
      std::copy(vec.begin(), vec.end(), m.row_ptr(id));
    }
    table.per_question.push_back(std::move(m));
  }
  return table;
}

std::vector<double> unit_deck(std::size_t e, std::uint64_t seed = 3) {
  Pcg32 rng(seed);
  std::vector<double> v(e);
  double norm = 0.0;
  for (double& x : v) {
    x = rng.uniform(-1.0, 1.0);
    norm += x * x;
  }
  for (double& x : v) x /= std::sqrt(norm);
  return v;
}

void zero_param(ParamStore& params, const std::string& name) {
  params.get(name).fill(0.0);
}

}  // namespace

TEST_CASE("init is bitwise deterministic per seed and varies across seeds") {
  const auto cfg = small_config();
  const auto table = table_for(cfg);
  OpinionXfModel a(cfg, table);
  OpinionXfModel b(cfg, table);
  REQUIRE(a.params().size() == b.params().size());
  for (std::size_t i = 0; i < a.params().size(); ++i)
    CHECK(a.params().entry(i).value.data == b.params().entry(i).value.data);

  auto cfg2 = cfg;
  cfg2.seed = 22;
  OpinionXfModel c(cfg2, table);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.params().size() && !any_diff; ++i)
    any_diff = a.params().entry(i).value.data != c.params().entry(i).value.data;
  CHECK(any_diff);
}

TEST_CASE("answer embeddings at init equal the projected table rows") {
  const auto cfg = small_config();
  const auto table = table_for(cfg);
  OpinionXfModel model(cfg, table);
  const Tensor& proj = model.params().get("answer_proj.w");
  for (std::size_t q = 0; q < cfg.vocab_sizes.size(); ++q) {
    const Tensor expected = matmul(table.per_question[q], proj);
    const Tensor& got =
        model.params().get("answer_emb.q" + std::to_string(q));
    REQUIRE(expected.data.size() == got.data.size());
    for (std::size_t i = 0; i < expected.data.size(); ++i)
      CHECK(got.data[i] == doctest::Approx(expected.data[i]).epsilon(1e-6));
  }
}

TEST_CASE("sequence length accounts for the special tokens") {
  auto cfg = small_config(2);
  const auto deck = unit_deck(cfg.embed_dim);
  {
    OpinionXfModel model(cfg, table_for(cfg));
    Tape tape;
    const auto assembled = model.assemble_tokens(tape, {0, 1}, deck);
    CHECK(tape.val(assembled.tokens).rows == 3);  // 1 special + Q
  }
  {
    auto qcfg = cfg;
    qcfg.use_fusion = true;
    qcfg.fusion_bands = 2;
    qcfg.use_quantum = true;
    OpinionXfModel model(qcfg, table_for(qcfg));
    Tape tape;
    const auto assembled = model.assemble_tokens(tape, {0, 1}, deck);
    CHECK(tape.val(assembled.tokens).rows == 4);  // 2 special + Q
  }
}

TEST_CASE("zeroed embeddings and positions assemble to all-zero rows") {
  auto cfg = small_config(2);
  OpinionXfModel model(cfg, table_for(cfg));
  for (std::size_t q = 0; q < 2; ++q)
    zero_param(model.params(), "answer_emb.q" + std::to_string(q));
  zero_param(model.params(), "question_emb");
  zero_param(model.params(), "pos_emb");
  zero_param(model.params(), "pres_proj.w");
  zero_param(model.params(), "pres_proj.b");
  Tape tape;
  const auto assembled =
      model.assemble_tokens(tape, {1, 2}, unit_deck(cfg.embed_dim));
  for (double v : tape.val(assembled.tokens).data) CHECK(v == 0.0);
}

TEST_CASE("encode preserves shape and is the identity at zero weights") {
  auto cfg = small_config(3);
  OpinionXfModel model(cfg, table_for(cfg));
  for (const char* name :
       {"attn.wq", "attn.wk", "attn.wv", "attn.wo", "attn.bq", "attn.bk",
        "attn.bv", "attn.bo", "ff.w1", "ff.b1", "ff.w2", "ff.b2"})
    zero_param(model.params(), std::string("enc.l0.") + name);

  Pcg32 rng(17);
  Tensor x(4, cfg.d_model);
  x.fill_uniform(rng, -2.0, 2.0);
  Tape tape;
  const auto out = model.encode(tape, tape.input(x));
  const Tensor& y = tape.val(out);
  REQUIRE(y.rows == x.rows);
  REQUIRE(y.cols == x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-12));
}

TEST_CASE("encode output shape matches input shape for a trained-init model") {
  const auto cfg = small_config(3);
  OpinionXfModel model(cfg, table_for(cfg));
  Pcg32 rng(23);
  Tensor x(4, cfg.d_model);
  x.fill_uniform(rng, -1.0, 1.0);
  Tape tape;
  const auto out = model.encode(tape, tape.input(x));
  CHECK(tape.val(out).rows == 4);
  CHECK(tape.val(out).cols == cfg.d_model);
  CHECK(tape.val(out).all_finite());
}

TEST_CASE("permuting questions, their embeddings, positions and heads permutes logits") {
  const auto cfg = small_config(3, 3);
  const auto table = table_for(cfg);
  OpinionXfModel base(cfg, table);
  const auto deck = unit_deck(cfg.embed_dim);

  // Copy the parameter store with questions 0 and 1 swapped everywhere.
  ParamStore swapped;
  for (std::size_t i = 0; i < base.params().size(); ++i) {
    const auto& entry = base.params().entry(i);
    std::string name = entry.name;
    auto swap_tag = [&name](const std::string& a, const std::string& b) {
      if (name.find(a) != std::string::npos)
        name.replace(name.find(a), a.size(), b);
      else if (name.find(b) != std::string::npos)
        name.replace(name.find(b), b.size(), a);
    };
    if (name.rfind("answer_emb.", 0) == 0) swap_tag(".q0", ".q1");
    if (name.rfind("head.", 0) == 0) swap_tag(".q0.", ".q1.");
    Tensor value = entry.value;
    if (name == "question_emb") {
      for (std::size_t c = 0; c < value.cols; ++c)
        std::swap(value(0, c), value(1, c));
    }
    if (name == "pos_emb") {
      // Special token at row 0; questions start at row 1.
      for (std::size_t c = 0; c < value.cols; ++c)
        std::swap(value(1, c), value(2, c));
    }
    swapped.add(name, std::move(value), entry.trainable);
  }
  OpinionXfModel permuted(cfg, std::move(swapped));

  const std::vector<std::size_t> ids{2, 0, 1};
  const std::vector<std::size_t> swapped_ids{0, 2, 1};
  const auto logits = base.predict(ids, deck);
  const auto logits_p = permuted.predict(swapped_ids, deck);
  for (std::size_t v = 0; v < 3; ++v) {
    CHECK(logits_p[0][v] == doctest::Approx(logits[1][v]).epsilon(1e-9));
    CHECK(logits_p[1][v] == doctest::Approx(logits[0][v]).epsilon(1e-9));
    CHECK(logits_p[2][v] == doctest::Approx(logits[2][v]).epsilon(1e-9));
  }
}

TEST_CASE("predict returns per-question logit rows of the right widths") {
  ModelConfig cfg = small_config(2);
  cfg.vocab_sizes = {3, 5};
  OpinionXfModel model(cfg, table_for(cfg));
  const auto logits = model.predict({1, 4}, unit_deck(cfg.embed_dim));
  REQUIRE(logits.size() == 2);
  CHECK(logits[0].size() == 3);
  CHECK(logits[1].size() == 5);
  for (const auto& row : logits)
    for (double v : row) CHECK(std::isfinite(v));

  CHECK_THROWS_AS(model.predict({3, 0}, unit_deck(cfg.embed_dim)), SchemaError);
}

TEST_CASE("fixed seed and input give identical logits across runs") {
  const auto cfg = small_config();
  const auto table = table_for(cfg);
  OpinionXfModel a(cfg, table);
  OpinionXfModel b(cfg, table);
  const auto deck = unit_deck(cfg.embed_dim, 9);
  CHECK(a.predict({0, 1, 2}, deck) == b.predict({0, 1, 2}, deck));
}

TEST_CASE("checkpoint save/load round trip is exact") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "opinionxf_test_model";
  fs::create_directories(dir);

  auto cfg = small_config(2);
  cfg.use_fusion = true;
  cfg.fusion_bands = 2;
  cfg.use_contrastive = true;
  OpinionXfModel model(cfg, table_for(cfg));

  Checkpoint ckpt;
  ckpt.model_config = cfg;
  ckpt.params = model.params();
  ckpt.vocab = AnswerVocabulary::from_lists(
      {{"opt a", "opt b", "opt c"}, {"no", "yes", "zz top"}});
  ckpt.epoch = 7;
  ckpt.val_loss = 0.123456789012345678;
  ckpt.val_macro_f1 = 0.875;
  ckpt.config_hash = "deadbeefdeadbeef";
  save_checkpoint(dir / "model.opxf", ckpt);

  const auto loaded = load_checkpoint(dir / "model.opxf");
  CHECK(loaded.epoch == 7);
  CHECK(loaded.val_loss == ckpt.val_loss);
  CHECK(loaded.val_macro_f1 == ckpt.val_macro_f1);
  CHECK(loaded.config_hash == "deadbeefdeadbeef");
  CHECK(loaded.vocab.question_count() == 2);
  CHECK(loaded.vocab.answer_of(1, 2) == "zz top");
  REQUIRE(loaded.params.size() == ckpt.params.size());
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    CHECK(loaded.params.entry(i).name == ckpt.params.entry(i).name);
    CHECK(loaded.params.entry(i).value.data == ckpt.params.entry(i).value.data);
  }

  OpinionXfModel reloaded(loaded.model_config, loaded.params);
  const auto deck = unit_deck(cfg.embed_dim);
  CHECK(reloaded.predict({1, 0}, deck) == model.predict({1, 0}, deck));
  fs::remove_all(dir);
}

TEST_CASE("config validation rejects bad layouts") {
  auto cfg = small_config();
  cfg.n_heads = 3;  // 8 % 3 != 0
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_config();
  cfg.use_fusion = true;
  cfg.d_model = 12;  // not a power of two
  cfg.n_heads = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_config();
  cfg.use_quantum = true;
  cfg.quantum_feature_i = cfg.quantum_feature_j = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
