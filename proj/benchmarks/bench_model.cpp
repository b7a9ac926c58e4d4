#include <benchmark/benchmark.h>

#include <cmath>

#include "opinionxf/embeddings.hpp"
#include "opinionxf/model.hpp"
#include "opinionxf/training.hpp"

namespace {

using namespace opinionxf;

ModelConfig bench_config(bool fusion, bool quantum) {
  ModelConfig cfg;
  cfg.d_model = 128;
  cfg.n_layers = 4;
  cfg.n_heads = 4;
  cfg.embed_dim = 384;
  cfg.vocab_sizes = {3, 4, 5, 3, 4, 5, 3, 4};
  cfg.use_fusion = fusion;
  cfg.use_quantum = quantum;
  cfg.use_contrastive = fusion;
  cfg.seed = 11;
  return cfg;
}

AnswerEmbeddingTable bench_table(const ModelConfig& cfg) {
  AnswerEmbeddingTable table;
  table.embed_dim = cfg.embed_dim;
  for (std::size_t q = 0; q < cfg.vocab_sizes.size(); ++q) {
    Tensor m(cfg.vocab_sizes[q], cfg.embed_dim);
    for (std::size_t id = 0; id < m.rows; ++id) {
      const auto vec = hash_embed(
          "q" + std::to_string(q) + " answer " + std::to_string(id),
          cfg.embed_dim);
      std::copy(vec.begin(), vec.end(), m.row_ptr(id));
    }
    table.per_question.push_back(std::move(m));
  }
  return table;
}

EncodedItem bench_item(const ModelConfig& cfg) {
  EncodedItem item;
  Pcg32 rng(3);
  for (std::size_t v : cfg.vocab_sizes) {
    item.pre_ids.push_back(rng.bounded(static_cast<std::uint32_t>(v)));
    item.post_ids.push_back(rng.bounded(static_cast<std::uint32_t>(v)));
  }
  item.deck_vec.resize(cfg.embed_dim);
  double norm = 0.0;
  for (double& x : item.deck_vec) {
    x = rng.uniform(-1.0, 1.0);
    norm += x * x;
  }
  for (double& x : item.deck_vec) x /= std::sqrt(norm);
  item.topic = "bench";
  return item;
}

void ForwardPass(benchmark::State& state) {
  const auto cfg = bench_config(state.range(0) != 0, state.range(1) != 0);
  OpinionXfModel model(cfg, bench_table(cfg));
  const auto item = bench_item(cfg);
  for (auto _ : state) {
    auto logits = model.predict(item.pre_ids, item.deck_vec);
    benchmark::DoNotOptimize(logits.data());
  }
}
BENCHMARK(ForwardPass)->Args({0, 0})->Args({1, 0})->Args({1, 1});

void ForwardBackward(benchmark::State& state) {
  const auto cfg = bench_config(state.range(0) != 0, state.range(1) != 0);
  OpinionXfModel model(cfg, bench_table(cfg));
  const auto item = bench_item(cfg);
  GradStore grads(model.params());
  const double lambda = cfg.use_contrastive ? 0.1 : 0.0;
  for (auto _ : state) {
    grads.zero();
    Tape tape;
    const auto loss = model.sample_loss(tape, item, &grads, lambda, nullptr, nullptr);
    tape.backward(loss);
    benchmark::DoNotOptimize(grads.at(0).data.data());
  }
}
BENCHMARK(ForwardBackward)->Args({0, 0})->Args({1, 0})->Args({1, 1});

}  // namespace

BENCHMARK_MAIN();
