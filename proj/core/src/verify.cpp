#include "opinionxf/verify.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>

#include "opinionxf/embeddings.hpp"
#include "opinionxf/evaluation.hpp"
#include "opinionxf/fft.hpp"
#include "opinionxf/grad_check.hpp"
#include "opinionxf/model.hpp"
#include "opinionxf/quantum.hpp"
#include "opinionxf/rng.hpp"
#include "opinionxf/training.hpp"

namespace opinionxf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Independent O(d^2) DFT used only as the reference here.
std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t d = x.size();
  std::vector<std::complex<double>> out(d);
  for (std::size_t k = 0; k < d; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t n = 0; n < d; ++n) {
      const double ang = -kTwoPi * static_cast<double>(k) *
                         static_cast<double>(n) / static_cast<double>(d);
      acc += x[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

VerifyResult check_fft_oracle() {
  VerifyResult result{"fft vs direct DFT + inversion + Parseval", true, ""};
  Pcg32 rng(20240916);
  double worst_dft = 0.0, worst_inv = 0.0, worst_parseval = 0.0;
  for (const std::size_t d : {4u, 8u, 16u, 128u}) {
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> x(d);
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
      const auto spec = fft(x);
      const auto ref = naive_dft(x);
      for (std::size_t k = 0; k < d; ++k)
        worst_dft = std::max(worst_dft, std::abs(spec.bins[k] - ref[k]));
      const auto back = ifft(spec);
      double energy_time = 0.0, energy_freq = 0.0;
      for (std::size_t n = 0; n < d; ++n) {
        worst_inv = std::max(worst_inv, std::fabs(back[n] - x[n]));
        energy_time += x[n] * x[n];
      }
      for (std::size_t k = 0; k < d; ++k)
        energy_freq += std::norm(spec.bins[k]);
      worst_parseval = std::max(
          worst_parseval,
          std::fabs(energy_time - energy_freq / static_cast<double>(d)));
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max |fft-dft| %.2e (tol 1e-10), inversion %.2e (1e-9), "
                "parseval %.2e (1e-9)",
                worst_dft, worst_inv, worst_parseval);
  result.detail = buf;
  result.pass = worst_dft < 1e-10 && worst_inv < 1e-9 && worst_parseval < 1e-9;
  return result;
}

VerifyResult check_quantum_grid() {
  VerifyResult result{"quantum <ZZ> vs cos(t1)cos(t2) on 21x21 grid", true, ""};
  double worst = 0.0;
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const double t1 = kTwoPi * i / 20.0;
      const double t2 = kTwoPi * j / 20.0;
      const double sim = circuit_expectation(t1, t2);
      const double closed = std::cos(t1) * std::cos(t2);
      worst = std::max(worst, std::fabs(sim - closed));
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max abs error %.2e (tol 1e-12)", worst);
  result.detail = buf;
  result.pass = worst < 1e-12;
  return result;
}

// Tiny fixture corpus for the gradient checks.
struct TinySetup {
  ModelConfig config;
  std::vector<EncodedItem> items;
};

TinySetup tiny_setup(bool with_quantum) {
  TinySetup setup;
  setup.config.d_model = 8;
  setup.config.n_layers = 1;
  setup.config.n_heads = 1;
  setup.config.ff_width = 16;
  setup.config.embed_dim = 12;
  setup.config.vocab_sizes = {3, 3};
  setup.config.use_fusion = true;
  setup.config.use_contrastive = true;
  setup.config.use_quantum = with_quantum;
  setup.config.fusion_bands = 2;
  setup.config.seed = 99;

  Pcg32 rng(7);
  for (int i = 0; i < 2; ++i) {
    EncodedItem item;
    item.pre_ids = {static_cast<std::size_t>(rng.bounded(3)),
                    static_cast<std::size_t>(rng.bounded(3))};
    item.post_ids = {static_cast<std::size_t>(rng.bounded(3)),
                     static_cast<std::size_t>(rng.bounded(3))};
    item.deck_vec.resize(setup.config.embed_dim);
    for (double& v : item.deck_vec) v = rng.uniform(-1.0, 1.0);
    double norm = 0.0;
    for (double v : item.deck_vec) norm += v * v;
    for (double& v : item.deck_vec) v /= std::sqrt(norm);
    item.topic = "t";
    setup.items.push_back(std::move(item));
  }
  return setup;
}

AnswerEmbeddingTable tiny_table(const ModelConfig& config) {
  AnswerEmbeddingTable table;
  table.embed_dim = config.embed_dim;
  for (std::size_t q = 0; q < config.vocab_sizes.size(); ++q) {
    Tensor m(config.vocab_sizes[q], config.embed_dim);
    for (std::size_t id = 0; id < m.rows; ++id) {
      const auto vec = hash_embed("q" + std::to_string(q) + " opt " +
                                      std::to_string(id),
                                  config.embed_dim);
      std::copy(vec.begin(), vec.end(), m.row_ptr(id));
    }
    table.per_question.push_back(std::move(m));
  }
  return table;
}

VerifyResult check_grad_full_model() {
  VerifyResult result{"grad check: fusion model total_loss vs central diff",
                      true, ""};
  auto setup = tiny_setup(/*with_quantum=*/false);
  OpinionXfModel model(setup.config, tiny_table(setup.config));
  const double lambda = 0.5;
  Objective objective = [&](const ParamStore&, GradStore* grads) {
    double sum = 0.0;
    for (const auto& item : setup.items) {
      Tape tape;
      const auto loss =
          model.sample_loss(tape, item, grads, lambda, nullptr, nullptr);
      sum += tape.val(loss).data[0];
      if (grads != nullptr) tape.backward(loss);
    }
    return sum;
  };
  const auto report = grad_check(objective, model.params(), 1e-5, 1e-4);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max rel error %.2e (tol 1e-4)",
                report.max_rel_error);
  result.detail = buf;
  result.pass = report.pass;
  if (!result.pass) result.detail += "\n" + report.to_table();
  return result;
}

VerifyResult check_quantum_stopgrad() {
  VerifyResult result{"quantum token: zero gradient into the angle source",
                      true, ""};
  ParamStore params;
  Pcg32 rng(5);
  Tensor fused(1, 8);
  fused.fill_uniform(rng, -1.0, 1.0);
  Tensor w(1, 8), b(1, 8);
  w.fill_uniform(rng, -1.0, 1.0);
  b.fill_uniform(rng, -1.0, 1.0);
  params.add("fused", fused);
  params.add("w", w);
  params.add("b", b);
  GradStore grads(params);
  Tape tape;
  const auto f_id = tape.param(params.get("fused"), &grads.at(0));
  const auto w_id = tape.param(params.get("w"), &grads.at(1));
  const auto b_id = tape.param(params.get("b"), &grads.at(2));
  const auto token = tape.quantum_token(f_id, w_id, b_id, 0, 1);
  // Reduce to a scalar through a fixed weight vector.
  Tensor mix(8, 1);
  mix.fill_uniform(rng, -1.0, 1.0);
  const auto loss = tape.matmul(token, tape.input(mix));
  tape.backward(loss);
  double angle_grad = 0.0;
  for (double g : grads.at(0).data) angle_grad += std::fabs(g);
  double wb_grad = 0.0;
  for (double g : grads.at(1).data) wb_grad += std::fabs(g);
  for (double g : grads.at(2).data) wb_grad += std::fabs(g);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "|grad angles| %.1e (must be 0), |grad wb| %.2e",
                angle_grad, wb_grad);
  result.detail = buf;
  result.pass = angle_grad == 0.0 && wb_grad > 0.0;
  return result;
}

// Brute-force confusion-matrix metrics used as the reference.
double reference_macro_f1(const std::vector<std::vector<std::size_t>>& preds,
                          const std::vector<std::vector<std::size_t>>& targets) {
  const std::size_t q_count = preds[0].size();
  double total = 0.0;
  for (std::size_t q = 0; q < q_count; ++q) {
    std::size_t max_c = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
      max_c = std::max({max_c, preds[i][q], targets[i][q]});
    const std::size_t nc = max_c + 1;
    std::vector<std::vector<std::size_t>> confusion(
        nc, std::vector<std::size_t>(nc, 0));
    for (std::size_t i = 0; i < preds.size(); ++i)
      ++confusion[targets[i][q]][preds[i][q]];
    double sum = 0.0;
    std::size_t included = 0;
    for (std::size_t c = 0; c < nc; ++c) {
      std::size_t tp = confusion[c][c], gold = 0, predicted = 0;
      for (std::size_t j = 0; j < nc; ++j) {
        gold += confusion[c][j];
        predicted += confusion[j][c];
      }
      if (gold == 0 && predicted == 0) continue;
      ++included;
      if (tp == 0) continue;
      const double p = static_cast<double>(tp) / predicted;
      const double r = static_cast<double>(tp) / gold;
      sum += 2.0 * p * r / (p + r);
    }
    total += included == 0 ? 0.0 : sum / included;
  }
  return total / static_cast<double>(q_count);
}

VerifyResult check_metric_fixtures() {
  VerifyResult result{"metric fixtures + brute-force confusion oracle", true, ""};
  // One question, preds [A,A,B] vs targets [A,B,B]: both classes score 2/3.
  const std::vector<std::vector<std::size_t>> preds{{0}, {0}, {1}};
  const std::vector<std::vector<std::size_t>> targets{{0}, {1}, {1}};
  const double fixture = macro_f1(preds, targets);
  bool ok = std::fabs(fixture - 2.0 / 3.0) < 1e-15;
  ok = ok && std::fabs(micro_accuracy(preds, targets) - 2.0 / 3.0) < 1e-15;

  Pcg32 rng(31337);
  double worst = 0.0;
  for (int rep = 0; rep < 50 && ok; ++rep) {
    const std::size_t n = 2 + rng.bounded(10);
    const std::size_t q_count = 1 + rng.bounded(4);
    std::vector<std::vector<std::size_t>> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i].resize(q_count);
      t[i].resize(q_count);
      for (std::size_t q = 0; q < q_count; ++q) {
        p[i][q] = rng.bounded(4);
        t[i][q] = rng.bounded(4);
      }
    }
    worst = std::max(worst,
                     std::fabs(macro_f1(p, t) - reference_macro_f1(p, t)));
    if (worst > 0.0) ok = false;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf),
                "fixture %.6f (want 0.666667), oracle max diff %.1e", fixture,
                worst);
  result.detail = buf;
  result.pass = ok;
  return result;
}

}  // namespace

std::vector<VerifyResult> run_verification() {
  std::vector<VerifyResult> results;
  results.push_back(check_fft_oracle());
  results.push_back(check_quantum_grid());
  results.push_back(check_grad_full_model());
  results.push_back(check_quantum_stopgrad());
  results.push_back(check_metric_fixtures());
  return results;
}

std::string format_verification_table(
    const std::vector<VerifyResult>& results) {
  std::ostringstream out;
  for (const auto& r : results) {
    out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.detail.empty()) out << " -- " << r.detail;
    out << '\n';
  }
  return out.str();
}

}  // namespace opinionxf
