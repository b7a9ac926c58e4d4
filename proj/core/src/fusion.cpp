#include "opinionxf/fusion.hpp"

#include "opinionxf/errors.hpp"
#include "opinionxf/fft.hpp"

namespace opinionxf {

void FusionParams::validate(std::size_t d_model) const {
  if (bands < 1 || bands > d_model / 2)
    throw ConfigError("fusion: bands must be in [1, d_model/2]");
  const std::size_t two_k = 2 * bands;
  if (w1.rows != two_k || w1.cols != two_k || b1.cols != two_k ||
      w2.rows != two_k || w2.cols != bands || b2.cols != bands)
    throw ConfigError("fusion: MLP weight shapes do not match band count");
}

FusionParams FusionParams::identity_passthrough(std::size_t bands) {
  const std::size_t two_k = 2 * bands;
  FusionParams p;
  p.bands = bands;
  p.w1 = Tensor(two_k, two_k);
  p.b1 = Tensor(1, two_k);
  p.w2 = Tensor(two_k, bands);
  p.b2 = Tensor(1, bands);
  for (std::size_t i = 0; i < two_k; ++i) p.w1(i, i) = 1.0;
  for (std::size_t k = 0; k < bands; ++k) p.w2(k, k) = 1.0;
  return p;
}

FusionTapeIds fuse_on_tape(Tape& tape, Tape::Id p, Tape::Id q_tokens,
                           Tape::Id w1, Tape::Id b1, Tape::Id w2, Tape::Id b2,
                           std::size_t bands) {
  const auto q_bar = tape.mean_rows(q_tokens);
  const auto mags_p = tape.fft_lowband_mags(p, bands);
  const auto mags_q = tape.fft_lowband_mags(q_bar, bands);
  const auto mlp_in = tape.concat_cols({mags_p, mags_q});
  const auto hidden = tape.gelu(tape.add(tape.matmul(mlp_in, w1), b1));
  const auto mags_out = tape.softplus(tape.add(tape.matmul(hidden, w2), b2));
  FusionTapeIds out;
  out.fused_p = tape.spectral_recombine(p, mags_out);
  out.augmented_q = tape.add_row(q_tokens, out.fused_p);
  return out;
}

FusionResult fuse(const std::vector<double>& p, const Tensor& q_tokens,
                  const FusionParams& params) {
  if (q_tokens.cols != p.size())
    throw NumericError("fuse: token dimension mismatch");
  params.validate(p.size());
  Tape tape;
  const auto p_id = tape.input(Tensor::row_vector(p));
  const auto q_id = tape.input(q_tokens);
  const auto ids = fuse_on_tape(
      tape, p_id, q_id, tape.input(params.w1), tape.input(params.b1),
      tape.input(params.w2), tape.input(params.b2), params.bands);
  FusionResult out;
  out.fused_p = tape.val_row(ids.fused_p);
  out.augmented_q = tape.val(ids.augmented_q);
  return out;
}

std::pair<std::vector<double>, std::vector<double>> fusion_summaries(
    const std::vector<double>& fused_p, const Tensor& augmented_q) {
  if (augmented_q.cols != fused_p.size())
    throw NumericError("fusion_summaries: dimension mismatch");
  std::vector<double> v(augmented_q.cols, 0.0);
  for (std::size_t i = 0; i < augmented_q.rows; ++i) {
    const double* row = augmented_q.row_ptr(i);
    for (std::size_t j = 0; j < augmented_q.cols; ++j) v[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(augmented_q.rows);
  for (double& x : v) x *= inv;
  return {fused_p, v};
}

}  // namespace opinionxf
