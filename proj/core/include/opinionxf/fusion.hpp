#pragma once

#include <utility>
#include <vector>

#include "opinionxf/tape.hpp"
#include "opinionxf/tensor.hpp"

namespace opinionxf {

// Band-compression MLP: input 2K concatenated low-band magnitudes of the
// presentation token and the mean question token, hidden 2K with GELU,
// output K non-negative magnitudes through softplus.
struct FusionParams {
  std::size_t bands = 0;  // K
  Tensor w1;              // 2K x 2K
  Tensor b1;              // 1 x 2K
  Tensor w2;              // 2K x K
  Tensor b2;              // 1 x K

  void validate(std::size_t d_model) const;

  // Weights that route the presentation magnitudes straight through the
  // GELU/softplus pair. Both activations are exact identities (to double
  // precision) once magnitudes exceed ~40, which is the regime the
  // reconstruction identity is checked in.
  static FusionParams identity_passthrough(std::size_t bands);
};

struct FusionResult {
  std::vector<double> fused_p;
  Tensor augmented_q;  // Q x d, original tokens plus the fused vector
};

// Spectral fusion of the presentation token with the question tokens:
// FFT both the token and the mean question token, compress the low-band
// magnitudes through the MLP, rebuild the presentation spectrum with its
// original phases, and inverse-transform. The fused vector replaces the
// presentation token and is added onto every question token.
FusionResult fuse(const std::vector<double>& p, const Tensor& q_tokens,
                  const FusionParams& params);

// u = fused presentation vector, v = mean of the augmented question tokens.
std::pair<std::vector<double>, std::vector<double>> fusion_summaries(
    const std::vector<double>& fused_p, const Tensor& augmented_q);

// Tape-side composite used by fuse() and by the model forward pass, so the
// standalone and in-model paths cannot drift apart.
struct FusionTapeIds {
  Tape::Id fused_p = Tape::npos;
  Tape::Id augmented_q = Tape::npos;
};
FusionTapeIds fuse_on_tape(Tape& tape, Tape::Id p, Tape::Id q_tokens,
                           Tape::Id w1, Tape::Id b1, Tape::Id w2, Tape::Id b2,
                           std::size_t bands);

}  // namespace opinionxf
