#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "opinionxf/rng.hpp"
#include "opinionxf/tensor.hpp"

namespace opinionxf {

// Reverse-mode autodiff tape over dense matrices. A forward pass appends
// nodes in evaluation order; backward() walks the tape in reverse and calls
// each node's adjoint. Parameter leaves view external storage and flush
// their accumulated gradient into an external sink, so one GradStore can
// collect gradients across many per-sample tapes.
//
// Every op output is checked for NaN/Inf and throws NumericError on the
// first non-finite value.
class Tape {
 public:
  using Id = std::size_t;
  static constexpr Id npos = static_cast<Id>(-1);

  // Leaf that never receives gradients (data, constants).
  Id input(Tensor value);

  // Trainable leaf. `value` must outlive the tape. A null sink freezes the
  // parameter for this pass.
  Id param(const Tensor& value, Tensor* grad_sink);

  const Tensor& val(Id id) const;
  std::vector<double> val_row(Id id) const;  // first row as a plain vector
  Tensor& grad(Id id);
  bool needs_grad(Id id) const { return nodes_[id].needs; }
  std::size_t size() const { return nodes_.size(); }

  Id matmul(Id a, Id b);     // (m,k) x (k,n)
  Id matmul_nt(Id a, Id b);  // (m,k) x (n,k)^T
  Id add(Id a, Id b);
  Id scale(Id a, double c);
  Id add_row(Id mat, Id row);  // broadcast a 1xC row over every row of mat
  Id slice_rows(Id a, std::size_t lo, std::size_t hi);
  Id slice_cols(Id a, std::size_t lo, std::size_t hi);
  Id concat_rows(const std::vector<Id>& parts);
  Id concat_cols(const std::vector<Id>& parts);
  Id select_rows(Id mat, std::vector<std::size_t> indices);
  Id mean_rows(Id a);
  Id layer_norm_rows(Id x, Id gain, Id bias);
  Id gelu(Id a);
  Id softplus(Id a);
  Id relu(Id a);
  Id affine(Id a, double scale, double shift);  // elementwise scale*x + shift
  Id softmax_rows(Id a);
  Id dropout(Id a, double rate, Pcg32& rng);

  // Scalar (1x1) outputs.
  Id cross_entropy_logits(Id logits, std::size_t target);
  Id cosine_align_loss(Id u, Id v);  // 1 - cos(u, v); zero vectors give 1
  Id add_scalars(const std::vector<Id>& terms);

  // Magnitudes of the first k_bands DFT bins of a 1xD row.
  Id fft_lowband_mags(Id x, std::size_t k_bands);

  // Rebuild a signal whose low-band magnitudes are replaced by `mags`
  // (phases kept from x), mirrored for conjugate symmetry; bins
  // K..D-K pass through untouched. Differentiable in both arguments.
  Id spectral_recombine(Id x, Id mags);

  // e = <ZZ> of the Ry-Ry-CZ circuit with angles taken from columns
  // feat_i/feat_j of `fused`; output is e*w + b. No gradient flows into
  // `fused` (the angles are treated as constants); w and b train normally.
  Id quantum_token(Id fused, Id w, Id b, std::size_t feat_i, std::size_t feat_j);

  // Seeds the root gradient with 1 and runs all adjoints in reverse order.
  // Root must be scalar. Parameter gradients are accumulated (+=) into
  // their sinks.
  void backward(Id root);

 private:
  struct Node {
    Tensor owned;
    const Tensor* view = nullptr;
    Tensor* sink = nullptr;
    Tensor grad;
    bool needs = false;
    std::function<void(Tape&)> back;
  };

  Id push(Tensor value, bool needs, std::function<void(Tape&)> back,
          const char* op_name);
  void accumulate(Id id, const Tensor& g);

  std::vector<Node> nodes_;
};

}  // namespace opinionxf
