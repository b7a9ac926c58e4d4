#include "opinionxf/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "opinionxf/fft.hpp"
#include "opinionxf/ops.hpp"
#include "opinionxf/quantum.hpp"

namespace opinionxf {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kTinyNorm = 1e-30;
}  // namespace

Tape::Id Tape::push(Tensor value, bool needs, std::function<void(Tape&)> back,
                    const char* op_name) {
  if (!value.all_finite())
    throw NumericError(std::string(op_name) + ": non-finite output");
  Node node;
  node.owned = std::move(value);
  node.needs = needs;
  if (needs) node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

Tape::Id Tape::input(Tensor value) {
  Node node;
  node.owned = std::move(value);
  node.needs = false;
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

Tape::Id Tape::param(const Tensor& value, Tensor* grad_sink) {
  Node node;
  node.view = &value;
  node.sink = grad_sink;
  node.needs = grad_sink != nullptr;
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

const Tensor& Tape::val(Id id) const {
  const Node& n = nodes_[id];
  return n.view != nullptr ? *n.view : n.owned;
}

std::vector<double> Tape::val_row(Id id) const {
  const Tensor& t = val(id);
  return std::vector<double>(t.data.begin(), t.data.begin() + t.cols);
}

Tensor& Tape::grad(Id id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    const Tensor& v = val(id);
    n.grad = Tensor(v.rows, v.cols);
  }
  return n.grad;
}

void Tape::accumulate(Id id, const Tensor& g) {
  if (!nodes_[id].needs) return;
  grad(id) += g;
}

Tape::Id Tape::matmul(Id a, Id b) {
  Tensor out = opinionxf::matmul(val(a), val(b));
  const bool needs = nodes_[a].needs || nodes_[b].needs;
  return push(std::move(out), needs,
              [a, b, self = nodes_.size()](Tape& t) {
                const Tensor& g = t.grad(self);
                if (t.nodes_[a].needs)
                  t.accumulate(a, opinionxf::matmul_nt(g, t.val(b)));
                if (t.nodes_[b].needs)
                  t.accumulate(b, opinionxf::matmul_tn(t.val(a), g));
              },
              "matmul");
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
  Tensor out = opinionxf::matmul_nt(val(a), val(b));
  const bool needs = nodes_[a].needs || nodes_[b].needs;
  return push(std::move(out), needs,
              [a, b, self = nodes_.size()](Tape& t) {
                const Tensor& g = t.grad(self);
                if (t.nodes_[a].needs)
                  t.accumulate(a, opinionxf::matmul(g, t.val(b)));
                if (t.nodes_[b].needs)
                  t.accumulate(b, opinionxf::matmul_tn(g, t.val(a)));
              },
              "matmul_nt");
}

Tape::Id Tape::add(Id a, Id b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) throw NumericError("add: shape mismatch");
  Tensor out = ta;
  out += tb;
  const bool needs = nodes_[a].needs || nodes_[b].needs;
  return push(std::move(out), needs,
              [a, b, self = nodes_.size()](Tape& t) {
                const Tensor& g = t.grad(self);
                t.accumulate(a, g);
                t.accumulate(b, g);
              },
              "add");
}

Tape::Id Tape::scale(Id a, double c) {
  Tensor out = val(a);
  out *= c;
  return push(std::move(out), nodes_[a].needs,
              [a, c, self = nodes_.size()](Tape& t) {
                Tensor g = t.grad(self);
                g *= c;
                t.accumulate(a, g);
              },
              "scale");
}

Tape::Id Tape::add_row(Id mat, Id row) {
  const Tensor& m = val(mat);
  const Tensor& r = val(row);
  if (r.rows != 1 || r.cols != m.cols)
    throw NumericError("add_row: row shape mismatch");
  Tensor out = m;
  for (std::size_t i = 0; i < out.rows; ++i) {
    double* orow = out.row_ptr(i);
    for (std::size_t j = 0; j < out.cols; ++j) orow[j] += r.data[j];
  }
  const bool needs = nodes_[mat].needs || nodes_[row].needs;
  return push(std::move(out), needs,
              [mat, row, self = nodes_.size()](Tape& t) {
                const Tensor& g = t.grad(self);
                t.accumulate(mat, g);
                if (t.nodes_[row].needs) {
                  Tensor rg(1, g.cols);
                  for (std::size_t i = 0; i < g.rows; ++i) {
                    const double* grow = g.row_ptr(i);
                    for (std::size_t j = 0; j < g.cols; ++j)
                      rg.data[j] += grow[j];
                  }
                  t.accumulate(row, rg);
                }
              },
              "add_row");
}

Tape::Id Tape::slice_rows(Id a, std::size_t lo, std::size_t hi) {
  const Tensor& t = val(a);
  if (lo >= hi || hi > t.rows) throw NumericError("slice_rows: bad range");
  Tensor out(hi - lo, t.cols);
  std::copy(t.row_ptr(lo), t.row_ptr(lo) + (hi - lo) * t.cols,
            out.data.begin());
  return push(std::move(out), nodes_[a].needs,
              [a, lo, hi, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                Tensor& ga = tp.grad(a);
                for (std::size_t i = 0; i < hi - lo; ++i) {
                  double* dst = ga.row_ptr(lo + i);
                  const double* src = g.row_ptr(i);
                  for (std::size_t j = 0; j < g.cols; ++j) dst[j] += src[j];
                }
              },
              "slice_rows");
}

Tape::Id Tape::slice_cols(Id a, std::size_t lo, std::size_t hi) {
  const Tensor& t = val(a);
  if (lo >= hi || hi > t.cols) throw NumericError("slice_cols: bad range");
  Tensor out(t.rows, hi - lo);
  for (std::size_t i = 0; i < t.rows; ++i) {
    const double* src = t.row_ptr(i);
    double* dst = out.row_ptr(i);
    for (std::size_t j = lo; j < hi; ++j) dst[j - lo] = src[j];
  }
  return push(std::move(out), nodes_[a].needs,
              [a, lo, hi, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                Tensor& ga = tp.grad(a);
                for (std::size_t i = 0; i < g.rows; ++i) {
                  double* dst = ga.row_ptr(i);
                  const double* src = g.row_ptr(i);
                  for (std::size_t j = 0; j < hi - lo; ++j)
                    dst[lo + j] += src[j];
                }
              },
              "slice_cols");
}

Tape::Id Tape::concat_rows(const std::vector<Id>& parts) {
  if (parts.empty()) throw NumericError("concat_rows: no parts");
  std::size_t total = 0;
  const std::size_t cols = val(parts[0]).cols;
  bool needs = false;
  for (Id p : parts) {
    if (val(p).cols != cols) throw NumericError("concat_rows: column mismatch");
    total += val(p).rows;
    needs = needs || nodes_[p].needs;
  }
  Tensor out(total, cols);
  std::size_t r = 0;
  for (Id p : parts) {
    const Tensor& t = val(p);
    std::copy(t.data.begin(), t.data.end(), out.row_ptr(r));
    r += t.rows;
  }
  return push(std::move(out), needs,
              [parts, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                std::size_t r = 0;
                for (Id p : parts) {
                  const std::size_t pr = tp.val(p).rows;
                  if (tp.nodes_[p].needs) {
                    Tensor& gp = tp.grad(p);
                    for (std::size_t i = 0; i < pr; ++i) {
                      double* dst = gp.row_ptr(i);
                      const double* src = g.row_ptr(r + i);
                      for (std::size_t j = 0; j < g.cols; ++j) dst[j] += src[j];
                    }
                  }
                  r += pr;
                }
              },
              "concat_rows");
}

Tape::Id Tape::concat_cols(const std::vector<Id>& parts) {
  if (parts.empty()) throw NumericError("concat_cols: no parts");
  const std::size_t rows = val(parts[0]).rows;
  std::size_t total = 0;
  bool needs = false;
  for (Id p : parts) {
    if (val(p).rows != rows) throw NumericError("concat_cols: row mismatch");
    total += val(p).cols;
    needs = needs || nodes_[p].needs;
  }
  Tensor out(rows, total);
  std::size_t c = 0;
  for (Id p : parts) {
    const Tensor& t = val(p);
    for (std::size_t i = 0; i < rows; ++i)
      std::copy(t.row_ptr(i), t.row_ptr(i) + t.cols, out.row_ptr(i) + c);
    c += t.cols;
  }
  return push(std::move(out), needs,
              [parts, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                std::size_t c = 0;
                for (Id p : parts) {
                  const std::size_t pc = tp.val(p).cols;
                  if (tp.nodes_[p].needs) {
                    Tensor& gp = tp.grad(p);
                    for (std::size_t i = 0; i < g.rows; ++i) {
                      double* dst = gp.row_ptr(i);
                      const double* src = g.row_ptr(i) + c;
                      for (std::size_t j = 0; j < pc; ++j) dst[j] += src[j];
                    }
                  }
                  c += pc;
                }
              },
              "concat_cols");
}

Tape::Id Tape::select_rows(Id mat, std::vector<std::size_t> indices) {
  const Tensor& m = val(mat);
  Tensor out(indices.size(), m.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows) throw NumericError("select_rows: index out of range");
    std::copy(m.row_ptr(indices[i]), m.row_ptr(indices[i]) + m.cols,
              out.row_ptr(i));
  }
  return push(std::move(out), nodes_[mat].needs,
              [mat, idx = std::move(indices), self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                Tensor& gm = tp.grad(mat);
                for (std::size_t i = 0; i < idx.size(); ++i) {
                  double* dst = gm.row_ptr(idx[i]);
                  const double* src = g.row_ptr(i);
                  for (std::size_t j = 0; j < g.cols; ++j) dst[j] += src[j];
                }
              },
              "select_rows");
}

Tape::Id Tape::mean_rows(Id a) {
  const Tensor& t = val(a);
  Tensor out(1, t.cols);
  for (std::size_t i = 0; i < t.rows; ++i) {
    const double* row = t.row_ptr(i);
    for (std::size_t j = 0; j < t.cols; ++j) out.data[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(t.rows);
  out *= inv;
  return push(std::move(out), nodes_[a].needs,
              [a, inv, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                Tensor& ga = tp.grad(a);
                for (std::size_t i = 0; i < ga.rows; ++i) {
                  double* dst = ga.row_ptr(i);
                  for (std::size_t j = 0; j < g.cols; ++j)
                    dst[j] += g.data[j] * inv;
                }
              },
              "mean_rows");
}

Tape::Id Tape::layer_norm_rows(Id x, Id gain, Id bias) {
  const Tensor& t = val(x);
  const Tensor& g = val(gain);
  const Tensor& b = val(bias);
  if (g.rows != 1 || g.cols != t.cols || b.rows != 1 || b.cols != t.cols)
    throw NumericError("layer_norm_rows: gain/bias shape mismatch");
  if (t.cols < 2) throw NumericError("layer_norm_rows: need >= 2 columns");

  Tensor out(t.rows, t.cols);
  // Cache the normalized rows and 1/sigma for the adjoint.
  auto xhat = std::make_shared<Tensor>(t.rows, t.cols);
  auto inv_sigma = std::make_shared<std::vector<double>>(t.rows);
  const double inv_d = 1.0 / static_cast<double>(t.cols);
  for (std::size_t i = 0; i < t.rows; ++i) {
    const double* row = t.row_ptr(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < t.cols; ++j) mean += row[j];
    mean *= inv_d;
    double var = 0.0;
    for (std::size_t j = 0; j < t.cols; ++j)
      var += (row[j] - mean) * (row[j] - mean);
    var *= inv_d;
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    (*inv_sigma)[i] = is;
    double* hrow = xhat->row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t j = 0; j < t.cols; ++j) {
      hrow[j] = (row[j] - mean) * is;
      orow[j] = hrow[j] * g.data[j] + b.data[j];
    }
  }
  const bool needs =
      nodes_[x].needs || nodes_[gain].needs || nodes_[bias].needs;
  return push(
      std::move(out), needs,
      [x, gain, bias, xhat, inv_sigma, self = nodes_.size()](Tape& tp) {
        const Tensor& go = tp.grad(self);
        const Tensor& gv = tp.val(gain);
        const std::size_t cols = go.cols;
        const double inv_d = 1.0 / static_cast<double>(cols);
        if (tp.nodes_[gain].needs || tp.nodes_[bias].needs) {
          Tensor ggain(1, cols);
          Tensor gbias(1, cols);
          for (std::size_t i = 0; i < go.rows; ++i) {
            const double* grow = go.row_ptr(i);
            const double* hrow = xhat->row_ptr(i);
            for (std::size_t j = 0; j < cols; ++j) {
              ggain.data[j] += grow[j] * hrow[j];
              gbias.data[j] += grow[j];
            }
          }
          tp.accumulate(gain, ggain);
          tp.accumulate(bias, gbias);
        }
        if (tp.nodes_[x].needs) {
          Tensor gx(go.rows, cols);
          for (std::size_t i = 0; i < go.rows; ++i) {
            const double* grow = go.row_ptr(i);
            const double* hrow = xhat->row_ptr(i);
            double mean_gg = 0.0;
            double mean_ggh = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
              const double gg = grow[j] * gv.data[j];
              mean_gg += gg;
              mean_ggh += gg * hrow[j];
            }
            mean_gg *= inv_d;
            mean_ggh *= inv_d;
            double* dst = gx.row_ptr(i);
            const double is = (*inv_sigma)[i];
            for (std::size_t j = 0; j < cols; ++j) {
              const double gg = grow[j] * gv.data[j];
              dst[j] = is * (gg - mean_gg - hrow[j] * mean_ggh);
            }
          }
          tp.accumulate(x, gx);
        }
      },
      "layer_norm_rows");
}

Tape::Id Tape::gelu(Id a) {
  const Tensor& t = val(a);
  Tensor out(t.rows, t.cols);
  for (std::size_t i = 0; i < t.data.size(); ++i)
    out.data[i] = opinionxf::gelu(t.data[i]);
  return push(std::move(out), nodes_[a].needs,
              [a, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                const Tensor& x = tp.val(a);
                Tensor gx(g.rows, g.cols);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                  gx.data[i] = g.data[i] * gelu_grad(x.data[i]);
                tp.accumulate(a, gx);
              },
              "gelu");
}

Tape::Id Tape::softplus(Id a) {
  const Tensor& t = val(a);
  Tensor out(t.rows, t.cols);
  for (std::size_t i = 0; i < t.data.size(); ++i)
    out.data[i] = opinionxf::softplus(t.data[i]);
  return push(std::move(out), nodes_[a].needs,
              [a, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                const Tensor& x = tp.val(a);
                Tensor gx(g.rows, g.cols);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                  gx.data[i] = g.data[i] * sigmoid(x.data[i]);
                tp.accumulate(a, gx);
              },
              "softplus");
}

Tape::Id Tape::relu(Id a) {
  const Tensor& t = val(a);
  Tensor out(t.rows, t.cols);
  for (std::size_t i = 0; i < t.data.size(); ++i)
    out.data[i] = t.data[i] > 0.0 ? t.data[i] : 0.0;
  return push(std::move(out), nodes_[a].needs,
              [a, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                const Tensor& x = tp.val(a);
                Tensor gx(g.rows, g.cols);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                  gx.data[i] = x.data[i] > 0.0 ? g.data[i] : 0.0;
                tp.accumulate(a, gx);
              },
              "relu");
}

Tape::Id Tape::affine(Id a, double scale_c, double shift_c) {
  const Tensor& t = val(a);
  Tensor out(t.rows, t.cols);
  for (std::size_t i = 0; i < t.data.size(); ++i)
    out.data[i] = scale_c * t.data[i] + shift_c;
  return push(std::move(out), nodes_[a].needs,
              [a, scale_c, self = nodes_.size()](Tape& tp) {
                Tensor g = tp.grad(self);
                g *= scale_c;
                tp.accumulate(a, g);
              },
              "affine");
}

Tape::Id Tape::softmax_rows(Id a) {
  Tensor out = val(a);
  softmax_rows_inplace(out);
  return push(std::move(out), nodes_[a].needs,
              [a, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                const Tensor& p = tp.val(self);
                Tensor gx(g.rows, g.cols);
                for (std::size_t i = 0; i < g.rows; ++i) {
                  const double* grow = g.row_ptr(i);
                  const double* prow = p.row_ptr(i);
                  double gp = 0.0;
                  for (std::size_t j = 0; j < g.cols; ++j)
                    gp += grow[j] * prow[j];
                  double* dst = gx.row_ptr(i);
                  for (std::size_t j = 0; j < g.cols; ++j)
                    dst[j] = prow[j] * (grow[j] - gp);
                }
                tp.accumulate(a, gx);
              },
              "softmax_rows");
}

Tape::Id Tape::dropout(Id a, double rate, Pcg32& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw NumericError("dropout: rate must be < 1");
  const Tensor& t = val(a);
  auto mask = std::make_shared<std::vector<double>>(t.data.size());
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor out(t.rows, t.cols);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    const double m = rng.next_double() < rate ? 0.0 : keep_scale;
    (*mask)[i] = m;
    out.data[i] = t.data[i] * m;
  }
  return push(std::move(out), nodes_[a].needs,
              [a, mask, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                Tensor gx(g.rows, g.cols);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                  gx.data[i] = g.data[i] * (*mask)[i];
                tp.accumulate(a, gx);
              },
              "dropout");
}

Tape::Id Tape::cross_entropy_logits(Id logits, std::size_t target) {
  const Tensor& t = val(logits);
  if (t.rows != 1) throw NumericError("cross_entropy_logits: expected a row");
  if (target >= t.cols)
    throw NumericError("cross_entropy_logits: target out of range");
  double m = t.data[0];
  for (double v : t.data) m = std::max(m, v);
  double z = 0.0;
  for (double v : t.data) z += std::exp(v - m);
  const double loss = std::log(z) + m - t.data[target];
  return push(Tensor::scalar(loss), nodes_[logits].needs,
              [logits, target, self = nodes_.size()](Tape& tp) {
                const double g = tp.grad(self).data[0];
                const Tensor& x = tp.val(logits);
                Tensor gx(1, x.cols);
                double m = x.data[0];
                for (double v : x.data) m = std::max(m, v);
                double z = 0.0;
                for (double v : x.data) z += std::exp(v - m);
                for (std::size_t j = 0; j < x.cols; ++j)
                  gx.data[j] = g * std::exp(x.data[j] - m) / z;
                gx.data[target] -= g;
                tp.accumulate(logits, gx);
              },
              "cross_entropy_logits");
}

Tape::Id Tape::cosine_align_loss(Id u, Id v) {
  const Tensor& tu = val(u);
  const Tensor& tv = val(v);
  if (tu.rows != 1 || tv.rows != 1 || tu.cols != tv.cols)
    throw NumericError("cosine_align_loss: expected matching rows");
  const double nu = std::sqrt(tu.squared_norm());
  const double nv = std::sqrt(tv.squared_norm());
  const bool degenerate = nu < kTinyNorm || nv < kTinyNorm;
  double cosine = 0.0;
  if (!degenerate) {
    double d = 0.0;
    for (std::size_t j = 0; j < tu.cols; ++j) d += tu.data[j] * tv.data[j];
    cosine = d / (nu * nv);
  }
  const double loss = 1.0 - cosine;
  const bool needs = nodes_[u].needs || nodes_[v].needs;
  return push(Tensor::scalar(loss), needs,
              [u, v, degenerate, self = nodes_.size()](Tape& tp) {
                if (degenerate) return;  // loss fixed at 1, gradient 0
                const double g = tp.grad(self).data[0];
                const Tensor& tu = tp.val(u);
                const Tensor& tv = tp.val(v);
                const double nu = std::sqrt(tu.squared_norm());
                const double nv = std::sqrt(tv.squared_norm());
                double d = 0.0;
                for (std::size_t j = 0; j < tu.cols; ++j)
                  d += tu.data[j] * tv.data[j];
                const double c = d / (nu * nv);
                if (tp.nodes_[u].needs) {
                  Tensor gu(1, tu.cols);
                  for (std::size_t j = 0; j < tu.cols; ++j)
                    gu.data[j] = -g * (tv.data[j] / (nu * nv) -
                                       c * tu.data[j] / (nu * nu));
                  tp.accumulate(u, gu);
                }
                if (tp.nodes_[v].needs) {
                  Tensor gv(1, tv.cols);
                  for (std::size_t j = 0; j < tv.cols; ++j)
                    gv.data[j] = -g * (tu.data[j] / (nu * nv) -
                                       c * tv.data[j] / (nv * nv));
                  tp.accumulate(v, gv);
                }
              },
              "cosine_align_loss");
}

Tape::Id Tape::add_scalars(const std::vector<Id>& terms) {
  if (terms.empty()) throw NumericError("add_scalars: no terms");
  double s = 0.0;
  bool needs = false;
  for (Id id : terms) {
    const Tensor& t = val(id);
    if (t.numel() != 1) throw NumericError("add_scalars: non-scalar term");
    s += t.data[0];
    needs = needs || nodes_[id].needs;
  }
  return push(Tensor::scalar(s), needs,
              [terms, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                for (Id id : terms) tp.accumulate(id, g);
              },
              "add_scalars");
}

Tape::Id Tape::fft_lowband_mags(Id x, std::size_t k_bands) {
  const Tensor& t = val(x);
  if (t.rows != 1) throw NumericError("fft_lowband_mags: expected a row");
  if (k_bands == 0 || k_bands > t.cols)
    throw NumericError("fft_lowband_mags: bad band count");
  auto spec = std::make_shared<Spectrum>(fft(t.data));
  Tensor out(1, k_bands);
  for (std::size_t k = 0; k < k_bands; ++k)
    out.data[k] = std::abs(spec->bins[k]);
  return push(
      std::move(out), nodes_[x].needs,
      [x, k_bands, spec, self = nodes_.size()](Tape& tp) {
        const Tensor& g = tp.grad(self);
        const std::size_t d = tp.val(x).cols;
        Tensor gx(1, d);
        const double w = kTwoPi / static_cast<double>(d);
        for (std::size_t k = 0; k < k_bands; ++k) {
          const double mag = std::abs(spec->bins[k]);
          if (mag <= 0.0) continue;  // zero-magnitude bin: gradient 0
          const double re = spec->bins[k].real() / mag;
          const double im = spec->bins[k].imag() / mag;
          const double gk = g.data[k];
          for (std::size_t n = 0; n < d; ++n) {
            const double ang = w * static_cast<double>((k * n) % d);
            gx.data[n] += gk * (re * std::cos(ang) - im * std::sin(ang));
          }
        }
        tp.accumulate(x, gx);
      },
      "fft_lowband_mags");
}

Tape::Id Tape::spectral_recombine(Id x, Id mags) {
  const Tensor& tx = val(x);
  const Tensor& tm = val(mags);
  if (tx.rows != 1 || tm.rows != 1)
    throw NumericError("spectral_recombine: expected rows");
  const std::size_t d = tx.cols;
  const std::size_t k_bands = tm.cols;
  if (k_bands == 0 || k_bands > d / 2)
    throw NumericError("spectral_recombine: band count must be in [1, d/2]");

  auto spec = std::make_shared<Spectrum>(fft(tx.data));
  // Phase of each low bin; exactly-zero bins get phase 0 by convention.
  auto phases = std::make_shared<std::vector<double>>(k_bands);
  for (std::size_t k = 0; k < k_bands; ++k) {
    const auto& z = spec->bins[k];
    (*phases)[k] = std::abs(z) > 0.0 ? std::atan2(z.imag(), z.real()) : 0.0;
  }

  const Spectrum fused_spec = build_fused_spectrum(*spec, tm.data);
  std::vector<double> fused = ifft(fused_spec);
  Tensor out = Tensor::row_vector(std::move(fused));

  const bool needs = nodes_[x].needs || nodes_[mags].needs;
  return push(
      std::move(out), needs,
      [x, mags, k_bands, spec, phases, self = nodes_.size()](Tape& tp) {
        const Tensor& g = tp.grad(self);
        const std::size_t d = tp.val(x).cols;
        const Tensor& tm = tp.val(mags);
        const double w = kTwoPi / static_cast<double>(d);
        const double inv_d = 1.0 / static_cast<double>(d);

        if (tp.nodes_[mags].needs) {
          Tensor gm(1, k_bands);
          for (std::size_t k = 0; k < k_bands; ++k) {
            const double mult = (k == 0) ? 1.0 : 2.0;
            double acc = 0.0;
            for (std::size_t n = 0; n < d; ++n) {
              const double ang =
                  (*phases)[k] + w * static_cast<double>((k * n) % d);
              acc += g.data[n] * std::cos(ang);
            }
            gm.data[k] = mult * inv_d * acc;
          }
          tp.accumulate(mags, gm);
        }

        if (tp.nodes_[x].needs) {
          Tensor gx(1, d);
          // Pass-through bands: the operator restricted to bins
          // K..d-K is a symmetric circulant filter, so its adjoint is
          // itself.
          Spectrum gs = fft(std::vector<double>(
              g.data.begin(), g.data.begin() + d));
          for (std::size_t k = 0; k < k_bands; ++k) {
            gs.bins[k] = {0.0, 0.0};
            if (k > 0) gs.bins[d - k] = {0.0, 0.0};
          }
          std::vector<double> pass = ifft(gs, /*allow_asymmetric=*/true);
          for (std::size_t n = 0; n < d; ++n) gx.data[n] = pass[n];

          // Phase path for bins 1..K-1 (bin 0 has a locked +-1 phase).
          for (std::size_t k = 1; k < k_bands; ++k) {
            const double mag = std::abs(spec->bins[k]);
            if (mag <= 0.0) continue;
            double gphi = 0.0;
            for (std::size_t n = 0; n < d; ++n) {
              const double ang =
                  (*phases)[k] + w * static_cast<double>((k * n) % d);
              gphi += g.data[n] * (-2.0 * tm.data[k] * inv_d) * std::sin(ang);
            }
            const double re = spec->bins[k].real();
            const double im = spec->bins[k].imag();
            const double inv_mag2 = 1.0 / (mag * mag);
            for (std::size_t n = 0; n < d; ++n) {
              const double ang = w * static_cast<double>((k * n) % d);
              const double dphi =
                  (re * (-std::sin(ang)) - im * std::cos(ang)) * inv_mag2;
              gx.data[n] += gphi * dphi;
            }
          }
          tp.accumulate(x, gx);
        }
      },
      "spectral_recombine");
}

Tape::Id Tape::quantum_token(Id fused, Id w, Id b, std::size_t feat_i,
                             std::size_t feat_j) {
  const Tensor& f = val(fused);
  const Tensor& tw = val(w);
  const Tensor& tb = val(b);
  if (f.rows != 1 || tw.rows != 1 || tb.rows != 1 || tw.cols != tb.cols)
    throw NumericError("quantum_token: expected rows");
  if (feat_i == feat_j || feat_i >= f.cols || feat_j >= f.cols)
    throw NumericError("quantum_token: bad feature indices");
  const double e = circuit_expectation(f.data[feat_i], f.data[feat_j]);
  Tensor out(1, tw.cols);
  for (std::size_t j = 0; j < tw.cols; ++j)
    out.data[j] = e * tw.data[j] + tb.data[j];
  // Stop-gradient on the angles: `fused` is intentionally not a gradient
  // parent, only (w, b) receive adjoints.
  const bool needs = nodes_[w].needs || nodes_[b].needs;
  return push(std::move(out), needs,
              [w, b, e, self = nodes_.size()](Tape& tp) {
                const Tensor& g = tp.grad(self);
                if (tp.nodes_[w].needs) {
                  Tensor gw = g;
                  gw *= e;
                  tp.accumulate(w, gw);
                }
                tp.accumulate(b, g);
              },
              "quantum_token");
}

void Tape::backward(Id root) {
  if (val(root).numel() != 1)
    throw NumericError("backward: root must be scalar");
  grad(root).data[0] = 1.0;
  for (Id id = root + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.needs || node.grad.empty()) continue;
    if (node.back) node.back(*this);
    if (node.sink != nullptr) *node.sink += node.grad;
  }
}

}  // namespace opinionxf
