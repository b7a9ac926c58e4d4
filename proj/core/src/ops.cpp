#include "opinionxf/ops.hpp"

#include <algorithm>
#include <cmath>

namespace opinionxf {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows) throw NumericError("matmul: inner dimension mismatch");
  Tensor c(a.rows, b.cols);
  // i-k-j ordering keeps the inner loop contiguous in both B and C.
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols != b.cols) throw NumericError("matmul_nt: dimension mismatch");
  Tensor c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.row_ptr(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      crow[j] = s;
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows != b.rows) throw NumericError("matmul_tn: dimension mismatch");
  Tensor c(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = a.row_ptr(k);
    const double* brow = b.row_ptr(k);
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.row_ptr(i);
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

std::vector<double> softmax(const std::vector<double>& x) {
  if (x.empty()) throw NumericError("softmax: empty input");
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

void softmax_rows_inplace(Tensor& t) {
  for (std::size_t r = 0; r < t.rows; ++r) {
    double* row = t.row_ptr(r);
    double m = row[0];
    for (std::size_t j = 1; j < t.cols; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < t.cols; ++j) {
      row[j] = std::exp(row[j] - m);
      z += row[j];
    }
    for (std::size_t j = 0; j < t.cols; ++j) row[j] /= z;
  }
}

std::vector<double> layer_norm(const std::vector<double>& x,
                               const std::vector<double>& gain,
                               const std::vector<double>& bias) {
  const std::size_t d = x.size();
  if (d < 2) throw NumericError("layer_norm: need at least 2 elements");
  if (gain.size() != d || bias.size() != d)
    throw NumericError("layer_norm: gain/bias size mismatch");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d);
  const double inv_sigma = 1.0 / std::sqrt(var + kLayerNormEps);
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i)
    out[i] = (x[i] - mean) * inv_sigma * gain[i] + bias[i];
  return out;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

double softplus(double x) {
  // max(x,0) + log1p(exp(-|x|)) avoids overflow on both sides.
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace opinionxf
