#pragma once

#include <vector>

#include "opinionxf/tensor.hpp"

namespace opinionxf {

// Dense kernels shared by the tape and the standalone numeric API.

Tensor matmul(const Tensor& a, const Tensor& b);     // a(m,k) * b(k,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a(m,k) * b(n,k)^T
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a(k,m)^T * b(k,n)

// Numerically stable softmax (max-subtracted). Output is positive and
// sums to 1.
std::vector<double> softmax(const std::vector<double>& x);
void softmax_rows_inplace(Tensor& t);

// Layer normalization over a vector: zero mean, unit variance before the
// affine gain/bias, with eps inside the square root.
inline constexpr double kLayerNormEps = 1e-5;
std::vector<double> layer_norm(const std::vector<double>& x,
                               const std::vector<double>& gain,
                               const std::vector<double>& bias);

double gelu(double x);
double gelu_grad(double x);
double softplus(double x);
double sigmoid(double x);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double l2_norm(const std::vector<double>& a);

}  // namespace opinionxf
