#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "opinionxf/errors.hpp"
#include "opinionxf/rng.hpp"

namespace opinionxf {

// Dense row-major matrix of doubles. Vectors are 1xN, scalars 1x1.
// All trainable state and all tape values use this one type.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Tensor row_vector(std::vector<double> values) {
    Tensor t;
    t.rows = 1;
    t.cols = values.size();
    t.data = std::move(values);
    return t;
  }

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }

  std::size_t numel() const { return rows * cols; }
  bool empty() const { return data.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }

  double* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

  bool same_shape(const Tensor& other) const {
    return rows == other.rows && cols == other.cols;
  }

  bool all_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void fill(double v) {
    for (double& x : data) x = v;
  }

  void fill_uniform(Pcg32& rng, double lo, double hi) {
    for (double& x : data) x = rng.uniform(lo, hi);
  }

  Tensor& operator+=(const Tensor& other) {
    if (!same_shape(other)) throw NumericError("tensor +=: shape mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
    return *this;
  }

  Tensor& operator*=(double c) {
    for (double& x : data) x *= c;
    return *this;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return s;
  }
};

}  // namespace opinionxf
