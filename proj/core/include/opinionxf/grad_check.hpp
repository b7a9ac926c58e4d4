#pragma once

#include <functional>
#include <string>
#include <vector>

#include "opinionxf/param_store.hpp"

namespace opinionxf {

struct GradCheckReport {
  struct PerParam {
    std::string name;
    double max_rel_error = 0.0;
  };

  double max_rel_error = 0.0;
  double eps = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<PerParam> per_param;

  std::string to_table() const;
};

// Scalar objective over a parameter store. When `grads` is non-null the
// callee must also accumulate reverse-mode gradients into it.
using Objective = std::function<double(const ParamStore&, GradStore*)>;

// Central-difference check of reverse-mode gradients for every trainable
// parameter coordinate. Relative error per coordinate is
//   |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
GradCheckReport grad_check(const Objective& f, ParamStore& params,
                           double eps = 1e-5, double tolerance = 1e-4);

}  // namespace opinionxf
