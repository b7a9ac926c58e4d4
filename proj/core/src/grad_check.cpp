#include "opinionxf/grad_check.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace opinionxf {

std::string GradCheckReport::to_table() const {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-32s %14s\n", "parameter",
                "max_rel_error");
  out << line;
  for (const auto& p : per_param) {
    std::snprintf(line, sizeof(line), "%-32s %14.3e\n", p.name.c_str(),
                  p.max_rel_error);
    out << line;
  }
  std::snprintf(line, sizeof(line), "overall %.3e (eps %.1e, tol %.1e) -> %s\n",
                max_rel_error, eps, tolerance, pass ? "pass" : "FAIL");
  out << line;
  return out.str();
}

GradCheckReport grad_check(const Objective& f, ParamStore& params, double eps,
                           double tolerance) {
  GradCheckReport report;
  report.eps = eps;
  report.tolerance = tolerance;

  GradStore analytic(params);
  const double base = f(params, &analytic);
  if (!std::isfinite(base)) throw NumericError("grad_check: non-finite loss");

  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& entry = params.entry(p);
    if (!entry.trainable) continue;
    double worst = 0.0;
    for (std::size_t i = 0; i < entry.value.data.size(); ++i) {
      const double saved = entry.value.data[i];
      entry.value.data[i] = saved + eps;
      const double up = f(params, nullptr);
      entry.value.data[i] = saved - eps;
      const double down = f(params, nullptr);
      entry.value.data[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericError("grad_check: non-finite loss at " + entry.name);
      const double fd = (up - down) / (2.0 * eps);
      const double ad = analytic.at(p).data[i];
      // Structurally-constant directions (true gradient 0) leave the
      // central difference at ulp-level noise; absolute agreement below
      // 1e-9 counts as a match before the relative form applies.
      const double diff = std::fabs(ad - fd);
      const double rel =
          diff <= 1e-9
              ? 0.0
              : diff / std::max(1e-8, std::fabs(ad) + std::fabs(fd));
      worst = std::max(worst, rel);
    }
    report.per_param.push_back({entry.name, worst});
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  report.pass = report.max_rel_error < tolerance;
  return report;
}

}  // namespace opinionxf
