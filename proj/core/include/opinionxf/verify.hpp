#pragma once

#include <string>
#include <vector>

namespace opinionxf {

struct VerifyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Self-contained oracle suite: direct-DFT comparison for the FFT, the
// closed-form quantum expectation over an angle grid, reverse-mode vs
// central-difference gradient checks on a tiny model, and the metric
// fixtures against a brute-force confusion-matrix construction.
std::vector<VerifyResult> run_verification();

// Formats results as a fixed-width pass/fail table.
std::string format_verification_table(const std::vector<VerifyResult>& results);

}  // namespace opinionxf
