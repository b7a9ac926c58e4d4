#pragma once

#include <array>
#include <complex>

namespace opinionxf {

// Two-qubit statevector with amplitudes ordered |00>, |01>, |10>, |11>.
struct TwoQubitState {
  std::array<std::complex<double>, 4> amp;

  double norm_squared() const {
    double s = 0.0;
    for (const auto& a : amp) s += std::norm(a);
    return s;
  }
};

// State after applying Ry(theta1) to qubit 1 and Ry(theta2) to qubit 2 on
// |00>. Ry(t)|0> = cos(t/2)|0> + sin(t/2)|1>, so the product state is
// (c1*c2, c1*s2, s1*c2, s1*s2).
TwoQubitState ry_ry_state(double theta1, double theta2);

// Controlled-Z: negates the |11> amplitude, leaves the rest untouched.
TwoQubitState apply_cz(TwoQubitState state);

// <Z (x) Z> = |a00|^2 - |a01|^2 - |a10|^2 + |a11|^2, always in [-1, 1].
double expect_zz(const TwoQubitState& state);

// Full circuit expectation for two rotation angles. Runs the statevector
// simulation (not the cos(t1)*cos(t2) closed form, which tests use as the
// independent oracle).
double circuit_expectation(double theta1, double theta2);

}  // namespace opinionxf
