#include "opinionxf/quantum.hpp"

#include <cmath>

namespace opinionxf {

TwoQubitState ry_ry_state(double theta1, double theta2) {
  const double c1 = std::cos(0.5 * theta1);
  const double s1 = std::sin(0.5 * theta1);
  const double c2 = std::cos(0.5 * theta2);
  const double s2 = std::sin(0.5 * theta2);
  return TwoQubitState{{std::complex<double>(c1 * c2, 0.0),
                        std::complex<double>(c1 * s2, 0.0),
                        std::complex<double>(s1 * c2, 0.0),
                        std::complex<double>(s1 * s2, 0.0)}};
}

TwoQubitState apply_cz(TwoQubitState state) {
  state.amp[3] = -state.amp[3];
  return state;
}

double expect_zz(const TwoQubitState& state) {
  return std::norm(state.amp[0]) - std::norm(state.amp[1]) -
         std::norm(state.amp[2]) + std::norm(state.amp[3]);
}

double circuit_expectation(double theta1, double theta2) {
  return expect_zz(apply_cz(ry_ry_state(theta1, theta2)));
}

}  // namespace opinionxf
