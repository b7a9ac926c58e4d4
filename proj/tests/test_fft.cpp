#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "opinionxf/errors.hpp"
#include "opinionxf/fft.hpp"
#include "opinionxf/rng.hpp"

using namespace opinionxf;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Reference O(d^2) DFT, independent of the library implementation.
std::vector<std::complex<double>> direct_dft(const std::vector<double>& x) {
  const std::size_t d = x.size();
  std::vector<std::complex<double>> out(d);
  for (std::size_t k = 0; k < d; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t n = 0; n < d; ++n) {
      const double ang = -kTwoPi * static_cast<double>(k) *
                         static_cast<double>(n) / static_cast<double>(d);
      acc += x[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<double> random_signal(Pcg32& rng, std::size_t d) {
  std::vector<double> x(d);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("constant signal concentrates in the DC bin") {
  const double c = 2.5;
  const auto spec = fft({c, c, c, c});
  CHECK(spec.bins[0].real() == doctest::Approx(4.0 * c).epsilon(1e-12));
  CHECK(std::abs(spec.bins[0].imag()) < 1e-12);
  for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(spec.bins[k]) < 1e-12);
}

TEST_CASE("impulse spreads flat") {
  const auto spec = fft({1.0, 0.0, 0.0, 0.0});
  for (const auto& bin : spec.bins) {
    CHECK(bin.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(bin.imag()) < 1e-12);
  }
}

TEST_CASE("fft matches the direct DFT on random vectors") {
  Pcg32 rng(271828);
  for (const std::size_t d : {4u, 8u, 16u, 128u}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto x = random_signal(rng, d);
      const auto fast = fft(x);
      const auto slow = direct_dft(x);
      for (std::size_t k = 0; k < d; ++k)
        CHECK(std::abs(fast.bins[k] - slow[k]) < 1e-10);
    }
  }
}

TEST_CASE("non-power-of-two sizes go through the direct path") {
  Pcg32 rng(99);
  for (const std::size_t d : {3u, 6u, 12u}) {
    const auto x = random_signal(rng, d);
    const auto fast = fft(x);
    const auto slow = direct_dft(x);
    for (std::size_t k = 0; k < d; ++k)
      CHECK(std::abs(fast.bins[k] - slow[k]) < 1e-10);
    const auto back = ifft(fast);
    for (std::size_t n = 0; n < d; ++n)
      CHECK(back[n] == doctest::Approx(x[n]).epsilon(1e-9));
  }
}

TEST_CASE("ifft(fft(x)) recovers x") {
  Pcg32 rng(7);
  const auto x = random_signal(rng, 16);
  const auto back = ifft(fft(x));
  for (std::size_t n = 0; n < x.size(); ++n)
    CHECK(std::fabs(back[n] - x[n]) < 1e-9);
}

TEST_CASE("flat spectrum inverts to an impulse train mean") {
  Spectrum spec;
  spec.bins = {{4.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
  const auto x = ifft(spec);
  for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Parseval: time energy equals scaled spectrum energy") {
  Pcg32 rng(55);
  for (int rep = 0; rep < 10; ++rep) {
    const auto x = random_signal(rng, 32);
    const auto spec = fft(x);
    double et = 0.0, ef = 0.0;
    for (double v : x) et += v * v;
    for (const auto& bin : spec.bins) ef += std::norm(bin);
    CHECK(std::fabs(et - ef / 32.0) < 1e-9);
  }
}

TEST_CASE("linearity of the transform") {
  Pcg32 rng(12);
  const auto x = random_signal(rng, 16);
  const auto y = random_signal(rng, 16);
  const double a = 1.7, b = -0.3;
  std::vector<double> combo(16);
  for (std::size_t i = 0; i < 16; ++i) combo[i] = a * x[i] + b * y[i];
  const auto fc = fft(combo);
  const auto fx = fft(x);
  const auto fy = fft(y);
  for (std::size_t k = 0; k < 16; ++k)
    CHECK(std::abs(fc.bins[k] - (a * fx.bins[k] + b * fy.bins[k])) < 1e-9);
}

TEST_CASE("asymmetric spectra are rejected") {
  Spectrum spec;
  spec.bins = {{1.0, 0.0}, {0.5, 0.5}, {1.0, 0.0}, {2.0, -0.5}};
  CHECK_THROWS_AS(ifft(spec), SpectrumError);
  CHECK_NOTHROW(ifft(spec, /*allow_asymmetric=*/true));
}

TEST_CASE("build_fused_spectrum passes untouched bands through bit-exactly") {
  Pcg32 rng(400);
  const auto x = random_signal(rng, 16);
  const auto original = fft(x);
  const std::vector<double> mags{3.0, 1.0, 0.5, 0.25};
  const auto fused = build_fused_spectrum(original, mags);
  for (std::size_t k = 4; k <= 16 - 4; ++k) {
    CHECK(fused.bins[k].real() == original.bins[k].real());
    CHECK(fused.bins[k].imag() == original.bins[k].imag());
  }
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(std::abs(fused.bins[k]) == doctest::Approx(mags[k]).epsilon(1e-12));
  // Mirrored bins keep the result conjugate-symmetric.
  for (std::size_t k = 1; k < 4; ++k) {
    CHECK(fused.bins[16 - k].real() == fused.bins[k].real());
    CHECK(fused.bins[16 - k].imag() == -fused.bins[k].imag());
  }
  CHECK_NOTHROW(ifft(fused));
}
