#include "opinionxf/fft.hpp"

#include <cmath>
#include <sstream>

#include "opinionxf/errors.hpp"

namespace opinionxf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void radix2_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

void direct_dft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang =
          sign * kTwoPi * static_cast<double>((k * j) % n) / static_cast<double>(n);
      acc += a[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  a.swap(out);
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_complex_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  if (a.empty()) throw NumericError("fft: empty input");
  if (is_power_of_two(a.size())) {
    radix2_inplace(a, inverse);
  } else {
    direct_dft_inplace(a, inverse);
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(a.size());
    for (auto& z : a) z *= scale;
  }
}

Spectrum fft(const std::vector<double>& x) {
  Spectrum s;
  s.bins.assign(x.begin(), x.end());
  fft_complex_inplace(s.bins, /*inverse=*/false);
  return s;
}

std::vector<double> ifft(const Spectrum& spectrum, bool allow_asymmetric) {
  const std::size_t d = spectrum.size();
  if (d == 0) throw NumericError("ifft: empty spectrum");
  if (!allow_asymmetric) {
    double max_mag = 1.0;
    for (const auto& z : spectrum.bins) max_mag = std::max(max_mag, std::abs(z));
    double worst = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const auto mirrored = std::conj(spectrum.bins[(d - k) % d]);
      worst = std::max(worst, std::abs(spectrum.bins[k] - mirrored));
    }
    if (worst > 1e-6 * max_mag) {
      std::ostringstream msg;
      msg << "ifft: spectrum is not conjugate-symmetric (asymmetry " << worst
          << ")";
      throw SpectrumError(msg.str());
    }
  }
  std::vector<std::complex<double>> a = spectrum.bins;
  fft_complex_inplace(a, /*inverse=*/true);
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = a[i].real();
  return out;
}

Spectrum build_fused_spectrum(const Spectrum& original,
                              const std::vector<double>& mags) {
  const std::size_t d = original.size();
  const std::size_t k_bands = mags.size();
  if (k_bands == 0 || k_bands > d / 2)
    throw NumericError("build_fused_spectrum: band count must be in [1, d/2]");
  Spectrum fused = original;
  for (std::size_t k = 0; k < k_bands; ++k) {
    const auto& z = original.bins[k];
    const double phase =
        std::abs(z) > 0.0 ? std::atan2(z.imag(), z.real()) : 0.0;
    const std::complex<double> bin = std::polar(mags[k], phase);
    fused.bins[k] = bin;
    if (k > 0) fused.bins[d - k] = std::conj(bin);
  }
  return fused;
}

}  // namespace opinionxf
