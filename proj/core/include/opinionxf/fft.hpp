#pragma once

#include <complex>
#include <vector>

namespace opinionxf {

// Full complex spectrum of a length-d signal, bins 0..d-1.
struct Spectrum {
  std::vector<std::complex<double>> bins;

  std::size_t size() const { return bins.size(); }
};

// Forward DFT: X[k] = sum_n x[n] * exp(-2*pi*i*k*n/d). Power-of-two sizes
// take the radix-2 path; every other size falls back to the direct DFT.
Spectrum fft(const std::vector<double>& x);

// Inverse DFT of a conjugate-symmetric spectrum back to a real signal. The
// imaginary residue is discarded after the symmetry check; asymmetry beyond
// 1e-6 (relative to the largest bin magnitude) throws SpectrumError unless
// allow_asymmetric is set.
std::vector<double> ifft(const Spectrum& spectrum, bool allow_asymmetric = false);

// In-place complex transform used by both directions. The inverse includes
// the 1/d scaling.
void fft_complex_inplace(std::vector<std::complex<double>>& a, bool inverse);

bool is_power_of_two(std::size_t n);

// Replace the magnitudes of bins 0..K-1 with `mags`, keeping the original
// phases (an exactly-zero bin gets phase 0), mirror bins 1..K-1 onto
// d-1..d-K+1 for conjugate symmetry, and pass bins K..d-K through
// untouched. K = mags.size() must be in [1, d/2].
Spectrum build_fused_spectrum(const Spectrum& original,
                              const std::vector<double>& mags);

}  // namespace opinionxf
