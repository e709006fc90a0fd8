#pragma once

#include <complex>
#include <span>

namespace rasc::fft {

// Real forward DFT: out[k] = sum_n in[n] e^{-2 pi i k n / N}, k = 0..N/2.
void rfft(std::span<const double> in, std::span<std::complex<double>> out);

// Hermitian inverse without the 1/N factor. Imaginary parts of the DC and
// Nyquist bins are ignored.
void irfft_unnormalized(std::span<const std::complex<double>> in, std::span<double> out);

}  // namespace rasc::fft
