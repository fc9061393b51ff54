#pragma once

#include <complex>
#include <vector>

namespace specswap {

// In-place radix-2 decimation-in-time transform. Size must be a power of
// two. sign = -1 forward, +1 inverse (inverse is unscaled).
void fft_pow2(std::vector<std::complex<double>>& data, int sign);

// |DFT|^2 of a real series, forward convention. Size must be a power of two.
std::vector<double> power_spectrum(const std::vector<double>& series);

}  // namespace specswap
