#include "specswap/fft.hpp"

#include <cmath>
#include <stdexcept>

#include "specswap/errors.hpp"
#include "specswap/units.hpp"

namespace specswap {

void fft_pow2(std::vector<std::complex<double>>& data, int sign) {
    std::size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        throw NumericError("fft size must be a power of two");
    }
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * kTwoPi / static_cast<double>(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = data[i + k];
                std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::vector<double> power_spectrum(const std::vector<double>& series) {
    std::vector<std::complex<double>> buf(series.begin(), series.end());
    fft_pow2(buf, -1);
    std::vector<double> out(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) out[i] = std::norm(buf[i]);
    return out;
}

}  // namespace specswap
