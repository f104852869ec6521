#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "spectrack/errors.hpp"

namespace spectrack {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 Cooley-Tukey, decimation in time.
/// Twiddles are tabulated per call from direct angle evaluation, which
/// keeps the transform pure and accurate to ~1e-15 relative.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (!is_power_of_two(n)) throw SizeError("fft: length must be a power of two");
    if (n == 1) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    constexpr double kTwoPi = 6.283185307179586476925286766559;
    std::vector<std::complex<double>> roots(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        double ang = -kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        roots[k] = {std::cos(ang), std::sin(ang)};
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        const std::size_t half = len / 2;
        for (std::size_t base = 0; base < n; base += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const std::complex<double> u = a[base + k];
                const std::complex<double> v = a[base + k + half] * roots[k * stride];
                a[base + k] = u + v;
                a[base + k + half] = u - v;
            }
        }
    }
}

} // namespace spectrack
