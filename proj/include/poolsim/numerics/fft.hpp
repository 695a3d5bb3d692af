// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "poolsim/error.hpp"
#include "poolsim/numerics/complex.hpp"
#include "poolsim/numerics/containers.hpp"

namespace poolsim {

constexpr bool is_power_of_four(std::size_t n) {
    if (n == 0 || (n & (n - 1)) != 0) return false;
    // the single set bit must sit at an even position
    return (n & 0x5555555555555555ull) != 0;
}

constexpr unsigned log4(std::size_t n) {
    unsigned s = 0;
    while (n > 1) {
        n >>= 2;
        ++s;
    }
    return s;
}

/// Reverses the base-4 digits of `index` over `digits` digits.
constexpr std::size_t digit_reverse4(std::size_t index, unsigned digits) {
    std::size_t out = 0;
    for (unsigned d = 0; d < digits; ++d) {
        out = (out << 2) | (index & 3u);
        index >>= 2;
    }
    return out;
}

/// Roots of unity e^(-2*pi*i*k/N), k = 0..N-1, for a power-of-four N.
class TwiddleTable {
public:
    explicit TwiddleTable(std::size_t n) : n_(n) {
        require(n >= 4 && is_power_of_four(n), ErrorKind::LengthNotPowerOfFour,
                "twiddle table length must be a power of 4, got " + std::to_string(n));
        factors_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            factors_[k] = cf32(static_cast<float>(std::cos(angle)), static_cast<float>(std::sin(angle)));
        }
    }

    std::size_t n() const noexcept { return n_; }
    unsigned stages() const noexcept { return log4(n_); }
    cf32 operator[](std::size_t k) const noexcept { return factors_[k % n_]; }
    std::span<const cf32> factors() const noexcept { return factors_; }

    /// Twiddle applied to output `m` (1..3) of butterfly `j` in DIF stage `stage`.
    cf32 for_butterfly(unsigned stage, std::size_t j, unsigned m) const noexcept {
        const std::size_t stride = std::size_t{1} << (2 * stage);
        return factors_[(m * j * stride) % n_];
    }

private:
    std::size_t n_;
    std::vector<cf32> factors_;
};

/// Radix-4 DIF butterfly, outputs before digit reversal. The simulated FFT lowers
/// to exactly this operation sequence.
inline std::array<cf32, 4> radix4_butterfly(cf32 a0, cf32 a1, cf32 a2, cf32 a3, cf32 w1, cf32 w2, cf32 w3) {
    const cf32 t0 = cx::add(a0, a2);
    const cf32 t1 = cx::sub(a0, a2);
    const cf32 t2 = cx::add(a1, a3);
    const cf32 t3 = cx::neg_i(cx::sub(a1, a3));
    const cf32 y0 = cx::add(t0, t2);
    const cf32 y2 = cx::sub(t0, t2);
    const cf32 y1 = cx::add(t1, t3);
    const cf32 y3 = cx::sub(t1, t3);
    return {y0, cx::mul(y1, w1), cx::mul(y2, w2), cx::mul(y3, w3)};
}

/// In-place DIF stages; leaves the spectrum in base-4 digit-reversed order.
inline void fft_radix4_dif_inplace(std::span<cf32> x, const TwiddleTable& tw) {
    const std::size_t n = x.size();
    require(n == tw.n(), ErrorKind::LengthNotPowerOfFour,
            "input length " + std::to_string(n) + " does not match twiddle table " + std::to_string(tw.n()));
    const unsigned stages = tw.stages();
    for (unsigned s = 0; s < stages; ++s) {
        const std::size_t q = n >> (2 * (s + 1));
        for (std::size_t base = 0; base < n; base += 4 * q) {
            for (std::size_t j = 0; j < q; ++j) {
                const auto y = radix4_butterfly(x[base + j], x[base + j + q], x[base + j + 2 * q], x[base + j + 3 * q],
                                                tw.for_butterfly(s, j, 1), tw.for_butterfly(s, j, 2),
                                                tw.for_butterfly(s, j, 3));
                for (unsigned m = 0; m < 4; ++m) x[base + j + m * q] = y[m];
            }
        }
    }
}

/// Forward DFT of a power-of-four length vector, natural frequency order.
inline ComplexVector fft_radix4(const ComplexVector& x, const TwiddleTable& tw) {
    require(is_power_of_four(x.size()) && x.size() >= 4, ErrorKind::LengthNotPowerOfFour,
            "FFT length must be a power of 4, got " + std::to_string(x.size()));
    std::vector<cf32> work(x.begin(), x.end());
    fft_radix4_dif_inplace(work, tw);
    const unsigned digits = tw.stages();
    std::vector<cf32> out(work.size());
    for (std::size_t p = 0; p < work.size(); ++p) out[digit_reverse4(p, digits)] = work[p];
    return ComplexVector(std::move(out));
}

/// Inverse DFT with 1/N scaling, built on the forward transform.
inline ComplexVector ifft_radix4(const ComplexVector& spectrum, const TwiddleTable& tw) {
    std::vector<cf32> conj_in(spectrum.size());
    for (std::size_t k = 0; k < spectrum.size(); ++k) conj_in[k] = std::conj(spectrum[k]);
    const ComplexVector f = fft_radix4(ComplexVector(std::move(conj_in)), tw);
    const float scale = 1.0f / static_cast<float>(spectrum.size());
    std::vector<cf32> out(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = std::conj(f[k]) * scale;
    return ComplexVector(std::move(out));
}

} // namespace poolsim
