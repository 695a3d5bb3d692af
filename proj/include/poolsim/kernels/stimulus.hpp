// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "poolsim/numerics/containers.hpp"

namespace poolsim {

/// Independent, reproducible generator for (seed, stream).
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

/// Circularly-symmetric complex Gaussian samples with E|z|^2 = variance.
inline std::vector<cf32> complex_gaussian(std::size_t n, std::mt19937_64& rng, double variance = 1.0) {
    std::normal_distribution<double> dist(0.0, std::sqrt(variance / 2.0));
    std::vector<cf32> v(n);
    for (auto& x : v) {
        const double re = dist(rng);
        x = cf32(static_cast<float>(re), static_cast<float>(dist(rng)));
    }
    return v;
}

inline ComplexMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double variance = 1.0) {
    return ComplexMatrix(rows, cols, complex_gaussian(rows * cols, rng, variance));
}

/// A A^H / n + I in double, rounded once; exactly Hermitian with a real diagonal.
inline ComplexMatrix random_hpd_matrix(std::size_t n, std::mt19937_64& rng) {
    const ComplexMatrix a = gaussian_matrix(n, n, rng);
    ComplexMatrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            cf64 acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += cf64(a(i, k)) * std::conj(cf64(a(j, k)));
            acc /= static_cast<double>(n);
            if (i == j) acc = cf64(acc.real() + 1.0, 0.0);
            g(i, j) = cf32(acc);
            g(j, i) = std::conj(cf32(acc));
        }
    g.set_form(MatrixForm::Hermitian);
    return g;
}

/// Unit-modulus QPSK symbol.
inline cf32 qpsk(std::mt19937_64& rng) {
    const float a = static_cast<float>(1.0 / std::sqrt(2.0));
    const auto bits = rng();
    return cf32((bits & 1) ? -a : a, (bits & 2) ? -a : a);
}

} // namespace poolsim
