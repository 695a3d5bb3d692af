// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "poolsim/numerics/containers.hpp"

namespace poolsim::testing {

inline std::vector<cf32> random_values(std::size_t n, std::uint64_t seed, float scale = 1.0f) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, scale);
    std::vector<cf32> v(n);
    for (auto& x : v) x = cf32(dist(rng), dist(rng));
    return v;
}

inline ComplexVector random_vector(std::size_t n, std::uint64_t seed) { return ComplexVector(random_values(n, seed)); }

inline ComplexMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, float scale = 1.0f) {
    return ComplexMatrix(rows, cols, random_values(rows * cols, seed, scale));
}

/// A A^H + I, Hermitian positive definite.
inline ComplexMatrix random_hpd(std::size_t n, std::uint64_t seed) {
    const ComplexMatrix a = random_matrix(n, n, seed);
    ComplexMatrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            cf64 acc = i == j ? 1.0 : 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += cf64(a(i, k)) * std::conj(cf64(a(j, k)));
            g(i, j) = cf32(acc);
            g(j, i) = std::conj(cf32(acc));
        }
    for (std::size_t i = 0; i < n; ++i) g(i, i) = cf32(g(i, i).real(), 0.0f);
    g.set_form(MatrixForm::Hermitian);
    return g;
}

} // namespace poolsim::testing
