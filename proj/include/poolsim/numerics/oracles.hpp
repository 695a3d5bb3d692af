// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

// Double-precision reference computations. These deliberately share no code
// with the float kernels they are used to check.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "poolsim/numerics/complex.hpp"
#include "poolsim/numerics/containers.hpp"

namespace poolsim::oracle {

/// O(N^2) DFT in double precision, natural order.
inline std::vector<cf64> dft(std::span<const cf64> x) {
    const std::size_t n = x.size();
    std::vector<cf64> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cf64 acc{};
        for (std::size_t j = 0; j < n; ++j) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
            acc += x[j] * cf64(std::cos(angle), std::sin(angle));
        }
        out[k] = acc;
    }
    return out;
}

inline std::vector<cf64> widen(std::span<const cf32> x) { return {x.begin(), x.end()}; }

/// dft() applied to a float vector; result narrowed to float for container use.
inline ComplexVector dft_oracle(const ComplexVector& x) {
    const auto wide = dft(widen(x.span()));
    std::vector<cf32> out(wide.size());
    for (std::size_t k = 0; k < wide.size(); ++k) out[k] = cf32(wide[k]);
    return ComplexVector(std::move(out));
}

/// ||a - b|| / ||b|| in double precision.
template <class A, class B>
double relative_error(const A& a, const B& b) {
    double num = 0.0;
    double den = 0.0;
    auto ia = std::begin(a);
    for (auto ib = std::begin(b); ib != std::end(b); ++ia, ++ib) {
        const cf64 va(*ia);
        const cf64 vb(*ib);
        num += std::norm(va - vb);
        den += std::norm(vb);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Naive triple loop in double.
inline std::vector<cf64> mmm(const ComplexMatrix& a, const ComplexMatrix& b) {
    std::vector<cf64> c(a.rows() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            cf64 acc{};
            for (std::size_t k = 0; k < a.cols(); ++k) acc += cf64(a(i, k)) * cf64(b(k, j));
            c[i * b.cols() + j] = acc;
        }
    return c;
}

/// ||L L^H - G||_F / ||G||_F in double.
inline double reconstruction_error(const ComplexMatrix& l, const ComplexMatrix& g) {
    const std::size_t n = g.rows();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cf64 acc{};
            for (std::size_t k = 0; k < n; ++k) acc += cf64(l(i, k)) * std::conj(cf64(l(j, k)));
            num += std::norm(acc - cf64(g(i, j)));
            den += std::norm(cf64(g(i, j)));
        }
    return std::sqrt(num / den);
}

/// Solves (H^H H + sigma2 I) x = H^H y by Gaussian elimination with partial
/// pivoting in double precision.
inline std::vector<cf64> normal_equations(const ComplexMatrix& h, std::span<const cf32> y, double sigma2) {
    const std::size_t nb = h.rows();
    const std::size_t nl = h.cols();
    std::vector<std::vector<cf64>> a(nl, std::vector<cf64>(nl + 1));
    for (std::size_t i = 0; i < nl; ++i) {
        for (std::size_t j = 0; j < nl; ++j) {
            cf64 acc{};
            for (std::size_t b = 0; b < nb; ++b) acc += std::conj(cf64(h(b, i))) * cf64(h(b, j));
            a[i][j] = acc + (i == j ? sigma2 : 0.0);
        }
        cf64 rhs{};
        for (std::size_t b = 0; b < nb; ++b) rhs += std::conj(cf64(h(b, i))) * cf64(y[b]);
        a[i][nl] = rhs;
    }
    for (std::size_t c = 0; c < nl; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < nl; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = c + 1; r < nl; ++r) {
            const cf64 f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= nl; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::vector<cf64> x(nl);
    for (std::size_t i = nl; i-- > 0;) {
        cf64 acc = a[i][nl];
        for (std::size_t k = i + 1; k < nl; ++k) acc -= a[i][k] * x[k];
        x[i] = acc / a[i][i];
    }
    return x;
}

} // namespace poolsim::oracle
