// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "poolsim/error.hpp"
#include "poolsim/numerics/complex.hpp"
#include "poolsim/numerics/containers.hpp"

namespace poolsim {

/// Pivot and diagonal magnitude below which factorizations and solves fail.
inline constexpr double kPivotTolerance = 1e-12;

/// C = A * B. Each output accumulates its products in ascending k.
inline ComplexMatrix mmm(const ComplexMatrix& a, const ComplexMatrix& b) {
    require(a.cols() == b.rows(), ErrorKind::DimensionMismatch,
            "mmm inner dimensions " + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()));
    ComplexMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            cf32 acc = cx::mul(a(i, 0), b(0, j));
            for (std::size_t k = 1; k < a.cols(); ++k) acc = cx::mac(acc, a(i, k), b(k, j));
            c(i, j) = acc;
        }
    return c;
}

/// G = H^H H + sigma2 I, exactly Hermitian with a real diagonal.
inline ComplexMatrix gramian(const ComplexMatrix& h, NoiseVariance sigma2) {
    const std::size_t nb = h.rows();
    const std::size_t nl = h.cols();
    require(nb >= nl, ErrorKind::DimensionMismatch, "gramian needs at least as many rows as columns");
    ComplexMatrix g(nl, nl);
    for (std::size_t i = 0; i < nl; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            cf32 acc = cx::mul_conj(h(0, j), h(0, i));
            for (std::size_t b = 1; b < nb; ++b) acc = cx::add(acc, cx::mul_conj(h(b, j), h(b, i)));
            if (i == j) acc = cf32(acc.real() + static_cast<float>(sigma2.value()), 0.0f);
            g(i, j) = acc;
            g(j, i) = std::conj(acc);
        }
    g.set_form(MatrixForm::Hermitian);
    return g;
}

/// Cholesky-Crout: builds L column by column so that L L^H = G.
inline ComplexMatrix cholesky_crout(const ComplexMatrix& g) {
    require(g.rows() == g.cols(), ErrorKind::DimensionMismatch, "cholesky needs a square matrix");
    const std::size_t n = g.rows();
    ComplexMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        cf32 acc = g(j, j);
        for (std::size_t k = 0; k < j; ++k) acc = cx::msub_conj(acc, l(j, k), l(j, k));
        if (!(acc.real() > kPivotTolerance))
            fail(ErrorKind::NotPositiveDefinite, "pivot " + std::to_string(acc.real()) + " at column " + std::to_string(j));
        const cf32 d = cx::sqrt_real(acc);
        l(j, j) = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            cf32 s = g(i, j);
            for (std::size_t k = 0; k < j; ++k) s = cx::msub_conj(s, l(i, k), l(j, k));
            l(i, j) = cx::div_real(s, d);
        }
    }
    l.set_form(MatrixForm::LowerTriangular);
    return l;
}

/// Forward substitution: L y = b.
inline ComplexVector solve_lower(const ComplexMatrix& l, const ComplexVector& b) {
    const std::size_t n = l.rows();
    require(l.cols() == n && b.size() == n, ErrorKind::DimensionMismatch, "solve_lower dimensions");
    std::vector<cf32> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        require(std::abs(l(i, i)) > kPivotTolerance, ErrorKind::SingularDiagonal, "zero diagonal at " + std::to_string(i));
        cf32 acc = b[i];
        for (std::size_t k = 0; k < i; ++k) acc = cx::msub(acc, l(i, k), y[k]);
        y[i] = cx::div(acc, l(i, i));
    }
    return ComplexVector(std::move(y));
}

/// Backward substitution with the implied upper factor: L^H x = y.
inline ComplexVector solve_upper(const ComplexMatrix& l, const ComplexVector& y) {
    const std::size_t n = l.rows();
    require(l.cols() == n && y.size() == n, ErrorKind::DimensionMismatch, "solve_upper dimensions");
    std::vector<cf32> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        require(std::abs(l(ii, ii)) > kPivotTolerance, ErrorKind::SingularDiagonal, "zero diagonal at " + std::to_string(ii));
        cf32 acc = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) acc = cx::msub_conja(acc, l(k, ii), x[k]);
        x[ii] = cx::div(acc, std::conj(l(ii, ii)));
    }
    return ComplexVector(std::move(x));
}

/// z = H^H y.
inline ComplexVector matched_filter(const ComplexMatrix& h, const ComplexVector& y) {
    require(y.size() == h.rows(), ErrorKind::DimensionMismatch, "matched filter dimensions");
    std::vector<cf32> z(h.cols());
    for (std::size_t l = 0; l < h.cols(); ++l) {
        cf32 acc = cx::mul_conj(y[0], h(0, l));
        for (std::size_t b = 1; b < h.rows(); ++b) acc = cx::add(acc, cx::mul_conj(y[b], h(b, l)));
        z[l] = acc;
    }
    return ComplexVector(std::move(z));
}

/// MMSE estimate x = (H^H H + sigma2 I)^-1 H^H y through a Cholesky factor and
/// two triangular solves.
inline ComplexVector mmse_equalize(const ComplexMatrix& h, const ComplexVector& y, NoiseVariance sigma2) {
    require(y.size() == h.rows(), ErrorKind::DimensionMismatch, "mmse dimensions");
    const ComplexMatrix l = cholesky_crout(gramian(h, sigma2));
    return solve_upper(l, solve_lower(l, matched_filter(h, y)));
}

} // namespace poolsim
