// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "poolsim/error.hpp"
#include "poolsim/numerics/complex.hpp"
#include "poolsim/numerics/containers.hpp"

namespace poolsim {

inline constexpr double kPilotTolerance = 1e-12;

/// User whose pilot occupies subcarrier `sc` of a pilot symbol (interleaved comb).
constexpr std::size_t comb_user(std::size_t sc, std::size_t n_users) { return sc % n_users; }

/// Least-squares channel estimate on a block-type pilot symbol.
///
/// `y_pilot` is N_B x N_SC, `x_pilot` is N_L x N_SC. Subcarrier sc carries the
/// pilot of user sc mod N_L only, so entry (b, sc) of the result is the estimate
/// of H[b][sc mod N_L] at that subcarrier: Y[b][sc] / X[l][sc].
inline ComplexMatrix channel_estimate_ls(const ComplexMatrix& y_pilot, const ComplexMatrix& x_pilot) {
    require(y_pilot.cols() == x_pilot.cols(), ErrorKind::DimensionMismatch, "pilot grids differ in subcarriers");
    const std::size_t n_users = x_pilot.rows();
    ComplexMatrix h(y_pilot.rows(), y_pilot.cols());
    for (std::size_t sc = 0; sc < y_pilot.cols(); ++sc) {
        const cf32 pilot = x_pilot(comb_user(sc, n_users), sc);
        if (std::abs(pilot) < kPilotTolerance) fail(ErrorKind::PilotZero, "pilot at subcarrier " + std::to_string(sc));
        for (std::size_t b = 0; b < y_pilot.rows(); ++b) h(b, sc) = cx::div(y_pilot(b, sc), pilot);
    }
    return h;
}

/// Residual power of one pilot resource column: sum_b |y_b - sum_l H[b][l] x_l|^2,
/// accumulated over beams in ascending order.
inline float residual_power(std::span<const cf32> y, const ComplexMatrix& h, std::span<const cf32> x, float acc = 0.0f) {
    for (std::size_t b = 0; b < h.rows(); ++b) {
        cf32 expect = cx::mul(h(b, 0), x[0]);
        for (std::size_t l = 1; l < h.cols(); ++l) expect = cx::mac(expect, h(b, l), x[l]);
        acc += cx::norm2(cx::sub(y[b], expect));
    }
    return acc;
}

/// Mean residual power over all pilot resource elements (zero-lag autocorrelation).
///
/// `y_pilots[p]` is N_B x N_SC, `x_pilots[p]` is N_L x N_SC and `h_hat[sc]` is the
/// N_B x N_L channel estimate of subcarrier sc. Per-subcarrier sums are float;
/// the cross-subcarrier total is double.
inline NoiseVariance noise_variance_estimate(std::span<const ComplexMatrix> y_pilots, std::span<const ComplexMatrix> h_hat,
                                             std::span<const ComplexMatrix> x_pilots) {
    require(!y_pilots.empty() && y_pilots.size() == x_pilots.size(), ErrorKind::DimensionMismatch,
            "pilot symbol counts differ");
    const std::size_t nb = y_pilots.front().rows();
    const std::size_t nsc = y_pilots.front().cols();
    require(h_hat.size() == nsc, ErrorKind::DimensionMismatch, "one channel matrix per subcarrier required");
    for (std::size_t p = 0; p < y_pilots.size(); ++p)
        require(y_pilots[p].rows() == nb && y_pilots[p].cols() == nsc && x_pilots[p].cols() == nsc,
                ErrorKind::DimensionMismatch, "pilot grid shapes differ");

    std::vector<cf32> ycol(nb);
    std::vector<cf32> xcol(x_pilots.front().rows());
    double total = 0.0;
    for (std::size_t sc = 0; sc < nsc; ++sc) {
        const ComplexMatrix& h = h_hat[sc];
        require(h.rows() == nb && h.cols() == xcol.size(), ErrorKind::DimensionMismatch, "channel matrix shape");
        float acc = 0.0f;
        for (std::size_t p = 0; p < y_pilots.size(); ++p) {
            for (std::size_t b = 0; b < nb; ++b) ycol[b] = y_pilots[p](b, sc);
            for (std::size_t l = 0; l < xcol.size(); ++l) xcol[l] = x_pilots[p](l, sc);
            acc = residual_power(ycol, h, xcol, acc);
        }
        total += acc;
    }
    return NoiseVariance(total / static_cast<double>(nb * nsc * y_pilots.size()));
}

} // namespace poolsim
