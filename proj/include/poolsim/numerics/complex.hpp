// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <cmath>
#include <complex>

namespace poolsim {

using cf32 = std::complex<float>;
using cf64 = std::complex<double>;

// Arithmetic primitives shared by the golden kernels and the simulated datapath.
// Both sides must evaluate exactly these expressions so that results agree bit
// for bit; std::complex operator* is avoided because libstdc++ may route it
// through the Annex G helpers.
namespace cx {

inline cf32 add(cf32 a, cf32 b) { return {a.real() + b.real(), a.imag() + b.imag()}; }
inline cf32 sub(cf32 a, cf32 b) { return {a.real() - b.real(), a.imag() - b.imag()}; }

inline cf32 mul(cf32 a, cf32 b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// acc + a*b
inline cf32 mac(cf32 acc, cf32 a, cf32 b) { return add(acc, mul(a, b)); }

// a * conj(b)
inline cf32 mul_conj(cf32 a, cf32 b) {
    return {a.real() * b.real() + a.imag() * b.imag(), a.imag() * b.real() - a.real() * b.imag()};
}

// acc - a*conj(b)
inline cf32 msub_conj(cf32 acc, cf32 a, cf32 b) { return sub(acc, mul_conj(a, b)); }

// acc - a*b
inline cf32 msub(cf32 acc, cf32 a, cf32 b) { return sub(acc, mul(a, b)); }

// acc - conj(a)*b
inline cf32 msub_conja(cf32 acc, cf32 a, cf32 b) { return sub(acc, mul_conj(b, a)); }

// -i * a
inline cf32 neg_i(cf32 a) { return {a.imag(), -a.real()}; }

// a / d for real d stored in the real part of `d`
inline cf32 div_real(cf32 a, cf32 d) { return {a.real() / d.real(), a.imag() / d.real()}; }

// full complex division a / b
inline cf32 div(cf32 a, cf32 b) {
    const float den = b.real() * b.real() + b.imag() * b.imag();
    const cf32 num = mul_conj(a, b);
    return {num.real() / den, num.imag() / den};
}

// sqrt of the real part; imaginary part of the result is zero
inline cf32 sqrt_real(cf32 a) { return {std::sqrt(a.real()), 0.0f}; }

inline float norm2(cf32 a) { return a.real() * a.real() + a.imag() * a.imag(); }

// acc + |a|^2 in the real part
inline cf32 acc_norm2(cf32 acc, cf32 a) { return {acc.real() + norm2(a), acc.imag()}; }

} // namespace cx

} // namespace poolsim
