// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "poolsim/error.hpp"
#include "poolsim/numerics/fft.hpp"

namespace poolsim {

enum class Stage { OfdmDemod, Beamforming, ChannelEstimation, NoiseEstimation, Mimo };

inline constexpr std::array<Stage, 5> kStages{Stage::OfdmDemod, Stage::Beamforming, Stage::ChannelEstimation,
                                              Stage::NoiseEstimation, Stage::Mimo};

constexpr std::string_view stage_name(Stage s) {
    switch (s) {
    case Stage::OfdmDemod: return "OFDM-dem";
    case Stage::Beamforming: return "BF";
    case Stage::ChannelEstimation: return "CHE";
    case Stage::NoiseEstimation: return "NE";
    case Stage::Mimo: return "MIMO";
    }
    return "?";
}

enum class Beamformer { Random, Identity };

/// One PUSCH slot of the uplink use case.
struct UseCaseConfig {
    std::uint32_t n_sc = 3276;    // active subcarriers
    std::uint32_t n_fft = 4096;
    std::uint32_t n_symb = 14;
    std::uint32_t n_pilot = 2;
    std::uint32_t n_data = 12;
    std::uint32_t n_r = 64;       // receive antennas
    std::uint32_t n_b = 32;       // beams
    std::uint32_t n_l = 4;        // users
    double sigma2_true = 0.01;
    std::uint64_t seed = 1;
    /// Subcarriers over which the channel stays constant (rounded up to a
    /// multiple of the user count).
    std::uint32_t coherence_sc = 12;
    Beamformer beamformer = Beamformer::Random;

    void validate() const {
        require(n_sc > 0 && n_symb > 0 && n_r > 0 && n_b > 0 && n_l > 0 && coherence_sc > 0, ErrorKind::ConfigError,
                "use-case dimensions must be positive");
        require(n_pilot + n_data == n_symb, ErrorKind::ConfigError, "n_pilot + n_data must equal n_symb");
        require(n_pilot >= 1, ErrorKind::ConfigError, "at least one pilot symbol is required");
        require(n_l <= n_b && n_b <= n_r, ErrorKind::ConfigError, "need n_l <= n_b <= n_r");
        require(n_fft >= 4 && is_power_of_four(n_fft), ErrorKind::ConfigError, "n_fft must be a power of 4");
        require(n_fft >= n_sc, ErrorKind::ConfigError, "n_fft must be at least n_sc");
        require(n_sc >= n_l, ErrorKind::ConfigError, "need at least one subcarrier per user");
        require(sigma2_true >= 0.0 && std::isfinite(sigma2_true), ErrorKind::ConfigError, "sigma2_true must be >= 0");
    }

    bool operator==(const UseCaseConfig&) const = default;
};

/// floor(log_base(n)) for integer bases, exact on powers.
constexpr std::uint64_t ilog(std::uint64_t n, std::uint64_t base) {
    std::uint64_t k = 0;
    while (n >= base) {
        n /= base;
        ++k;
    }
    return k;
}

/// Complex MACs of a stage. The FFT term uses log_base(N_FFT); the cubic MIMO
/// term is summed over the slot before the division by 3.
inline std::uint64_t kernel_macs(Stage stage, const UseCaseConfig& c, std::uint32_t log_base = 4) {
    require(log_base >= 2, ErrorKind::InvalidArgument, "log base must be at least 2");
    const std::uint64_t nl = c.n_l;
    switch (stage) {
    case Stage::OfdmDemod: return std::uint64_t{c.n_symb} * c.n_r * c.n_fft * ilog(c.n_fft, log_base);
    case Stage::Beamforming: return std::uint64_t{c.n_symb} * c.n_sc * c.n_r * c.n_b;
    case Stage::Mimo: return std::uint64_t{c.n_data} * c.n_sc * (nl * nl * nl + 6 * nl * nl) / 3;
    case Stage::ChannelEstimation: return std::uint64_t{c.n_pilot} * c.n_sc * c.n_b * nl;
    case Stage::NoiseEstimation: return 2 * std::uint64_t{c.n_pilot} * c.n_sc * c.n_b * nl;
    }
    return 0;
}

/// Share of each stage in the slot's MACs for one user count.
struct Breakdown {
    std::uint32_t n_l = 0;
    std::array<double, 5> fraction{};  // indexed like kStages
    std::uint64_t total_macs = 0;
};

inline std::vector<Breakdown> stage_breakdown(const UseCaseConfig& cfg, const std::vector<std::uint32_t>& users,
                                              std::uint32_t log_base = 4) {
    std::vector<Breakdown> out;
    for (std::uint32_t nl : users) {
        UseCaseConfig c = cfg;
        c.n_l = nl;
        c.validate();
        Breakdown b;
        b.n_l = nl;
        std::array<std::uint64_t, 5> macs{};
        for (std::size_t i = 0; i < kStages.size(); ++i) {
            macs[i] = kernel_macs(kStages[i], c, log_base);
            b.total_macs += macs[i];
        }
        for (std::size_t i = 0; i < kStages.size(); ++i)
            b.fraction[i] = static_cast<double>(macs[i]) / static_cast<double>(b.total_macs);
        out.push_back(b);
    }
    return out;
}

} // namespace poolsim
