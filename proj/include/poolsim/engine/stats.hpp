// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <cstdint>
#include <vector>

namespace poolsim {

/// Cycle accounting of one core. Every simulated cycle falls in exactly one of
/// issued / lsu / raw / wfi / idle, where idle is the tail after the core's last
/// instruction. Instruction-fetch stalls are not modeled and are always zero.
struct CoreStats {
    std::uint64_t issued = 0;
    std::uint64_t lsu = 0;
    std::uint64_t raw = 0;
    std::uint64_t wfi = 0;
    std::uint64_t idle = 0;
    std::uint64_t macs = 0;
    std::uint64_t done_cycle = 0;
    bool active = false;  // had a non-empty program

    std::uint64_t accounted() const noexcept { return issued + lsu + raw + wfi + idle; }
    friend bool operator==(const CoreStats&, const CoreStats&) = default;
};

struct CycleStats {
    std::uint64_t total_cycles = 0;
    std::vector<CoreStats> cores;

    std::uint32_t active_cores() const noexcept {
        std::uint32_t n = 0;
        for (const auto& c : cores) n += c.active ? 1u : 0u;
        return n;
    }

    /// Sums over active cores.
    CoreStats aggregate() const noexcept {
        CoreStats s;
        for (const auto& c : cores) {
            if (!c.active) continue;
            s.issued += c.issued;
            s.lsu += c.lsu;
            s.raw += c.raw;
            s.wfi += c.wfi;
            s.idle += c.idle;
            s.macs += c.macs;
        }
        s.done_cycle = total_cycles;
        s.active = true;
        return s;
    }

    double core_cycles() const noexcept { return static_cast<double>(active_cores()) * static_cast<double>(total_cycles); }

    double ipc() const noexcept {
        const double denom = core_cycles();
        return denom > 0 ? static_cast<double>(aggregate().issued) / denom : 0.0;
    }

    double fraction(std::uint64_t CoreStats::*field) const noexcept {
        const double denom = core_cycles();
        return denom > 0 ? static_cast<double>(aggregate().*field) / denom : 0.0;
    }

    double macs_per_cycle() const noexcept {
        return total_cycles > 0 ? static_cast<double>(aggregate().macs) / static_cast<double>(total_cycles) : 0.0;
    }

    /// issued + lsu + raw + wfi + idle == total_cycles for every core.
    bool accounting_exact() const noexcept {
        for (const auto& c : cores)
            if (c.accounted() != total_cycles) return false;
        return true;
    }

    /// Appends a run that started when this one ended.
    CycleStats& operator+=(const CycleStats& next) {
        if (cores.size() < next.cores.size()) cores.resize(next.cores.size());
        for (std::size_t c = 0; c < cores.size(); ++c) {
            CoreStats& a = cores[c];
            if (c >= next.cores.size()) {
                a.idle += next.total_cycles;
                continue;
            }
            const CoreStats& b = next.cores[c];
            a.issued += b.issued;
            a.lsu += b.lsu;
            a.raw += b.raw;
            a.wfi += b.wfi;
            a.idle += b.idle;
            a.macs += b.macs;
            if (b.active) a.done_cycle = total_cycles + b.done_cycle;
            a.active = a.active || b.active;
        }
        total_cycles += next.total_cycles;
        return *this;
    }

    friend bool operator==(const CycleStats&, const CycleStats&) = default;
};

} // namespace poolsim
