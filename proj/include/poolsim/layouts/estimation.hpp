// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <cstdint>
#include <vector>

#include "poolsim/layouts/plan.hpp"

namespace poolsim {

/// Subcarriers handled per core and round by the estimation kernels.
struct EstimationShape {
    std::uint32_t beams = 0;
    std::uint32_t users = 0;
    std::uint32_t pilots = 1;
    std::uint32_t subcarriers = 0;
};

/// Words one subcarrier occupies in its core's banks.
constexpr std::uint32_t che_words(const EstimationShape& s) { return s.pilots * (s.beams + 1); }
constexpr std::uint32_t ne_words(const EstimationShape& s) {
    return s.pilots * (s.beams + s.users) + s.beams * s.users + 1;
}

/// Largest number of subcarriers each core can hold for a kernel needing `words`
/// per subcarrier.
inline std::uint32_t subcarriers_per_core(const ClusterTopology& t, std::uint32_t words) {
    const std::uint32_t rows = t.words_per_bank - t.interleaved_rows - 1;
    return 4 * rows / words;
}

/// Subcarrier sc and everything it needs live in the banks of core
/// cores[sc % cores.size()]; per-core lists fill the four banks round-robin.
struct EstimationLayout {
    LayoutPlan plan;
    EstimationShape shape;
    std::vector<CoreId> cores;

    /// Pilot observation y_p[b][sc]; CHE overwrites it with the estimate.
    LogicalId y(std::uint32_t p, std::uint32_t b, std::uint32_t sc) const {
        return plan.array("y").first + (sc * shape.pilots + p) * shape.beams + b;
    }
    /// Pilot symbol of user l (CHE only uses l == sc mod users).
    LogicalId x(std::uint32_t p, std::uint32_t l, std::uint32_t sc) const {
        return plan.array("x").first + (sc * shape.pilots + p) * shape.users + l;
    }
    LogicalId h(std::uint32_t b, std::uint32_t l, std::uint32_t sc) const {
        return plan.array("h").first + (sc * shape.beams + b) * shape.users + l;
    }
    LogicalId residual(std::uint32_t sc) const { return plan.array("residual").first + sc; }
};

namespace detail {

inline EstimationLayout estimation_arrays(const std::string& kernel, const EstimationShape& s, const ClusterTopology& t,
                                          const std::vector<CoreId>& cores, bool with_h) {
    require(s.beams > 0 && s.users > 0 && s.pilots > 0 && s.subcarriers > 0 && !cores.empty(),
            ErrorKind::InvalidArgument, kernel + " needs a non-empty shape");
    EstimationLayout out{LayoutPlan(kernel, t.num_cores()), s, cores};
    LayoutPlan& plan = out.plan;
    plan.add_array("y", s.subcarriers * s.pilots * s.beams);
    plan.add_array("x", s.subcarriers * s.pilots * s.users);
    if (with_h) {
        plan.add_array("h", s.subcarriers * s.beams * s.users);
        plan.add_array("residual", s.subcarriers);
    }
    const auto nc = static_cast<std::uint32_t>(cores.size());
    const std::uint32_t per_core = (s.subcarriers + nc - 1) / nc;
    const std::uint32_t words = with_h ? ne_words(s) : s.pilots * (s.beams + s.users);
    MemoryAllocator alloc(t);
    const std::vector<std::uint32_t> banks = alloc.banks_of(cores);
    const std::uint32_t base = alloc.rows(banks, (per_core * words + 3) / 4);
    std::vector<std::uint32_t> used(nc, 0);
    auto put = [&](std::uint32_t sc, LogicalId id) {
        const std::uint32_t k = sc % nc;
        const std::uint32_t w = used[k]++;
        plan.place(id, t.physical(t.local_bank(cores[k], w % 4), base + w / 4));
    };
    for (std::uint32_t sc = 0; sc < s.subcarriers; ++sc) {
        for (std::uint32_t p = 0; p < s.pilots; ++p) {
            for (std::uint32_t b = 0; b < s.beams; ++b) put(sc, out.y(p, b, sc));
            for (std::uint32_t l = 0; l < s.users; ++l) put(sc, out.x(p, l, sc));
        }
        if (with_h) {
            for (std::uint32_t b = 0; b < s.beams; ++b)
                for (std::uint32_t l = 0; l < s.users; ++l) put(sc, out.h(b, l, sc));
            put(sc, out.residual(sc));
        }
    }
    return out;
}

} // namespace detail

/// Least-squares estimate on the pilot comb: y_p[b][sc] /= x_p[sc mod users][sc],
/// in place, four beams at a time.
inline EstimationLayout che_layout(const EstimationShape& s, const ClusterTopology& t, const std::vector<CoreId>& cores) {
    EstimationLayout out = detail::estimation_arrays("che", s, t, cores, false);
    LayoutPlan& plan = out.plan;
    const auto nc = static_cast<std::uint32_t>(cores.size());
    for (std::uint32_t sc = 0; sc < s.subcarriers; ++sc) {
        const CoreId core = cores[sc % nc];
        for (std::uint32_t p = 0; p < s.pilots; ++p) {
            plan.load(core, 0, out.x(p, sc % s.users, sc), 8);
            for (std::uint32_t b0 = 0; b0 < s.beams; b0 += 4) {
                const std::uint32_t cnt = std::min(4u, s.beams - b0);
                for (std::uint32_t q = 0; q < cnt; ++q) plan.load(core, 0, out.y(p, b0 + q, sc), static_cast<std::uint8_t>(q));
                for (std::uint32_t q = 0; q < cnt; ++q) {
                    const auto r = static_cast<std::uint8_t>(q);
                    plan.compute(core, 0, MicroOp::compute(Opcode::Div, r, r, 8));
                }
                for (std::uint32_t q = 0; q < cnt; ++q) plan.store(core, 0, out.y(p, b0 + q, sc), static_cast<std::uint8_t>(q));
            }
        }
    }
    plan.sync(0, cores);
    return out;
}

/// Per-subcarrier residual power sum_p sum_b |y_p[b] - H x_p|^2 accumulated in
/// float, written to residual[sc]. The cross-subcarrier total is left to the host.
inline EstimationLayout ne_layout(const EstimationShape& s, const ClusterTopology& t, const std::vector<CoreId>& cores) {
    require(s.users <= 16, ErrorKind::InvalidArgument, "noise estimation keeps at most 16 users in registers");
    EstimationLayout out = detail::estimation_arrays("ne", s, t, cores, true);
    LayoutPlan& plan = out.plan;
    const auto nc = static_cast<std::uint32_t>(cores.size());
    constexpr std::uint8_t acc = 28;
    for (std::uint32_t sc = 0; sc < s.subcarriers; ++sc) {
        const CoreId core = cores[sc % nc];
        plan.compute(core, 0, MicroOp::constant(acc, 0.0f));
        for (std::uint32_t p = 0; p < s.pilots; ++p) {
            for (std::uint32_t l = 0; l < s.users; ++l) plan.load(core, 0, out.x(p, l, sc), static_cast<std::uint8_t>(12 + l));
            // beams in pairs; each pair's loads are issued before its arithmetic
            for (std::uint32_t b0 = 0; b0 < s.beams; b0 += 2) {
                const std::uint32_t nb = std::min(2u, s.beams - b0);
                for (std::uint32_t q = 0; q < nb; ++q) plan.load(core, 0, out.y(p, b0 + q, sc), static_cast<std::uint8_t>(q));
                for (std::uint32_t l0 = 0; l0 < s.users; l0 += 4) {
                    const std::uint32_t nl = std::min(4u, s.users - l0);
                    for (std::uint32_t q = 0; q < nb; ++q)
                        for (std::uint32_t l = 0; l < nl; ++l)
                            plan.load(core, 0, out.h(b0 + q, l0 + l, sc), static_cast<std::uint8_t>(4 + 4 * q + l));
                    for (std::uint32_t l = 0; l < nl; ++l)
                        for (std::uint32_t q = 0; q < nb; ++q) {
                            const auto e = static_cast<std::uint8_t>(2 + q);
                            const auto hr = static_cast<std::uint8_t>(4 + 4 * q + l);
                            const auto xr = static_cast<std::uint8_t>(12 + l0 + l);
                            plan.compute(core, 0,
                                         l0 + l == 0 ? MicroOp::compute(Opcode::Mul, e, hr, xr)
                                                     : MicroOp::compute(Opcode::Mac, e, e, hr, xr));
                        }
                }
                for (std::uint32_t q = 0; q < nb; ++q) {
                    const auto e = static_cast<std::uint8_t>(2 + q);
                    plan.compute(core, 0, MicroOp::compute(Opcode::Sub, e, static_cast<std::uint8_t>(q), e));
                }
                for (std::uint32_t q = 0; q < nb; ++q)
                    plan.compute(core, 0, MicroOp::compute(Opcode::AccNorm2, acc, acc, static_cast<std::uint8_t>(2 + q)));
            }
        }
        plan.store(core, 0, out.residual(sc), acc);
    }
    plan.sync(0, cores);
    return out;
}

} // namespace poolsim
