// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "poolsim/layouts/plan.hpp"
#include "poolsim/numerics/fft.hpp"

namespace poolsim {

/// Cores working on one folded FFT: each computes 4 butterflies per stage.
constexpr std::uint32_t fft_cores_per_instance(std::uint32_t n) { return n >= 16 ? n / 16 : 1; }

/// Independent FFTs that fit the cluster side by side, each on a tile-contiguous
/// run of cores.
inline ReplicationPlan fft_replication(std::uint32_t n, const ClusterTopology& t) {
    require(n >= 4 && is_power_of_four(n), ErrorKind::LengthNotPowerOfFour, "FFT length must be a power of 4");
    const std::uint32_t k = fft_cores_per_instance(n);
    require(k <= t.num_cores(), ErrorKind::TooLarge,
            std::to_string(n) + "-point FFT needs " + std::to_string(k) + " cores, cluster has " +
                std::to_string(t.num_cores()));
    ReplicationPlan r;
    r.instances = t.num_cores() / k;
    for (std::uint32_t i = 0; i < r.instances; ++i) {
        std::vector<CoreId> set(k);
        for (std::uint32_t c = 0; c < k; ++c) set[c] = i * k + c;
        r.cores.push_back(std::move(set));
    }
    return r;
}

/// Core (relative to its instance), bank and row of element `e` of the data
/// that stage `stage` reads; stage == log4(n) is the final output.
struct FoldSlot {
    std::uint32_t core = 0;
    std::uint32_t bank = 0;
    std::uint32_t row = 0;
};

inline FoldSlot fold_slot(std::uint32_t n, std::uint32_t stage, std::uint32_t e) {
    const std::uint32_t k = fft_cores_per_instance(n);
    const std::uint32_t stages = log4(n);
    if (stage < stages) {
        const std::uint32_t q = n >> (2 * (stage + 1));
        const std::uint32_t cs = k >> (2 * stage);  // cores sharing one sub-FFT
        if (cs >= 1) {
            const std::uint32_t block = e / (4 * q);
            const std::uint32_t m = (e % (4 * q)) / q;
            const std::uint32_t j = e % q;
            return {block * cs + j % cs, m, j / cs};
        }
    }
    // sub-FFTs of 16 points and below stay inside one core
    return {e / 16, e % 4, (e / 4) % 4};
}

/// Plan for `replication.instances` x `batch` FFTs of length n. Stage s of all
/// batched FFTs runs between the same barriers.
struct FftLayout {
    LayoutPlan plan;
    std::uint32_t n = 0;
    std::uint32_t batch = 1;
    ReplicationPlan replication;
    bool folded = true;
    std::vector<std::pair<LogicalId, cf32>> constants;  // twiddle words

    std::uint32_t stages() const noexcept { return log4(n); }

    /// Element e (natural input index) of FFT (instance, b).
    LogicalId input(std::uint32_t instance, std::uint32_t b, std::uint32_t e) const { return element(instance, b, 0, e); }

    /// Spectrum bin digit_reverse4(e) of FFT (instance, b).
    LogicalId output(std::uint32_t instance, std::uint32_t b, std::uint32_t e) const {
        return element(instance, b, stages(), e);
    }

    LogicalId element(std::uint32_t instance, std::uint32_t b, std::uint32_t stage, std::uint32_t e) const {
        const std::uint32_t buffer = stage % 2;
        const std::uint32_t region = folded ? 16 * fft_cores_per_instance(n) : n;
        std::uint32_t slot = e;
        if (folded) {
            const FoldSlot f = fold_slot(n, stage, e);
            slot = f.core * 16 + f.bank * 4 + f.row;
        }
        return plan.array("data").first + ((instance * batch + b) * 2 + buffer) * region + slot;
    }
};

namespace detail {

// Loads, butterfly arithmetic and outputs in registers 4*u+m for butterfly u.
inline void emit_butterfly(LayoutPlan& plan, CoreId core, std::uint32_t phase, std::uint32_t u,
                           const std::array<LogicalId, 4>& in, const std::array<LogicalId, 3>& tw) {
    for (std::uint8_t m = 0; m < 4; ++m) plan.load(core, phase, in[m], static_cast<std::uint8_t>(16 + m));
    for (std::uint8_t m = 0; m < 3; ++m) plan.load(core, phase, tw[m], static_cast<std::uint8_t>(20 + m));
    const auto o = [u](std::uint32_t m) { return static_cast<std::uint8_t>(4 * u + m); };
    plan.compute(core, phase, MicroOp::compute(Opcode::Add, 23, 16, 18));
    plan.compute(core, phase, MicroOp::compute(Opcode::Sub, 24, 16, 18));
    plan.compute(core, phase, MicroOp::compute(Opcode::Add, 25, 17, 19));
    plan.compute(core, phase, MicroOp::compute(Opcode::Sub, 26, 17, 19));
    plan.compute(core, phase, MicroOp::compute(Opcode::NegI, 26, 26));
    plan.compute(core, phase, MicroOp::compute(Opcode::Add, o(0), 23, 25));
    plan.compute(core, phase, MicroOp::compute(Opcode::Sub, o(2), 23, 25));
    plan.compute(core, phase, MicroOp::compute(Opcode::Add, o(1), 24, 26));
    plan.compute(core, phase, MicroOp::compute(Opcode::Sub, o(3), 24, 26));
    plan.compute(core, phase, MicroOp::compute(Opcode::Mul, o(1), o(1), 20));
    plan.compute(core, phase, MicroOp::compute(Opcode::Mul, o(2), o(2), 21));
    plan.compute(core, phase, MicroOp::compute(Opcode::Mul, o(3), o(3), 22));
}

// Element indices of butterfly u of instance-core k in `stage`, plus its j.
inline std::pair<std::array<std::uint32_t, 4>, std::uint32_t> folded_butterfly(std::uint32_t n, std::uint32_t stage,
                                                                               std::uint32_t k, std::uint32_t u) {
    const std::uint32_t q = n >> (2 * (stage + 1));
    const std::uint32_t cs = fft_cores_per_instance(n) >> (2 * stage);
    std::uint32_t base = 0;
    std::uint32_t j = 0;
    if (cs >= 1) {
        j = k % cs + cs * u;
        base = (k / cs) * 4 * q + j;
    } else {
        base = 4 * (4 * k + u);  // q == 1
    }
    return {{base, base + q, base + 2 * q, base + 3 * q}, j};
}

} // namespace detail

/// Folded FFT plan: every butterfly input sits in a bank of its executing core
/// and results are pushed into the banks of the cores that consume them.
inline FftLayout fft_fold_plan(std::uint32_t n, const ClusterTopology& t, ReplicationPlan replication,
                               std::uint32_t batch = 1, MemoryAllocator* shared_alloc = nullptr) {
    require(n >= 4 && is_power_of_four(n), ErrorKind::LengthNotPowerOfFour, "FFT length must be a power of 4");
    require(batch >= 1, ErrorKind::InvalidArgument, "batch must be positive");
    replication.validate(t);
    const std::uint32_t k = fft_cores_per_instance(n);
    for (const auto& set : replication.cores)
        require(set.size() == k, ErrorKind::TooFewCores,
                std::to_string(n) + "-point FFT instance needs exactly " + std::to_string(k) + " cores");

    FftLayout out{LayoutPlan("fft", t.num_cores()), n, batch, replication, true, {}};
    LayoutPlan& plan = out.plan;
    const std::uint32_t stages = log4(n);
    const std::uint32_t per_core = n >= 16 ? 4 : 1;  // butterflies per core and stage
    const std::uint32_t inst = replication.instances;

    MemoryAllocator local_alloc(t);
    MemoryAllocator& alloc = shared_alloc ? *shared_alloc : local_alloc;
    std::vector<CoreId> all_cores;
    for (const auto& set : replication.cores) all_cores.insert(all_cores.end(), set.begin(), set.end());
    const auto banks = alloc.banks_of(all_cores);
    const std::uint32_t tw_words = stages * per_core * 3;
    const std::uint32_t tw_row = alloc.rows(banks, (tw_words + 3) / 4);
    const std::uint32_t data_row = alloc.rows(banks, 8 * batch);

    const LogicalId data = plan.add_array("data", inst * batch * 2 * 16 * k);
    for (std::uint32_t i = 0; i < inst; ++i)
        for (std::uint32_t b = 0; b < batch; ++b)
            for (std::uint32_t buf = 0; buf < 2; ++buf)
                for (std::uint32_t slot = 0; slot < 16 * k; ++slot) {
                    const CoreId core = replication.cores[i][slot / 16];
                    const std::uint32_t bank = (slot / 4) % 4;
                    const std::uint32_t row = data_row + (b * 2 + buf) * 4 + slot % 4;
                    plan.place(data + ((i * batch + b) * 2 + buf) * 16 * k + slot, t.physical(t.local_bank(core, bank), row));
                }

    const TwiddleTable table(n);
    const LogicalId tw = plan.add_array("twiddle", inst * k * tw_words);
    for (std::uint32_t i = 0; i < inst; ++i)
        for (std::uint32_t c = 0; c < k; ++c)
            for (std::uint32_t w = 0; w < tw_words; ++w) {
                const LogicalId id = tw + (i * k + c) * tw_words + w;
                plan.place(id, t.physical(t.local_bank(replication.cores[i][c], w % 4), tw_row + w / 4));
                const std::uint32_t s = w / (per_core * 3);
                const std::uint32_t u = (w / 3) % per_core;
                const auto [elems, j] = detail::folded_butterfly(n, s, c, u);
                out.constants.emplace_back(id, table.for_butterfly(s, j, w % 3 + 1));
            }

    for (std::uint32_t s = 0; s < stages; ++s) {
        const std::uint32_t cs = k >> (2 * s);
        const std::uint32_t cs_next = k >> (2 * (s + 1));
        for (std::uint32_t i = 0; i < inst; ++i)
            for (std::uint32_t c = 0; c < k; ++c) {
                const CoreId core = replication.cores[i][c];
                // row of the consumer that receives this core's outputs
                const std::uint32_t d = cs >= 1 && cs_next >= 1 ? (c % cs) / cs_next : 0;
                for (std::uint32_t b = 0; b < batch; ++b) {
                    std::array<std::array<LogicalId, 4>, 4> dst{};
                    for (std::uint32_t u = 0; u < per_core; ++u) {
                        const auto [elems, j] = detail::folded_butterfly(n, s, c, u);
                        std::array<LogicalId, 4> in{};
                        std::array<LogicalId, 3> w{};
                        for (std::uint32_t m = 0; m < 4; ++m) {
                            in[m] = out.element(i, b, s, elems[m]);
                            dst[u][m] = out.element(i, b, s + 1, elems[m]);
                        }
                        for (std::uint32_t m = 0; m < 3; ++m) w[m] = tw + (i * k + c) * tw_words + (s * per_core + u) * 3 + m;
                        detail::emit_butterfly(plan, core, s, u, in, w);
                    }
                    // staggered so that no two producers hit one bank in the same slot
                    for (std::uint32_t mm = 0; mm < 4; ++mm)
                        for (std::uint32_t tt = 0; tt < per_core; ++tt) {
                            const std::uint32_t m = (mm + c) % 4;
                            const std::uint32_t u = per_core == 4 ? (tt + d) % 4 : 0;
                            plan.store(core, s, dst[u][m], static_cast<std::uint8_t>(4 * u + m));
                        }
                }
                if (s + 1 < stages && cs > 1 && c % cs == 0) {
                    std::vector<CoreId> block(replication.cores[i].begin() + c, replication.cores[i].begin() + c + cs);
                    plan.sync(s, std::move(block));
                }
            }
    }
    plan.sync(stages - 1, all_cores);
    return out;
}

/// Single-instance folded plan on `cores` (fft_cores_per_instance(n) of them).
inline FftLayout fft_fold_layout(std::uint32_t n, const ClusterTopology& t, std::vector<CoreId> cores) {
    ReplicationPlan r;
    r.instances = 1;
    r.cores.push_back(std::move(cores));
    return fft_fold_plan(n, t, std::move(r));
}

/// Control layout without folding: elements interleaved linearly over banks
/// 0..n-1 and each butterfly executed by the core owning the bank of its first
/// input. Needs n <= number of banks.
inline FftLayout fft_unfolded_layout(std::uint32_t n, const ClusterTopology& t) {
    require(n >= 4 && is_power_of_four(n), ErrorKind::LengthNotPowerOfFour, "FFT length must be a power of 4");
    require(n <= t.num_banks(), ErrorKind::TooLarge, "unfolded layout needs one bank per element");
    FftLayout out{LayoutPlan("fft-unfolded", t.num_cores()), n, 1, {}, false, {}};
    LayoutPlan& plan = out.plan;
    const std::uint32_t stages = log4(n);
    MemoryAllocator alloc(t);
    const LogicalId data = plan.add_array("data", 2 * n);
    for (std::uint32_t buf = 0; buf < 2; ++buf) {
        const std::uint32_t base = alloc.interleaved(t.num_banks());
        for (std::uint32_t e = 0; e < n; ++e) {
            const BankLocation loc = map_address(t, base + e);
            plan.place(data + buf * n + e, t.physical(loc));
        }
    }
    std::vector<CoreId> cores(n / 4 < 1 ? 1 : n / 4);
    for (CoreId c = 0; c < cores.size(); ++c) cores[c] = c;
    out.replication.instances = 1;
    out.replication.cores.push_back(cores);
    const auto banks = alloc.banks_of(cores);
    const std::uint32_t tw_row = alloc.rows(banks, 3 * stages);

    const TwiddleTable table(n);
    const LogicalId tw = plan.add_array("twiddle", static_cast<std::uint32_t>(cores.size()) * stages * 12);
    std::vector<std::uint32_t> used(cores.size());
    for (std::uint32_t s = 0; s < stages; ++s) {
        std::fill(used.begin(), used.end(), 0);
        const std::uint32_t q = n >> (2 * (s + 1));
        for (std::uint32_t base = 0; base < n; base += 4 * q)
            for (std::uint32_t j = 0; j < q; ++j) {
                const std::uint32_t first = base + j;
                const CoreId core = first / 4;
                const std::uint32_t u = used[core]++;
                std::array<LogicalId, 4> in{};
                std::array<LogicalId, 3> w{};
                for (std::uint32_t m = 0; m < 4; ++m) in[m] = data + (s % 2) * n + first + m * q;
                for (std::uint32_t m = 0; m < 3; ++m) {
                    const std::uint32_t word = s * 12 + u * 3 + m;
                    w[m] = tw + core * stages * 12 + word;
                    plan.place(w[m], t.physical(t.local_bank(core, word % 4), tw_row + word / 4));
                    out.constants.emplace_back(w[m], table.for_butterfly(s, j, m + 1));
                }
                detail::emit_butterfly(plan, core, s, u % 4, in, w);
                for (std::uint32_t m = 0; m < 4; ++m)
                    plan.store(core, s, data + ((s + 1) % 2) * n + first + m * q, static_cast<std::uint8_t>(4 * (u % 4) + m));
            }
        plan.sync(s, cores);
    }
    // twiddle slots never used by a core still need a home
    for (std::uint32_t id = 0; id < static_cast<std::uint32_t>(cores.size()) * stages * 12; ++id)
        if (plan.address(tw + id) == kUnplaced) {
            const CoreId core = id / (stages * 12);
            const std::uint32_t word = id % (stages * 12);
            plan.place(tw + id, t.physical(t.local_bank(core, word % 4), tw_row + word / 4));
        }
    return out;
}

} // namespace poolsim
