// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "poolsim/layouts/plan.hpp"

namespace poolsim {

struct MmmOptions {
    /// Throw DimensionTooSmall instead of flagging when cores outnumber windows.
    bool strict = false;
    /// Rotate A-row and B-column load order per core. Off only for experiments.
    bool stagger = true;
    /// Relabels row blocks (entry x replaces block x). Empty keeps the identity.
    std::vector<std::uint32_t> row_block_order;
};

/// A row block with the column blocks one core computes for it, in visiting
/// order, and the rotations applied to its A-row and B-column load order.
struct MmmTask {
    std::uint32_t row_block = 0;
    std::vector<std::uint32_t> col_blocks;
    std::uint32_t row_rotation = 0;
    std::uint32_t col_rotation = 0;
};

struct MmmAssignment {
    CoreId core = 0;
    std::vector<MmmTask> tasks;
};

struct MmmLayout {
    LayoutPlan plan;
    std::uint32_t m = 0, n = 0, p = 0;     // requested sizes
    std::uint32_t mp = 0, pp = 0;          // padded to multiples of 4
    std::vector<MmmAssignment> assignment; // cores with work

    LogicalId a(std::uint32_t i, std::uint32_t k) const { return plan.array("A").first + i * n + k; }
    LogicalId b(std::uint32_t k, std::uint32_t j) const { return plan.array("B").first + k * pp + j; }
    LogicalId c(std::uint32_t i, std::uint32_t j) const { return plan.array("C").first + i * pp + j; }
};

/// C = A * B with A, B, C interleaved over the whole cluster. Each core computes
/// 4x4 output windows: per inner index it loads 4 elements of A and 4 of B and
/// issues 16 complex MACs. Tile-mates read A rows in rotated order, and cores
/// sharing the same column blocks start their walk at different blocks and
/// rotate their B columns, so simultaneous loads land in distinct banks.
inline MmmLayout mmm_schedule(std::uint32_t m, std::uint32_t n, std::uint32_t p, const ClusterTopology& t,
                              const std::vector<CoreId>& cores, MmmOptions opt = {}, MemoryAllocator* shared_alloc = nullptr) {
    require(m > 0 && n > 0 && p > 0, ErrorKind::InvalidArgument, "matrix dimensions must be positive");
    require(!cores.empty(), ErrorKind::TooFewCores, "mmm needs at least one core");
    const std::uint32_t mp = (m + 3) / 4 * 4;
    const std::uint32_t pp = (p + 3) / 4 * 4;
    const std::uint32_t rblocks = mp / 4;
    const std::uint32_t cblocks = pp / 4;
    const auto ncores = static_cast<std::uint32_t>(cores.size());
    std::vector<std::uint32_t> relabel = opt.row_block_order;
    if (relabel.empty()) {
        relabel.resize(rblocks);
        for (std::uint32_t i = 0; i < rblocks; ++i) relabel[i] = i;
    }
    {
        std::vector<std::uint32_t> sorted = relabel;
        std::sort(sorted.begin(), sorted.end());
        bool perm = sorted.size() == rblocks;
        for (std::uint32_t i = 0; perm && i < rblocks; ++i) perm = sorted[i] == i;
        require(perm, ErrorKind::InvalidArgument, "row_block_order must permute the row blocks");
    }

    MmmLayout out{LayoutPlan("mmm", t.num_cores()), m, n, p, mp, pp, {}};
    LayoutPlan& plan = out.plan;
    if (rblocks * cblocks < ncores) {
        require(!opt.strict, ErrorKind::DimensionTooSmall,
                std::to_string(rblocks * cblocks) + " windows for " + std::to_string(ncores) + " cores");
        plan.flags().push_back("dimension_too_small");
    }

    MemoryAllocator local_alloc(t);
    MemoryAllocator& alloc = shared_alloc ? *shared_alloc : local_alloc;
    const LogicalId ida = plan.add_array("A", mp * n);
    const LogicalId idb = plan.add_array("B", n * pp);
    const LogicalId idc = plan.add_array("C", mp * pp);
    for (const auto& [first, size] : {std::pair{ida, mp * n}, std::pair{idb, n * pp}, std::pair{idc, mp * pp}}) {
        const std::uint32_t base = alloc.interleaved(size);
        for (std::uint32_t i = 0; i < size; ++i) plan.place(first + i, t.physical(map_address(t, base + i)));
    }

    // Whole waves of row blocks go round-robin over the cores. The remaining row
    // blocks are shared: their column blocks are split into `subsets` sets.
    const std::uint32_t waves = rblocks / ncores;
    const std::uint32_t rem = rblocks - waves * ncores;
    const std::uint32_t subsets = rem == 0 ? 0 : std::min(cblocks, ncores / rem);
    auto make_task = [&](std::uint32_t rb, std::uint32_t subset, std::uint32_t nsub, std::uint32_t y, CoreId core) {
        MmmTask task;
        task.row_block = relabel[rb];
        std::vector<std::uint32_t> list;
        for (std::uint32_t cb = subset; cb < cblocks; cb += nsub) list.push_back(cb);
        const auto len = static_cast<std::uint32_t>(list.size());
        // cores walking the same column blocks start at different ones
        for (std::uint32_t i = 0; i < len; ++i) task.col_blocks.push_back(list[(y + i) % len]);
        if (opt.stagger) {
            task.col_rotation = (y / len) % 4;
            task.row_rotation = (core % t.cores_per_tile + subset) % 4;
        }
        return task;
    };
    for (std::uint32_t x = 0; x < ncores; ++x) {
        MmmAssignment as;
        as.core = cores[x];
        for (std::uint32_t w = 0; w < waves; ++w) as.tasks.push_back(make_task(w * ncores + x, 0, 1, x, as.core));
        if (rem > 0 && x < rem * subsets)
            as.tasks.push_back(make_task(waves * ncores + x % rem, x / rem, subsets, x % rem, as.core));
        if (!as.tasks.empty()) out.assignment.push_back(std::move(as));
    }

    std::vector<CoreId> participants;
    for (const auto& as : out.assignment) {
        participants.push_back(as.core);
        const CoreId core = as.core;
        for (const MmmTask& task : as.tasks)
            for (std::uint32_t cb : task.col_blocks) {
                const std::uint32_t rb = task.row_block;
                for (std::uint32_t k = 0; k < n; ++k) {
                    for (std::uint32_t s = 0; s < 4; ++s) {
                        const std::uint32_t r = (s + task.row_rotation) % 4;
                        plan.load(core, 0, out.a(4 * rb + r, k), static_cast<std::uint8_t>(16 + r));
                    }
                    for (std::uint32_t s = 0; s < 4; ++s) {
                        const std::uint32_t c = (s + task.col_rotation) % 4;
                        plan.load(core, 0, out.b(k, 4 * cb + c), static_cast<std::uint8_t>(20 + c));
                    }
                    for (std::uint32_t s = 0; s < 4; ++s)
                        for (std::uint32_t u = 0; u < 4; ++u) {
                            const std::uint32_t r = (s + task.row_rotation) % 4;
                            const std::uint32_t c = (u + task.col_rotation) % 4;
                            const auto acc = static_cast<std::uint8_t>(4 * r + c);
                            const auto ra = static_cast<std::uint8_t>(16 + r);
                            const auto rbreg = static_cast<std::uint8_t>(20 + c);
                            plan.compute(core, 0,
                                         k == 0 ? MicroOp::compute(Opcode::Mul, acc, ra, rbreg)
                                                : MicroOp::compute(Opcode::Mac, acc, acc, ra, rbreg));
                        }
                    plan.compute(core, 0, MicroOp::loop_step());
                }
                for (std::uint32_t s = 0; s < 4; ++s)
                    for (std::uint32_t u = 0; u < 4; ++u) {
                        const std::uint32_t r = (s + task.row_rotation) % 4;
                        const std::uint32_t c = (u + task.col_rotation) % 4;
                        plan.store(core, 0, out.c(4 * rb + r, 4 * cb + c), static_cast<std::uint8_t>(4 * r + c));
                    }
            }
    }
    plan.sync(0, participants);
    return out;
}

} // namespace poolsim
