// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "poolsim/layouts/plan.hpp"

namespace poolsim {

struct LocalityReport {
    std::uint64_t reads = 0;
    std::uint64_t local_reads = 0;
    double local_read_fraction = 0.0;
    /// Same-bank requests from different cores in one phase slot, beyond the first.
    std::uint64_t conflict_count = 0;
    /// Requests from one tile to one remote group in one phase slot, beyond the first.
    std::uint64_t tile_to_group_collisions = 0;
    std::uint32_t max_tile_to_group_collisions = 0;
    /// local_read_fraction restricted to each phase (1.0 for phases without reads).
    std::vector<double> phase_local_fraction;
};

/// Replays the address streams of a plan without timing. Slot k of a phase is
/// the k-th memory access of every core in that phase; accesses sharing a slot
/// are treated as simultaneous. A read is local when it hits one of the four
/// banks of the reading core. Only arrays listed in `arrays` are counted
/// (all arrays when empty).
inline LocalityReport verify_conflict_free(const LayoutPlan& plan, const ClusterTopology& t,
                                           const std::vector<std::string>& arrays = {}) {
    plan.validate(t);
    std::vector<bool> counted(plan.placement().size(), arrays.empty());
    for (const auto& name : arrays) {
        const ArrayInfo& a = plan.array(name);
        std::fill(counted.begin() + a.first, counted.begin() + a.first + a.size, true);
    }

    LocalityReport report;
    const std::uint32_t phases = plan.num_phases();
    std::vector<std::vector<const PlanOp*>> streams(t.num_cores());
    std::vector<std::uint32_t> bank_hits(t.num_banks(), 0);
    std::vector<std::uint32_t> port_hits(static_cast<std::size_t>(t.num_tiles()) * t.num_groups, 0);
    std::vector<std::uint32_t> touched_banks;
    std::vector<std::size_t> touched_ports;

    for (std::uint32_t p = 0; p < phases; ++p) {
        std::size_t slots = 0;
        std::uint64_t phase_reads = 0;
        std::uint64_t phase_local = 0;
        for (CoreId c = 0; c < t.num_cores(); ++c) {
            streams[c].clear();
            const auto& work = plan.core_work(c);
            if (p >= work.size()) continue;
            for (const PlanOp& op : work[p])
                if (op.id != kNoId) streams[c].push_back(&op);
            slots = std::max(slots, streams[c].size());
        }
        for (std::size_t s = 0; s < slots; ++s) {
            touched_banks.clear();
            touched_ports.clear();
            for (CoreId c = 0; c < t.num_cores(); ++c) {
                if (s >= streams[c].size()) continue;
                const PlanOp& op = *streams[c][s];
                if (!counted[op.id]) continue;
                const std::uint32_t bank = t.bank_of(plan.address(op.id));
                if (op.op.kind == OpKind::Load) {
                    ++phase_reads;
                    if (bank / 4 == c) ++phase_local;  // one of the core's own banks
                }
                if (bank_hits[bank]++ == 0) touched_banks.push_back(bank);
                const std::uint32_t dst_group = t.group_of_bank(bank);
                if (dst_group != t.group_of_core(c)) {
                    const std::size_t port = static_cast<std::size_t>(t.tile_of_core(c)) * t.num_groups + dst_group;
                    if (port_hits[port]++ == 0) touched_ports.push_back(port);
                }
            }
            for (std::uint32_t b : touched_banks) {
                report.conflict_count += bank_hits[b] - 1;
                bank_hits[b] = 0;
            }
            for (std::size_t port : touched_ports) {
                report.tile_to_group_collisions += port_hits[port] - 1;
                report.max_tile_to_group_collisions = std::max(report.max_tile_to_group_collisions, port_hits[port] - 1);
                port_hits[port] = 0;
            }
        }
        report.reads += phase_reads;
        report.local_reads += phase_local;
        report.phase_local_fraction.push_back(phase_reads ? static_cast<double>(phase_local) / static_cast<double>(phase_reads)
                                                          : 1.0);
    }
    report.local_read_fraction =
        report.reads ? static_cast<double>(report.local_reads) / static_cast<double>(report.reads) : 1.0;
    return report;
}

} // namespace poolsim
