// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "poolsim/cluster/topology.hpp"
#include "poolsim/engine/micro_op.hpp"
#include "poolsim/engine/wakeup.hpp"

namespace poolsim {

/// One barrier episode shared by all of its participants.
struct BarrierSpec {
    std::uint32_t id = 0;            // nonzero, unique per episode within a run
    PhysAddr counter = 0;            // word holding the arrival count, 0 on entry
    std::uint32_t expected = 0;      // number of participants
    std::vector<WakeupScope> scopes; // CSR writes issued by the last arrival
};

/// Counter word of a barrier: the last row of local bank `slot` (0..3) of its
/// lowest-id participant. Consecutive barriers that may overlap in time use
/// different slots.
inline PhysAddr barrier_counter_address(const ClusterTopology& t, CoreId lowest_participant, std::uint32_t slot = 0) {
    return t.physical(t.local_bank(lowest_participant, slot % 4), t.words_per_bank - 1);
}

/// Hands out barrier episodes with unique ids.
class BarrierFactory {
public:
    explicit BarrierFactory(const ClusterTopology& t) : topo_(&t) {}

    BarrierSpec make(std::span<const CoreId> participants, std::uint32_t slot = 0) {
        require(!participants.empty(), ErrorKind::InvalidArgument, "barrier without participants");
        CoreId lowest = participants.front();
        for (CoreId c : participants) lowest = std::min(lowest, c);
        BarrierSpec spec;
        spec.id = next_id_++;
        spec.counter = barrier_counter_address(*topo_, lowest, slot);
        spec.expected = static_cast<std::uint32_t>(participants.size());
        spec.scopes = select_wakeup_scopes(*topo_, participants);
        return spec;
    }

private:
    const ClusterTopology* topo_;
    std::uint32_t next_id_ = 1;
};

/// Appends the arrival idiom: atomic increment, and then either sleep or (for the
/// last arrival) counter reset plus wake-up CSR writes.
inline void emit_barrier(Program& prog, const BarrierSpec& spec) {
    if (spec.expected <= 1) return;
    const auto base = static_cast<std::uint32_t>(prog.size());
    const auto n_scopes = static_cast<std::uint32_t>(spec.scopes.size());
    const std::uint32_t sleep_pc = base + 5 + n_scopes;
    const std::uint32_t cont_pc = sleep_pc + 1;
    prog.push_back(MicroOp::atomic_add(spec.counter, kBarrierRegB, spec.id));
    prog.push_back(MicroOp::branch_ne(kBarrierRegB, static_cast<float>(spec.expected - 1), sleep_pc));
    prog.push_back(MicroOp::constant(kBarrierRegA, 0.0f));
    prog.push_back(MicroOp::store(spec.counter, kBarrierRegA));
    for (const auto& scope : spec.scopes) prog.push_back(MicroOp::wakeup(scope, spec.id));
    prog.push_back(MicroOp::jump(cont_pc));
    prog.push_back(MicroOp::wfi(spec.id));
}

} // namespace poolsim
