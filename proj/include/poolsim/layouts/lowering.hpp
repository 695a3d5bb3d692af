// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <map>
#include <vector>

#include "poolsim/engine/program_builder.hpp"
#include "poolsim/layouts/plan.hpp"

namespace poolsim {

/// Turns a plan into per-core programs: each phase's ops with resolved
/// addresses, followed by the barrier idiom of every sync point after that phase.
inline std::vector<Program> lower(const LayoutPlan& plan, const ClusterTopology& t) {
    plan.validate(t);
    BarrierFactory factory(t);
    std::vector<BarrierSpec> specs;
    std::map<CoreId, std::uint32_t> uses;  // barriers per lowest participant so far
    for (const auto& s : plan.sync_points()) {
        require(!s.participants.empty(), ErrorKind::InvalidArgument, "sync point without participants");
        const CoreId lowest = s.participants.front();
        specs.push_back(factory.make(s.participants, uses[lowest]++));
    }

    std::vector<Program> programs(t.num_cores());
    const std::uint32_t phases = plan.num_phases();
    for (CoreId c = 0; c < t.num_cores(); ++c) {
        const auto& work = plan.core_work(c);
        Program& prog = programs[c];
        for (std::uint32_t p = 0; p < phases; ++p) {
            if (p < work.size())
                for (const PlanOp& op : work[p]) {
                    MicroOp m = op.op;
                    if (op.id != kNoId) m.value = plan.address(op.id);
                    prog.push_back(m);
                }
            for (std::size_t i = 0; i < specs.size(); ++i) {
                const auto& s = plan.sync_points()[i];
                if (s.phase == p && std::binary_search(s.participants.begin(), s.participants.end(), c))
                    emit_barrier(prog, specs[i]);
            }
        }
    }
    return programs;
}

} // namespace poolsim
