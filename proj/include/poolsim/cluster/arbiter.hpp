// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "poolsim/cluster/topology.hpp"
#include "poolsim/error.hpp"

namespace poolsim {

enum class AccessKind : std::uint8_t { Load, Store, AtomicAdd };

struct AccessRequest {
    CoreId core = 0;
    AccessKind kind = AccessKind::Load;
    BankLocation location;
    std::uint64_t issue_cycle = 0;
};

/// Per-cycle resource bookkeeping for the L1 interconnect.
///
/// A bank serves one request per cycle. A request leaving its group also claims
/// the (source tile -> destination group) request port for that cycle. Callers
/// present requests in priority order; the first to claim a resource wins.
class Arbiter {
public:
    explicit Arbiter(const ClusterTopology& topo)
        : topo_(&topo),
          bank_stamp_(topo.num_banks(), kIdle),
          port_stamp_(static_cast<std::size_t>(topo.num_tiles()) * topo.num_groups, kIdle) {}

    void begin_cycle(std::uint64_t cycle) noexcept { cycle_ = cycle; }

    bool try_grant(CoreId core, std::uint32_t global_bank) noexcept {
        if (bank_stamp_[global_bank] == cycle_) return false;
        const std::uint32_t dst_group = topo_->group_of_bank(global_bank);
        if (dst_group != topo_->group_of_core(core)) {
            const std::size_t port = static_cast<std::size_t>(topo_->tile_of_core(core)) * topo_->num_groups + dst_group;
            if (port_stamp_[port] == cycle_) return false;
            port_stamp_[port] = cycle_;
        }
        bank_stamp_[global_bank] = cycle_;
        return true;
    }

private:
    static constexpr std::uint64_t kIdle = ~std::uint64_t{0};
    const ClusterTopology* topo_;
    std::vector<std::uint64_t> bank_stamp_;
    std::vector<std::uint64_t> port_stamp_;
    std::uint64_t cycle_ = 0;
};

struct ArbitrationResult {
    std::vector<AccessRequest> granted;
    std::vector<AccessRequest> stalled;
};

/// One arbitration round. Older requests win; equal ages go to the lower core id.
inline ArbitrationResult arbitrate(const ClusterTopology& topo, std::span<const AccessRequest> pending,
                                   std::uint64_t cycle) {
    std::vector<AccessRequest> order(pending.begin(), pending.end());
    for (const auto& r : order) {
        require(r.issue_cycle <= cycle, ErrorKind::InvalidArgument, "request issued in the future");
        require(r.core < topo.num_cores() && topo.valid(r.location), ErrorKind::OutOfRange, "request outside topology");
    }
    std::stable_sort(order.begin(), order.end(), [](const AccessRequest& a, const AccessRequest& b) {
        return a.issue_cycle != b.issue_cycle ? a.issue_cycle < b.issue_cycle : a.core < b.core;
    });
    Arbiter arb(topo);
    arb.begin_cycle(cycle);
    ArbitrationResult result;
    for (const auto& r : order) {
        if (arb.try_grant(r.core, topo.global_bank(r.location)))
            result.granted.push_back(r);
        else
            result.stalled.push_back(r);
    }
    return result;
}

} // namespace poolsim
