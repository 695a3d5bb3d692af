// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "poolsim/cluster/topology.hpp"
#include "poolsim/engine/micro_op.hpp"
#include "poolsim/error.hpp"

namespace poolsim {

/// Cores addressed by a wake-up scope, ascending.
inline std::vector<CoreId> cores_in_scope(const ClusterTopology& t, const WakeupScope& scope) {
    std::vector<CoreId> out;
    switch (scope.kind) {
    case ScopeKind::Core:
        require(scope.target < t.num_cores(), ErrorKind::OutOfRange, "wake-up core id out of range");
        out.push_back(scope.target);
        break;
    case ScopeKind::Groups:
        for (std::uint32_t g = 0; g < t.num_groups; ++g)
            if (scope.target & (1u << g))
                for (CoreId c = g * t.cores_per_group(); c < (g + 1) * t.cores_per_group(); ++c) out.push_back(c);
        break;
    case ScopeKind::Tiles:
        require(scope.group < t.num_groups, ErrorKind::OutOfRange, "wake-up group out of range");
        for (std::uint32_t tile = 0; tile < t.tiles_per_group; ++tile)
            if (scope.target & (1u << tile)) {
                const CoreId first = (scope.group * t.tiles_per_group + tile) * t.cores_per_tile;
                for (CoreId c = first; c < first + t.cores_per_tile; ++c) out.push_back(c);
            }
        break;
    case ScopeKind::Broadcast:
        for (CoreId c = 0; c < t.num_cores(); ++c) out.push_back(c);
        break;
    }
    return out;
}

/// Fewest CSR writes whose union is exactly `participants`: a broadcast when
/// every core takes part, one group-mask write for fully covered groups, one
/// tile-mask write per partially covered group, single-core writes otherwise.
inline std::vector<WakeupScope> select_wakeup_scopes(const ClusterTopology& t, std::span<const CoreId> participants) {
    std::vector<bool> in(t.num_cores(), false);
    std::size_t count = 0;
    for (CoreId c : participants) {
        require(c < t.num_cores(), ErrorKind::OutOfRange, "participant core out of range");
        if (!in[c]) ++count;
        in[c] = true;
    }
    std::vector<WakeupScope> scopes;
    if (count == 0) return scopes;
    if (count == t.num_cores()) return {WakeupScope{ScopeKind::Broadcast, 0, 0}};

    auto tile_full = [&](std::uint32_t gtile) {
        for (CoreId c = gtile * t.cores_per_tile; c < (gtile + 1) * t.cores_per_tile; ++c)
            if (!in[c]) return false;
        return true;
    };
    std::uint32_t group_mask = 0;
    std::vector<WakeupScope> tiles;
    std::vector<WakeupScope> singles;
    for (std::uint32_t g = 0; g < t.num_groups; ++g) {
        std::uint32_t tile_mask = 0;
        bool any = false;
        for (std::uint32_t tile = 0; tile < t.tiles_per_group; ++tile) {
            const std::uint32_t gtile = g * t.tiles_per_group + tile;
            if (tile_full(gtile)) {
                tile_mask |= 1u << tile;
                any = true;
                continue;
            }
            for (CoreId c = gtile * t.cores_per_tile; c < (gtile + 1) * t.cores_per_tile; ++c)
                if (in[c]) {
                    singles.push_back({ScopeKind::Core, c, 0});
                    any = true;
                }
        }
        if (!any) continue;
        const std::uint32_t all_tiles = t.tiles_per_group >= 32 ? ~0u : (1u << t.tiles_per_group) - 1u;
        if (tile_mask == all_tiles)
            group_mask |= 1u << g;
        else if (tile_mask != 0)
            tiles.push_back({ScopeKind::Tiles, tile_mask, g});
    }
    if (group_mask != 0) scopes.push_back({ScopeKind::Groups, group_mask, 0});
    scopes.insert(scopes.end(), tiles.begin(), tiles.end());
    scopes.insert(scopes.end(), singles.begin(), singles.end());
    return scopes;
}

} // namespace poolsim
