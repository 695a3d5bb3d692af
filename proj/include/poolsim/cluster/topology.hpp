// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <cstdint>
#include <string>

#include "poolsim/error.hpp"

namespace poolsim {

using CoreId = std::uint32_t;
/// Physical word index: global_bank * words_per_bank + offset.
using PhysAddr = std::uint32_t;

/// Position of one memory word in the cluster hierarchy. `tile` is relative to
/// its group and `bank` relative to its tile.
struct BankLocation {
    std::uint32_t group = 0;
    std::uint32_t tile = 0;
    std::uint32_t bank = 0;
    std::uint32_t offset = 0;

    friend bool operator==(const BankLocation&, const BankLocation&) = default;
};

/// Core/tile/group/bank hierarchy and its access latencies.
struct ClusterTopology {
    std::string name = "custom";
    std::uint32_t cores_per_tile = 4;
    std::uint32_t banks_per_tile = 16;
    std::uint32_t tiles_per_group = 16;
    std::uint32_t num_groups = 4;
    std::uint32_t words_per_bank = 256;
    std::uint32_t latency_local = 1;
    std::uint32_t latency_local_group = 3;
    std::uint32_t latency_remote_group = 5;
    std::uint32_t max_outstanding = 8;
    /// Rows [0, interleaved_rows) of every bank form the cluster-wide interleaved region.
    std::uint32_t interleaved_rows = 128;

    static ClusterTopology mempool() {
        ClusterTopology t;
        t.name = "mempool";
        return t;
    }

    static ClusterTopology terapool() {
        ClusterTopology t;
        t.name = "terapool";
        t.cores_per_tile = 8;
        t.banks_per_tile = 32;
        t.num_groups = 8;
        return t;
    }

    /// 16 cores in 2 groups of 2 tiles; small enough for exhaustive tests.
    static ClusterTopology minpool() {
        ClusterTopology t;
        t.name = "minpool";
        t.tiles_per_group = 2;
        t.num_groups = 2;
        return t;
    }

    static ClusterTopology preset(const std::string& name) {
        if (name == "mempool") return mempool();
        if (name == "terapool") return terapool();
        if (name == "minpool") return minpool();
        fail(ErrorKind::ConfigError, "unknown topology preset '" + name + "'");
    }

    void validate() const {
        require(cores_per_tile > 0 && tiles_per_group > 0 && num_groups > 0, ErrorKind::ConfigError,
                "topology counts must be positive");
        require(banks_per_tile == 4 * cores_per_tile, ErrorKind::ConfigError, "each core needs exactly 4 local banks");
        require(words_per_bank > 1 && interleaved_rows < words_per_bank, ErrorKind::ConfigError,
                "interleaved rows must leave room in each bank");
        require(latency_local > 0 && latency_local_group > 0 && latency_remote_group > 0, ErrorKind::ConfigError,
                "latencies must be positive");
        require(max_outstanding > 0, ErrorKind::ConfigError, "max_outstanding must be positive");
        require(static_cast<std::uint64_t>(num_banks()) * words_per_bank < (1ull << 32), ErrorKind::ConfigError,
                "memory too large for 32-bit addressing");
    }

    std::uint32_t num_tiles() const noexcept { return tiles_per_group * num_groups; }
    std::uint32_t num_cores() const noexcept { return cores_per_tile * num_tiles(); }
    std::uint32_t num_banks() const noexcept { return banks_per_tile * num_tiles(); }
    std::uint32_t banks_per_group() const noexcept { return banks_per_tile * tiles_per_group; }
    std::uint32_t cores_per_group() const noexcept { return cores_per_tile * tiles_per_group; }
    std::uint32_t total_words() const noexcept { return num_banks() * words_per_bank; }
    std::uint32_t interleaved_words() const noexcept { return num_banks() * interleaved_rows; }

    std::uint32_t tile_of_core(CoreId c) const noexcept { return c / cores_per_tile; }
    std::uint32_t group_of_core(CoreId c) const noexcept { return c / cores_per_group(); }
    std::uint32_t tile_of_bank(std::uint32_t global_bank) const noexcept { return global_bank / banks_per_tile; }
    std::uint32_t group_of_bank(std::uint32_t global_bank) const noexcept { return global_bank / banks_per_group(); }

    /// Global id of local bank `k` (0..3) of core `c`.
    std::uint32_t local_bank(CoreId c, std::uint32_t k) const noexcept {
        return tile_of_core(c) * banks_per_tile + (c % cores_per_tile) * 4 + k;
    }

    std::uint32_t global_bank(const BankLocation& loc) const noexcept {
        return (loc.group * tiles_per_group + loc.tile) * banks_per_tile + loc.bank;
    }

    BankLocation location_of_bank(std::uint32_t global_bank, std::uint32_t offset) const noexcept {
        const std::uint32_t tile = global_bank / banks_per_tile;
        return {tile / tiles_per_group, tile % tiles_per_group, global_bank % banks_per_tile, offset};
    }

    PhysAddr physical(const BankLocation& loc) const noexcept { return global_bank(loc) * words_per_bank + loc.offset; }
    PhysAddr physical(std::uint32_t global_bank, std::uint32_t offset) const noexcept {
        return global_bank * words_per_bank + offset;
    }
    std::uint32_t bank_of(PhysAddr a) const noexcept { return a / words_per_bank; }
    BankLocation location(PhysAddr a) const noexcept { return location_of_bank(a / words_per_bank, a % words_per_bank); }

    bool valid(const BankLocation& loc) const noexcept {
        return loc.group < num_groups && loc.tile < tiles_per_group && loc.bank < banks_per_tile &&
               loc.offset < words_per_bank;
    }

    /// Cycles for `core` to reach a word in `global_bank`: 1 in its tile, 3 in its
    /// group, 5 elsewhere (with the default latency table).
    std::uint32_t latency_to_bank(CoreId core, std::uint32_t global_bank) const noexcept {
        if (tile_of_bank(global_bank) == tile_of_core(core)) return latency_local;
        if (group_of_bank(global_bank) == group_of_core(core)) return latency_local_group;
        return latency_remote_group;
    }
};

/// Maps a logical word address onto the hierarchy.
///
/// The first `interleaved_words()` addresses rotate across every bank of the
/// cluster; the remainder is split into per-tile sequential regions that fill
/// rows [interleaved_rows, words_per_bank) of one tile's banks.
inline BankLocation map_address(const ClusterTopology& t, std::uint64_t word_address) {
    require(word_address < t.total_words(), ErrorKind::OutOfRange,
            "address " + std::to_string(word_address) + " beyond " + std::to_string(t.total_words()) + " words");
    const auto addr = static_cast<std::uint32_t>(word_address);
    if (addr < t.interleaved_words()) return t.location_of_bank(addr % t.num_banks(), addr / t.num_banks());
    const std::uint32_t rel = addr - t.interleaved_words();
    const std::uint32_t seq_rows = t.words_per_bank - t.interleaved_rows;
    const std::uint32_t per_tile = t.banks_per_tile * seq_rows;
    const std::uint32_t tile = rel / per_tile;
    const std::uint32_t within = rel % per_tile;
    return t.location_of_bank(tile * t.banks_per_tile + within % t.banks_per_tile,
                              t.interleaved_rows + within / t.banks_per_tile);
}

/// Inverse of map_address.
inline std::uint64_t logical_address(const ClusterTopology& t, const BankLocation& loc) {
    require(t.valid(loc), ErrorKind::OutOfRange, "bank location outside topology");
    const std::uint32_t gbank = t.global_bank(loc);
    if (loc.offset < t.interleaved_rows) return static_cast<std::uint64_t>(loc.offset) * t.num_banks() + gbank;
    const std::uint32_t seq_rows = t.words_per_bank - t.interleaved_rows;
    const std::uint32_t tile = gbank / t.banks_per_tile;
    return t.interleaved_words() + static_cast<std::uint64_t>(tile) * t.banks_per_tile * seq_rows +
           static_cast<std::uint64_t>(loc.offset - t.interleaved_rows) * t.banks_per_tile + loc.bank;
}

inline std::uint32_t access_latency(const ClusterTopology& t, CoreId core, const BankLocation& loc) {
    return t.latency_to_bank(core, t.global_bank(loc));
}

} // namespace poolsim
