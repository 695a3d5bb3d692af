// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "poolsim/cluster/topology.hpp"
#include "poolsim/engine/micro_op.hpp"
#include "poolsim/error.hpp"

namespace poolsim {

using LogicalId = std::uint32_t;
inline constexpr LogicalId kNoId = ~LogicalId{0};
inline constexpr PhysAddr kUnplaced = ~PhysAddr{0};

struct ArrayInfo {
    std::string name;
    LogicalId first = 0;
    std::uint32_t size = 0;
};

/// A micro-op of a schedule. Memory ops name a logical element; its physical
/// address is filled in when the plan is lowered.
struct PlanOp {
    MicroOp op;
    LogicalId id = kNoId;
};

using Phase = std::vector<PlanOp>;

/// Barrier after `phase` among `participants` (ascending core ids).
struct SyncPoint {
    std::uint32_t phase = 0;
    std::vector<CoreId> participants;
};

/// Placement of logical data on banks plus a per-core, per-phase schedule.
class LayoutPlan {
public:
    LayoutPlan(std::string kernel, std::uint32_t num_cores) : kernel_(std::move(kernel)), work_(num_cores) {}

    const std::string& kernel() const noexcept { return kernel_; }

    LogicalId add_array(const std::string& name, std::uint32_t size) {
        require(find(name) == nullptr, ErrorKind::InvalidArgument, "duplicate array '" + name + "'");
        const auto first = static_cast<LogicalId>(placement_.size());
        arrays_.push_back({name, first, size});
        placement_.resize(placement_.size() + size, kUnplaced);
        return first;
    }

    const std::vector<ArrayInfo>& arrays() const noexcept { return arrays_; }

    const ArrayInfo& array(const std::string& name) const {
        const ArrayInfo* a = find(name);
        require(a != nullptr, ErrorKind::InvalidArgument, "no array '" + name + "'");
        return *a;
    }

    /// Array that owns a logical id.
    const ArrayInfo& array_of(LogicalId id) const {
        for (const auto& a : arrays_)
            if (id >= a.first && id < a.first + a.size) return a;
        fail(ErrorKind::OutOfRange, "logical id " + std::to_string(id) + " outside every array");
    }

    LogicalId id(const std::string& name, std::uint32_t index) const {
        const ArrayInfo& a = array(name);
        require(index < a.size, ErrorKind::OutOfRange, "index past end of '" + name + "'");
        return a.first + index;
    }

    void place(LogicalId id, PhysAddr addr) { placement_.at(id) = addr; }
    PhysAddr address(LogicalId id) const { return placement_.at(id); }
    std::span<const PhysAddr> placement() const noexcept { return placement_; }

    std::uint32_t num_cores() const noexcept { return static_cast<std::uint32_t>(work_.size()); }

    /// Phase `p` of core `c`, created on demand.
    Phase& phase(CoreId c, std::uint32_t p) {
        auto& phases = work_.at(c);
        if (phases.size() <= p) phases.resize(p + 1);
        return phases[p];
    }

    const std::vector<Phase>& core_work(CoreId c) const { return work_.at(c); }

    void load(CoreId c, std::uint32_t p, LogicalId id, std::uint8_t reg) { phase(c, p).push_back({MicroOp::load(0, reg), id}); }
    void store(CoreId c, std::uint32_t p, LogicalId id, std::uint8_t reg) { phase(c, p).push_back({MicroOp::store(0, reg), id}); }
    void compute(CoreId c, std::uint32_t p, const MicroOp& op) { phase(c, p).push_back({op, kNoId}); }

    void sync(std::uint32_t p, std::vector<CoreId> participants) {
        std::sort(participants.begin(), participants.end());
        participants.erase(std::unique(participants.begin(), participants.end()), participants.end());
        sync_.push_back({p, std::move(participants)});
    }

    const std::vector<SyncPoint>& sync_points() const noexcept { return sync_; }

    std::uint32_t num_phases() const noexcept {
        std::size_t n = 0;
        for (const auto& w : work_) n = std::max(n, w.size());
        for (const auto& s : sync_) n = std::max<std::size_t>(n, s.phase + 1);
        return static_cast<std::uint32_t>(n);
    }

    /// Cores with at least one scheduled op.
    std::vector<CoreId> active_cores() const {
        std::vector<CoreId> out;
        for (CoreId c = 0; c < work_.size(); ++c)
            for (const auto& p : work_[c])
                if (!p.empty()) {
                    out.push_back(c);
                    break;
                }
        return out;
    }

    /// Free-form markers such as "dimension_too_small".
    std::vector<std::string>& flags() noexcept { return flags_; }
    const std::vector<std::string>& flags() const noexcept { return flags_; }
    bool has_flag(const std::string& f) const { return std::find(flags_.begin(), flags_.end(), f) != flags_.end(); }

    /// Every element placed inside memory, no two elements on one word, every
    /// memory op names a placed element, and sync points reference real cores.
    void validate(const ClusterTopology& t) const {
        require(work_.size() == t.num_cores(), ErrorKind::SizeMismatch, "plan built for a different core count");
        std::vector<PhysAddr> sorted(placement_);
        for (PhysAddr a : sorted)
            require(a != kUnplaced && a < t.total_words(), ErrorKind::OutOfRange, kernel_ + ": element not placed");
        std::sort(sorted.begin(), sorted.end());
        require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorKind::InvalidArgument,
                kernel_ + ": two elements share a word");
        for (const auto& phases : work_)
            for (const auto& p : phases)
                for (const auto& op : p)
                    require(uses_memory(op.op.kind) == (op.id != kNoId) && (op.id == kNoId || op.id < placement_.size()),
                            ErrorKind::InvalidArgument, kernel_ + ": memory op without element");
        for (const auto& s : sync_)
            for (CoreId c : s.participants) require(c < t.num_cores(), ErrorKind::OutOfRange, "sync participant");
    }

private:
    const ArrayInfo* find(const std::string& name) const {
        for (const auto& a : arrays_)
            if (a.name == name) return &a;
        return nullptr;
    }

    std::string kernel_;
    std::vector<ArrayInfo> arrays_;
    std::vector<PhysAddr> placement_;
    std::vector<std::vector<Phase>> work_;
    std::vector<SyncPoint> sync_;
    std::vector<std::string> flags_;
};

/// Instances of a kernel and the disjoint core set each one runs on.
struct ReplicationPlan {
    std::uint32_t instances = 0;
    std::vector<std::vector<CoreId>> cores;

    void validate(const ClusterTopology& t) const {
        require(cores.size() == instances, ErrorKind::SizeMismatch, "one core set per instance");
        std::vector<bool> used(t.num_cores(), false);
        for (const auto& set : cores)
            for (CoreId c : set) {
                require(c < t.num_cores(), ErrorKind::OutOfRange, "instance core out of range");
                require(!used[c], ErrorKind::InvalidArgument, "instance core sets overlap");
                used[c] = true;
            }
    }
};

/// Hands out words of one cluster's memory.
///
/// Interleaved arrays grow from row 0 of the interleaved region upward; per-bank
/// row blocks grow from the top of each bank downward. The last row of every
/// bank is kept for barrier counters.
class MemoryAllocator {
public:
    explicit MemoryAllocator(const ClusterTopology& t) : topo_(&t), top_(t.num_banks(), t.words_per_bank - 1) {}

    /// `size` consecutive interleaved addresses starting on a bank-row boundary.
    /// Returns the logical start address (see map_address).
    std::uint32_t interleaved(std::uint32_t size) {
        const std::uint32_t rows = (size + topo_->num_banks() - 1) / topo_->num_banks();
        require(next_row_ + rows <= topo_->interleaved_rows && next_row_ + rows <= lowest_top(), ErrorKind::OutOfMemory,
                "interleaved region cannot hold " + std::to_string(size) + " more words");
        const std::uint32_t start = next_row_ * topo_->num_banks();
        next_row_ += rows;
        return start;
    }

    /// `count` rows at one common offset in every bank of `banks`; returns the offset.
    std::uint32_t rows(std::span<const std::uint32_t> banks, std::uint32_t count) {
        std::uint32_t top = topo_->words_per_bank;
        for (std::uint32_t b : banks) top = std::min(top, top_.at(b));
        require(count <= top && top - count >= next_row_, ErrorKind::OutOfMemory,
                "banks cannot hold " + std::to_string(count) + " more rows");
        const std::uint32_t row = top - count;
        for (std::uint32_t b : banks) top_[b] = row;
        return row;
    }

    /// Local banks (4 per core) of `cores`.
    std::vector<std::uint32_t> banks_of(std::span<const CoreId> cores) const {
        std::vector<std::uint32_t> out;
        for (CoreId c : cores)
            for (std::uint32_t k = 0; k < 4; ++k) out.push_back(topo_->local_bank(c, k));
        return out;
    }

    std::uint32_t interleaved_rows_used() const noexcept { return next_row_; }

private:
    std::uint32_t lowest_top() const { return *std::min_element(top_.begin(), top_.end()); }

    const ClusterTopology* topo_;
    std::vector<std::uint32_t> top_;  // first row in use from the top
    std::uint32_t next_row_ = 0;
};

/// Same arrays and placement with the work of plan core c moved onto
/// cores[c % cores.size()]. Within a phase the moved work is concatenated in
/// plan-core order; sync points keep their phase over the mapped participants.
inline LayoutPlan remap(const LayoutPlan& plan, const std::vector<CoreId>& cores) {
    require(!cores.empty(), ErrorKind::TooFewCores, "remap needs at least one core");
    LayoutPlan out(plan.kernel(), plan.num_cores());
    for (const auto& a : plan.arrays()) {
        const LogicalId first = out.add_array(a.name, a.size);
        for (std::uint32_t i = 0; i < a.size; ++i) out.place(first + i, plan.address(a.first + i));
    }
    const auto target = [&](CoreId c) { return cores[c % cores.size()]; };
    const std::uint32_t phases = plan.num_phases();
    for (std::uint32_t p = 0; p < phases; ++p)
        for (CoreId c = 0; c < plan.num_cores(); ++c) {
            const auto& work = plan.core_work(c);
            if (p >= work.size() || work[p].empty()) continue;
            auto& dst = out.phase(target(c), p);
            dst.insert(dst.end(), work[p].begin(), work[p].end());
        }
    for (const auto& s : plan.sync_points()) {
        std::vector<CoreId> mapped;
        for (CoreId c : s.participants) mapped.push_back(target(c));
        std::sort(mapped.begin(), mapped.end());
        mapped.erase(std::unique(mapped.begin(), mapped.end()), mapped.end());
        if (mapped.size() < 2) continue;
        const auto& done = out.sync_points();
        const bool repeat = std::any_of(done.begin(), done.end(), [&](const SyncPoint& d) {
            return d.phase == s.phase && d.participants == mapped;
        });
        if (!repeat) out.sync(s.phase, std::move(mapped));
    }
    out.flags() = plan.flags();
    return out;
}

/// Serial baseline: the whole plan on one core, same data placement.
inline LayoutPlan serialize(const LayoutPlan& plan, CoreId core = 0) { return remap(plan, {core}); }

inline nlohmann::ordered_json to_json(const LayoutPlan& plan, const ClusterTopology& t) {
    nlohmann::ordered_json doc;
    doc["kernel"] = plan.kernel();
    doc["topology"] = t.name;
    auto& arrays = doc["arrays"] = nlohmann::ordered_json::array();
    for (const auto& a : plan.arrays()) {
        nlohmann::ordered_json arr;
        arr["name"] = a.name;
        arr["first_id"] = a.first;
        arr["size"] = a.size;
        auto& place = arr["placement"] = nlohmann::ordered_json::array();
        for (std::uint32_t i = 0; i < a.size; ++i) {
            const PhysAddr p = plan.address(a.first + i);
            if (p == kUnplaced) {
                place.push_back(nullptr);
                continue;
            }
            const BankLocation loc = t.location(p);
            place.push_back({loc.group, loc.tile, loc.bank, loc.offset});
        }
        arrays.push_back(std::move(arr));
    }
    auto& cores = doc["cores"] = nlohmann::ordered_json::array();
    for (CoreId c = 0; c < plan.num_cores(); ++c) {
        const auto& work = plan.core_work(c);
        if (work.empty()) continue;
        nlohmann::ordered_json core;
        core["core"] = c;
        auto& phases = core["phases"] = nlohmann::ordered_json::array();
        for (const auto& p : work) {
            nlohmann::ordered_json ph;
            auto reads = nlohmann::ordered_json::array();
            auto writes = nlohmann::ordered_json::array();
            std::uint32_t computes = 0;
            for (const auto& op : p) {
                if (op.op.kind == OpKind::Load)
                    reads.push_back(op.id);
                else if (op.op.kind == OpKind::Store)
                    writes.push_back(op.id);
                else
                    ++computes;
            }
            ph["reads"] = std::move(reads);
            ph["computes"] = computes;
            ph["writes"] = std::move(writes);
            phases.push_back(std::move(ph));
        }
        cores.push_back(std::move(core));
    }
    auto& sync = doc["sync_points"] = nlohmann::ordered_json::array();
    for (const auto& s : plan.sync_points()) sync.push_back({{"phase", s.phase}, {"participants", s.participants}});
    doc["flags"] = plan.flags();
    return doc;
}

} // namespace poolsim
