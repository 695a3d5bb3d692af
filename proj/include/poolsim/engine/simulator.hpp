// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "poolsim/cluster/arbiter.hpp"
#include "poolsim/cluster/topology.hpp"
#include "poolsim/engine/micro_op.hpp"
#include "poolsim/engine/stats.hpp"
#include "poolsim/engine/wakeup.hpp"
#include "poolsim/error.hpp"
#include "poolsim/numerics/complex.hpp"

namespace poolsim {

/// Functional-unit timing. Divide/sqrt is iterative unless `divsqrt_pipelined`.
struct EngineConfig {
    std::uint32_t alu_latency = 1;
    std::uint32_t mul_latency = 3;
    std::uint32_t divsqrt_latency = 12;
    bool divsqrt_pipelined = false;
    /// Deadlock is declared after deadlock_factor * num_cores cycles without an issue.
    std::uint32_t deadlock_factor = 10;

    void validate() const {
        require(alu_latency > 0 && mul_latency > 0 && divsqrt_latency > 0, ErrorKind::ConfigError,
                "unit latencies must be positive");
        require(deadlock_factor > 0, ErrorKind::ConfigError, "deadlock factor must be positive");
    }

    friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

/// Cycle-stepped execution of per-core micro-op programs on a cluster.
///
/// Each core issues at most one micro-op per cycle, in order. An op waits (RAW)
/// until every register it reads or writes is ready, waits (LSU) while its
/// load-store queue is full or while its request loses arbitration, and a core
/// executing Wfi sleeps until a wake-up CSR write addresses it. Memory contents
/// change at the cycle a request is granted; loaded values become visible to
/// later instructions after the access latency.
class Simulator {
public:
    explicit Simulator(ClusterTopology topo, EngineConfig cfg = {})
        : topo_(std::move(topo)), cfg_(cfg), memory_(topo_.total_words()), arbiter_(topo_) {
        topo_.validate();
        cfg_.validate();
    }
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    const ClusterTopology& topology() const noexcept { return topo_; }
    const EngineConfig& config() const noexcept { return cfg_; }

    std::span<cf32> memory() noexcept { return memory_; }
    std::span<const cf32> memory() const noexcept { return memory_; }

    /// Per-cycle event log (cycle core event address), or nullptr to disable.
    void set_trace(std::ostream* trace) noexcept { trace_ = trace; }

    /// Runs `programs[c]` on core c (missing entries are empty) until every core
    /// has retired its last op.
    CycleStats run(std::span<const Program> programs) {
        require(programs.size() <= topo_.num_cores(), ErrorKind::InvalidArgument, "more programs than cores");
        validate_programs(programs);
        const std::uint32_t n = topo_.num_cores();
        cores_.assign(n, CoreState{});
        for (auto& c : cores_) c.lsu_slots.assign(topo_.max_outstanding, 0);
        programs_ = programs;

        std::uint32_t remaining = 0;
        for (CoreId c = 0; c < n; ++c) {
            if (c < programs.size() && !programs[c].empty()) {
                cores_[c].stats.active = true;
                ++remaining;
            } else {
                cores_[c].status = Status::Done;
            }
        }
        rebuild_active();
        retry_.clear();

        const std::uint64_t horizon = static_cast<std::uint64_t>(cfg_.deadlock_factor) * n;
        std::uint64_t last_progress = 0;
        std::uint64_t cycle = 0;
        done_count_ = 0;
        std::vector<CoreId> next_retry;
        processed_.assign(n, ~std::uint64_t{0});

        while (done_count_ < remaining) {
            if (active_.empty()) throw_deadlock(cycle, "every unfinished core is asleep");
            arbiter_.begin_cycle(cycle);
            progress_ = false;
            next_retry.clear();
            for (CoreId c : retry_) {
                processed_[c] = cycle;
                if (!retry_memory(c, cycle)) next_retry.push_back(c);
            }
            newly_stalled_.clear();
            for (CoreId c : active_) {
                if (processed_[c] == cycle || cores_[c].status != Status::Running) continue;
                step(c, cycle);
            }
            next_retry.insert(next_retry.end(), newly_stalled_.begin(), newly_stalled_.end());
            retry_.swap(next_retry);
            if (dirty_) rebuild_active();
            if (progress_)
                last_progress = cycle;
            else if (cycle - last_progress > horizon)
                throw_deadlock(cycle, "no core issued for " + std::to_string(horizon) + " cycles");
            ++cycle;
        }

        CycleStats stats;
        stats.total_cycles = cycle;
        stats.cores.reserve(n);
        for (auto& c : cores_) {
            if (c.stats.active) {
                c.stats.idle = cycle - c.stats.done_cycle;
            } else {
                c.stats.idle = cycle;
            }
            stats.cores.push_back(c.stats);
        }
        return stats;
    }

private:
    enum class Status : std::uint8_t { Running, Sleeping, Done };

    struct CoreState {
        std::uint32_t pc = 0;
        Status status = Status::Running;
        std::array<cf32, 32> regs{};
        std::array<std::uint64_t, 32> ready{};
        std::vector<std::uint64_t> lsu_slots;
        std::uint64_t divsqrt_busy_until = 0;
        std::uint32_t awaiting = 0;  // barrier id after arrival, until released
        std::uint32_t sleeping_on = 0;
        bool wake_pending = false;
        std::uint64_t sleep_start = 0;
        CoreStats stats;
    };

    void validate_programs(std::span<const Program> programs) const {
        for (std::size_t c = 0; c < programs.size(); ++c) {
            const Program& p = programs[c];
            for (std::size_t pc = 0; pc < p.size(); ++pc) {
                const MicroOp& op = p[pc];
                const auto where = " (core " + std::to_string(c) + ", pc " + std::to_string(pc) + ")";
                require(op.dst < kNumRegisters && op.src0 < kNumRegisters && op.src1 < kNumRegisters &&
                            op.src2 < kNumRegisters,
                        ErrorKind::InvalidArgument, "register tag out of range" + where);
                if (uses_memory(op.kind))
                    require(op.value < topo_.total_words(), ErrorKind::OutOfRange, "address out of range" + where);
                if (op.kind == OpKind::Compute && (op.code == Opcode::BranchNe || op.code == Opcode::Jump))
                    require(op.value <= p.size(), ErrorKind::InvalidArgument, "branch target out of range" + where);
                if (op.kind == OpKind::Wfi || op.kind == OpKind::CsrWakeup || op.kind == OpKind::AtomicAdd)
                    require(op.tag != 0 || op.kind == OpKind::AtomicAdd, ErrorKind::InvalidArgument,
                            "barrier id 0 is reserved" + where);
            }
        }
    }

    void rebuild_active() {
        active_.clear();
        for (CoreId c = 0; c < cores_.size(); ++c)
            if (cores_[c].status == Status::Running) active_.push_back(c);
        dirty_ = false;
    }

    std::uint32_t latency(Opcode op) const noexcept {
        switch (unit_of(op)) {
        case Unit::Alu: return cfg_.alu_latency;
        case Unit::Mul: return cfg_.mul_latency;
        case Unit::DivSqrt: return cfg_.divsqrt_latency;
        }
        return 1;
    }

    static int sources(const MicroOp& op, std::array<std::uint8_t, 3>& regs) {
        switch (op.code) {
        case Opcode::Add:
        case Opcode::Sub:
        case Opcode::Mul:
        case Opcode::MulConj:
        case Opcode::AccNorm2:
        case Opcode::DivReal:
        case Opcode::Div:
        case Opcode::DivConj: regs = {op.src0, op.src1, 0}; return 2;
        case Opcode::Mac:
        case Opcode::MsubConj:
        case Opcode::Msub:
        case Opcode::MsubConja: regs = {op.src0, op.src1, op.src2}; return 3;
        case Opcode::NegI:
        case Opcode::SqrtReal:
        case Opcode::BranchNe: regs = {op.src0, 0, 0}; return 1;
        default: return 0;
        }
    }

    static bool writes_register(Opcode op) {
        return op != Opcode::BranchNe && op != Opcode::Jump && op != Opcode::LoopStep && op != Opcode::None;
    }

    static cf32 evaluate(const MicroOp& op, const std::array<cf32, 32>& r) {
        const cf32 a = r[op.src0];
        const cf32 b = r[op.src1];
        const cf32 c = r[op.src2];
        switch (op.code) {
        case Opcode::Add: return cx::add(a, b);
        case Opcode::Sub: return cx::sub(a, b);
        case Opcode::Mul: return cx::mul(a, b);
        case Opcode::Mac: return cx::mac(a, b, c);
        case Opcode::MulConj: return cx::mul_conj(a, b);
        case Opcode::MsubConj: return cx::msub_conj(a, b, c);
        case Opcode::Msub: return cx::msub(a, b, c);
        case Opcode::MsubConja: return cx::msub_conja(a, b, c);
        case Opcode::AccNorm2: return cx::acc_norm2(a, b);
        case Opcode::NegI: return cx::neg_i(a);
        case Opcode::DivReal: return cx::div_real(a, b);
        case Opcode::Div: return cx::div(a, b);
        case Opcode::DivConj: return cx::div(a, std::conj(b));
        case Opcode::SqrtReal: return cx::sqrt_real(a);
        case Opcode::Const: return {std::bit_cast<float>(op.value), 0.0f};
        default: return {};
        }
    }

    void trace(std::uint64_t cycle, CoreId c, const char* event, std::int64_t addr = -1) {
        if (!trace_) return;
        *trace_ << cycle << ' ' << c << ' ' << event << ' ';
        if (addr < 0)
            *trace_ << '-';
        else
            *trace_ << addr;
        *trace_ << '\n';
    }

    void retire(CoreId c, std::uint64_t cycle) {
        CoreState& s = cores_[c];
        ++s.stats.issued;
        progress_ = true;
        if (s.pc >= programs_[c].size()) {
            s.status = Status::Done;
            s.stats.done_cycle = cycle + 1;
            ++done_count_;
            dirty_ = true;
            trace(cycle, c, "done");
        }
    }

    std::uint32_t lsu_in_flight(const CoreState& s, std::uint64_t cycle) const noexcept {
        std::uint32_t n = 0;
        for (auto t : s.lsu_slots) n += t > cycle ? 1u : 0u;
        return n;
    }

    // Attempts the memory op at the core's pc. Returns true when granted.
    bool issue_memory(CoreId c, std::uint64_t cycle) {
        CoreState& s = cores_[c];
        const MicroOp& op = programs_[c][s.pc];
        const std::uint32_t bank = topo_.bank_of(op.value);
        if (!arbiter_.try_grant(c, bank)) return false;
        const std::uint64_t done = cycle + topo_.latency_to_bank(c, bank);
        *std::min_element(s.lsu_slots.begin(), s.lsu_slots.end()) = done;
        switch (op.kind) {
        case OpKind::Load:
            s.regs[op.dst] = memory_[op.value];
            s.ready[op.dst] = done;
            trace(cycle, c, "load", op.value);
            break;
        case OpKind::Store:
            memory_[op.value] = s.regs[op.src0];
            trace(cycle, c, "store", op.value);
            break;
        case OpKind::AtomicAdd: {
            const cf32 old = memory_[op.value];
            memory_[op.value] = {old.real() + 1.0f, old.imag()};
            s.regs[op.dst] = old;
            s.ready[op.dst] = done;
            s.awaiting = op.tag;
            trace(cycle, c, "amo", op.value);
            break;
        }
        default: break;
        }
        ++s.pc;
        retire(c, cycle);
        return true;
    }

    bool retry_memory(CoreId c, std::uint64_t cycle) {
        if (issue_memory(c, cycle)) return true;
        ++cores_[c].stats.lsu;
        trace(cycle, c, "lsu-stall", programs_[c][cores_[c].pc].value);
        return false;
    }

    void step(CoreId c, std::uint64_t cycle) {
        CoreState& s = cores_[c];
        const MicroOp& op = programs_[c][s.pc];
        switch (op.kind) {
        case OpKind::Load:
        case OpKind::AtomicAdd:
        case OpKind::Store: {
            const std::uint8_t reg = op.kind == OpKind::Store ? op.src0 : op.dst;
            if (s.ready[reg] > cycle) {
                ++s.stats.raw;
                return;
            }
            if (lsu_in_flight(s, cycle) >= topo_.max_outstanding) {
                ++s.stats.lsu;
                return;
            }
            if (!issue_memory(c, cycle)) {
                ++s.stats.lsu;
                newly_stalled_.push_back(c);
                trace(cycle, c, "lsu-stall", op.value);
            }
            return;
        }
        case OpKind::Compute: {
            std::array<std::uint8_t, 3> src{};
            const int ns = sources(op, src);
            for (int i = 0; i < ns; ++i)
                if (s.ready[src[i]] > cycle) {
                    ++s.stats.raw;
                    return;
                }
            const bool writes = writes_register(op.code);
            if (writes && s.ready[op.dst] > cycle) {
                ++s.stats.raw;
                return;
            }
            const Unit unit = unit_of(op.code);
            if (unit == Unit::DivSqrt && !cfg_.divsqrt_pipelined && s.divsqrt_busy_until > cycle) {
                ++s.stats.raw;
                return;
            }
            const std::uint32_t lat = latency(op.code);
            if (unit == Unit::DivSqrt) s.divsqrt_busy_until = cycle + lat;
            if (is_mac(op.code)) ++s.stats.macs;
            if (op.code == Opcode::BranchNe) {
                s.pc = s.regs[op.src0].real() != std::bit_cast<float>(op.tag) ? op.value : s.pc + 1;
            } else if (op.code == Opcode::Jump) {
                s.pc = op.value;
            } else {
                if (writes) {
                    s.regs[op.dst] = evaluate(op, s.regs);
                    s.ready[op.dst] = cycle + lat;
                }
                ++s.pc;
            }
            retire(c, cycle);
            return;
        }
        case OpKind::Wfi:
            ++s.pc;
            if (s.wake_pending) {
                s.wake_pending = false;
                s.awaiting = 0;
                trace(cycle, c, "wfi-pass");
            } else {
                s.status = Status::Sleeping;
                s.sleeping_on = op.tag;
                s.sleep_start = cycle + 1;
                dirty_ = true;
                ++s.stats.issued;
                progress_ = true;
                trace(cycle, c, "wfi");
                return;
            }
            retire(c, cycle);
            return;
        case OpKind::CsrWakeup:
            ++s.pc;
            s.awaiting = 0;
            dispatch_wakeup(c, op, cycle);
            trace(cycle, c, "wakeup");
            retire(c, cycle);
            return;
        }
    }

    void dispatch_wakeup(CoreId issuer, const MicroOp& op, std::uint64_t cycle) {
        const WakeupScope scope = op.scope();
        for (CoreId t : cores_in_scope(topo_, scope)) {
            if (t == issuer) continue;
            CoreState& s = cores_[t];
            if (s.status == Status::Sleeping && s.sleeping_on == op.tag) {
                s.stats.wfi += cycle + 1 - s.sleep_start;
                if (s.pc >= programs_[t].size()) {
                    s.status = Status::Done;
                    s.stats.done_cycle = cycle + 1;
                    ++done_count_;
                } else {
                    s.status = Status::Running;
                }
                s.sleeping_on = 0;
                s.awaiting = 0;
                dirty_ = true;
                trace(cycle, t, "woken");
            } else if (s.status == Status::Running && s.awaiting == op.tag) {
                s.wake_pending = true;
            } else {
                fail(ErrorKind::MismatchedParticipants, "core " + std::to_string(issuer) + " woke core " +
                                                            std::to_string(t) + " outside barrier " +
                                                            std::to_string(op.tag) + " at cycle " +
                                                            std::to_string(cycle));
            }
        }
    }

    [[noreturn]] void throw_deadlock(std::uint64_t cycle, const std::string& why) const {
        std::ostringstream os;
        os << why << " at cycle " << cycle << "; sleeping:";
        int shown = 0;
        for (CoreId c = 0; c < cores_.size() && shown < 32; ++c)
            if (cores_[c].status == Status::Sleeping) {
                os << ' ' << c;
                ++shown;
            }
        os << "; blocked:";
        shown = 0;
        for (CoreId c = 0; c < cores_.size() && shown < 32; ++c)
            if (cores_[c].status == Status::Running) {
                os << ' ' << c << "@pc" << cores_[c].pc;
                ++shown;
            }
        fail(ErrorKind::Deadlock, os.str());
    }

    ClusterTopology topo_;
    EngineConfig cfg_;
    std::vector<cf32> memory_;
    Arbiter arbiter_;
    std::ostream* trace_ = nullptr;

    std::span<const Program> programs_;
    std::vector<CoreState> cores_;
    std::vector<CoreId> active_;
    std::vector<CoreId> retry_;
    std::vector<CoreId> newly_stalled_;
    std::vector<std::uint64_t> processed_;
    std::uint32_t done_count_ = 0;
    bool dirty_ = false;
    bool progress_ = false;
};

} // namespace poolsim
