// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "poolsim/cluster/topology.hpp"
#include "poolsim/error.hpp"

namespace poolsim {

enum class OpKind : std::uint8_t { Load, Store, AtomicAdd, Compute, Wfi, CsrWakeup };

/// Compute operations on complex registers. Arithmetic ones mirror poolsim::cx.
enum class Opcode : std::uint8_t {
    None,
    Add,        // s0 + s1
    Sub,        // s0 - s1
    Mul,        // s0 * s1
    Mac,        // s0 + s1 * s2
    MulConj,    // s0 * conj(s1)
    MsubConj,   // s0 - s1 * conj(s2)
    Msub,       // s0 - s1 * s2
    MsubConja,  // s0 - conj(s1) * s2
    AccNorm2,   // s0 + |s1|^2 (real part)
    NegI,       // -i * s0
    DivReal,    // s0 / re(s1)
    Div,        // s0 / s1
    DivConj,    // s0 / conj(s1)
    SqrtReal,   // sqrt(re(s0))
    Const,      // dst = imm
    BranchNe,   // if re(s0) != imm goto target
    Jump,       // goto target
    LoopStep,   // loop bookkeeping, no architectural effect
};

enum class Unit : std::uint8_t { Alu, Mul, DivSqrt };

constexpr Unit unit_of(Opcode op) {
    switch (op) {
    case Opcode::Mul:
    case Opcode::Mac:
    case Opcode::MulConj:
    case Opcode::MsubConj:
    case Opcode::Msub:
    case Opcode::MsubConja:
    case Opcode::AccNorm2: return Unit::Mul;
    case Opcode::DivReal:
    case Opcode::Div:
    case Opcode::DivConj:
    case Opcode::SqrtReal: return Unit::DivSqrt;
    default: return Unit::Alu;
    }
}

/// True for opcodes that perform one complex multiply-accumulate.
constexpr bool is_mac(Opcode op) { return unit_of(op) == Unit::Mul; }

/// Scope of a wake-up CSR write.
enum class ScopeKind : std::uint8_t { Core, Groups, Tiles, Broadcast };

struct WakeupScope {
    ScopeKind kind = ScopeKind::Broadcast;
    std::uint32_t target = 0;  // core id, group mask, or tile mask
    std::uint32_t group = 0;   // group of a tile mask

    friend bool operator==(const WakeupScope&, const WakeupScope&) = default;
};

/// Number of registers visible to programs; tag 31 does not exist.
inline constexpr std::uint8_t kNumRegisters = 31;
/// Registers claimed by the barrier idiom.
inline constexpr std::uint8_t kBarrierRegA = 29;
inline constexpr std::uint8_t kBarrierRegB = 30;

/// One entry of a per-core instruction stream (16 bytes).
struct MicroOp {
    OpKind kind = OpKind::Compute;
    Opcode code = Opcode::None;
    std::uint8_t dst = 0;
    std::uint8_t src0 = 0;
    std::uint8_t src1 = 0;
    std::uint8_t src2 = 0;
    std::uint16_t aux = 0;    // scope kind / group of a wake-up
    std::uint32_t value = 0;  // address, immediate bits, branch target, scope target
    std::uint32_t tag = 0;    // barrier episode id for AtomicAdd / Wfi / CsrWakeup

    static MicroOp load(PhysAddr addr, std::uint8_t dst) { return {OpKind::Load, Opcode::None, dst, 0, 0, 0, 0, addr, 0}; }
    static MicroOp store(PhysAddr addr, std::uint8_t src) {
        return {OpKind::Store, Opcode::None, 0, src, 0, 0, 0, addr, 0};
    }
    static MicroOp atomic_add(PhysAddr addr, std::uint8_t dst, std::uint32_t barrier) {
        return {OpKind::AtomicAdd, Opcode::None, dst, 0, 0, 0, 0, addr, barrier};
    }
    static MicroOp compute(Opcode op, std::uint8_t dst, std::uint8_t s0, std::uint8_t s1 = 0, std::uint8_t s2 = 0) {
        return {OpKind::Compute, op, dst, s0, s1, s2, 0, 0, 0};
    }
    static MicroOp constant(std::uint8_t dst, float value) {
        return {OpKind::Compute, Opcode::Const, dst, 0, 0, 0, 0, std::bit_cast<std::uint32_t>(value), 0};
    }
    static MicroOp branch_ne(std::uint8_t src, float imm, std::uint32_t target) {
        MicroOp op{OpKind::Compute, Opcode::BranchNe, 0, src, 0, 0, 0, target, 0};
        op.tag = std::bit_cast<std::uint32_t>(imm);
        return op;
    }
    static MicroOp jump(std::uint32_t target) { return {OpKind::Compute, Opcode::Jump, 0, 0, 0, 0, 0, target, 0}; }
    static MicroOp loop_step() { return {OpKind::Compute, Opcode::LoopStep, 0, 0, 0, 0, 0, 0, 0}; }
    static MicroOp wfi(std::uint32_t barrier) { return {OpKind::Wfi, Opcode::None, 0, 0, 0, 0, 0, 0, barrier}; }
    static MicroOp wakeup(const WakeupScope& scope, std::uint32_t barrier) {
        const auto aux = static_cast<std::uint16_t>(static_cast<std::uint32_t>(scope.kind) | (scope.group << 8));
        return {OpKind::CsrWakeup, Opcode::None, 0, 0, 0, 0, aux, scope.target, barrier};
    }

    WakeupScope scope() const noexcept {
        const auto kind = static_cast<ScopeKind>(aux & 0xff);
        return {kind, value, static_cast<std::uint32_t>(aux >> 8)};
    }
};

static_assert(sizeof(MicroOp) == 16);

using Program = std::vector<MicroOp>;

inline bool uses_memory(OpKind k) { return k == OpKind::Load || k == OpKind::Store || k == OpKind::AtomicAdd; }

} // namespace poolsim
