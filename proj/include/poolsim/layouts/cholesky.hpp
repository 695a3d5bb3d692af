// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "poolsim/layouts/plan.hpp"

namespace poolsim {

/// Cores cooperating on one decomposition of an n x n matrix (n >= 8 runs as a
/// mirrored pair on these cores, n == 4 on a single core).
constexpr std::uint32_t cholesky_cores_per_unit(std::uint32_t n) { return n >= 8 ? n / 4 : 1; }
constexpr std::uint32_t cholesky_members(std::uint32_t n) { return n >= 8 ? 2 : 1; }

/// Units (pairs, or single-core instances for n == 4) that fit the cluster at once.
inline std::uint32_t cholesky_capacity(std::uint32_t n, const ClusterTopology& t) {
    return t.num_cores() / cholesky_cores_per_unit(n);
}

struct CholeskyOptions {
    /// Units processed back to back by the same cores, phase by phase.
    std::uint32_t items_per_unit = 1;
    /// Append forward and backward substitution on a right-hand side (MMSE).
    bool solve = false;
};

/// In-place factorization: the lower triangle of G is loaded into "L" and
/// overwritten. Row i of every instance lives in one bank local to its owner.
struct CholeskyLayout {
    LayoutPlan plan;
    std::uint32_t n = 0;
    std::uint32_t instances = 0;
    std::vector<std::vector<CoreId>> units;
    std::vector<CoreId> solver;  // per instance, when solving
    bool solve = false;

    LogicalId l(std::uint32_t inst, std::uint32_t i, std::uint32_t k) const {
        return plan.array("L").first + (inst * n + i) * n + k;
    }
    /// Right-hand side, overwritten by the solution.
    LogicalId rhs(std::uint32_t inst, std::uint32_t i) const { return plan.array("rhs").first + inst * n + i; }

    /// Core that computes row i of instance `inst`.
    CoreId owner(std::uint32_t inst, std::uint32_t i) const {
        const std::uint32_t members = cholesky_members(n);
        const auto& cores = units[inst / members / items_];
        const std::uint32_t k = static_cast<std::uint32_t>(cores.size());
        const std::uint32_t r = inst % members == 0 ? i : n - 1 - i;
        return cores[r % k];
    }

    std::uint32_t items_ = 1;
};

namespace detail {

/// acc = init; acc = op(acc, a_k, b_k) for each k; acc = finish(acc, d); store.
struct DotTask {
    LogicalId init = kNoId;
    std::vector<std::pair<LogicalId, LogicalId>> terms;
    Opcode op = Opcode::MsubConj;
    Opcode finish = Opcode::SqrtReal;
    LogicalId divisor = kNoId;  // unused for SqrtReal
    LogicalId out = kNoId;
};

// Up to four independent tasks are interleaved so that each accumulator chain
// gets three other instructions between its updates.
inline void emit_tasks(LayoutPlan& plan, CoreId core, std::uint32_t phase, const std::vector<DotTask>& tasks) {
    for (std::size_t first = 0; first < tasks.size(); first += 4) {
        const std::size_t cnt = std::min<std::size_t>(4, tasks.size() - first);
        std::size_t len = 0;
        for (std::size_t q = 0; q < cnt; ++q) {
            len = std::max(len, tasks[first + q].terms.size());
            plan.load(core, phase, tasks[first + q].init, static_cast<std::uint8_t>(q));
        }
        for (std::size_t k = 0; k < len; ++k) {
            LogicalId shared = kNoId;
            bool same_b = true;
            std::size_t active = 0;
            for (std::size_t q = 0; q < cnt; ++q) {
                const auto& t = tasks[first + q];
                if (k >= t.terms.size()) continue;
                if (shared == kNoId) shared = t.terms[k].second;
                same_b = same_b && t.terms[k].second == shared;
                ++active;
            }
            same_b = same_b && active > 1;
            if (same_b) plan.load(core, phase, shared, 12);
            for (std::size_t q = 0; q < cnt; ++q) {
                const auto& t = tasks[first + q];
                if (k >= t.terms.size()) continue;
                plan.load(core, phase, t.terms[k].first, static_cast<std::uint8_t>(4 + q));
                if (!same_b && t.terms[k].second != t.terms[k].first)
                    plan.load(core, phase, t.terms[k].second, static_cast<std::uint8_t>(8 + q));
            }
            for (std::size_t q = 0; q < cnt; ++q) {
                const auto& t = tasks[first + q];
                if (k >= t.terms.size()) continue;
                const auto acc = static_cast<std::uint8_t>(q);
                const auto ra = static_cast<std::uint8_t>(4 + q);
                std::uint8_t rb = same_b ? 12 : static_cast<std::uint8_t>(8 + q);
                if (!same_b && t.terms[k].second == t.terms[k].first) rb = ra;
                plan.compute(core, phase, MicroOp::compute(t.op, acc, acc, ra, rb));
            }
        }
        for (std::size_t q = 0; q < cnt; ++q) {
            const auto& t = tasks[first + q];
            const auto acc = static_cast<std::uint8_t>(q);
            if (t.finish == Opcode::SqrtReal) {
                plan.compute(core, phase, MicroOp::compute(Opcode::SqrtReal, acc, acc));
            } else {
                const auto rd = static_cast<std::uint8_t>(16 + q);
                plan.load(core, phase, t.divisor, rd);
                plan.compute(core, phase, MicroOp::compute(t.finish, acc, acc, rd));
            }
        }
        for (std::size_t q = 0; q < cnt; ++q) plan.store(core, phase, tasks[first + q].out, static_cast<std::uint8_t>(q));
    }
}

} // namespace detail

/// Cholesky-Crout over `cores`, split into units of cholesky_cores_per_unit(n).
/// For n >= 8 each item of a unit is a pair: instance 0 gives row i to unit core
/// i mod K and instance 1 mirrors it (row n-1-i takes that slot), so every core
/// holds a balanced mix of short top rows and long bottom rows.
inline CholeskyLayout cholesky_replicated(std::uint32_t n, const ClusterTopology& t, const std::vector<CoreId>& cores,
                                          CholeskyOptions opt = {}, MemoryAllocator* shared_alloc = nullptr) {
    require(n >= 4 && n % 4 == 0, ErrorKind::SizeMismatch, "cholesky layout needs n a multiple of 4");
    require(opt.items_per_unit >= 1, ErrorKind::InvalidArgument, "items_per_unit must be positive");
    const std::uint32_t k = cholesky_cores_per_unit(n);
    const std::uint32_t members = cholesky_members(n);
    require(!cores.empty() && cores.size() % k == 0, ErrorKind::SizeMismatch,
            std::to_string(n) + "x" + std::to_string(n) + " needs a multiple of " + std::to_string(k) + " cores");
    const auto nunits = static_cast<std::uint32_t>(cores.size() / k);
    const std::uint32_t items = opt.items_per_unit;

    CholeskyLayout out{LayoutPlan("cholesky", t.num_cores()), n, nunits * items * members, {}, {}, opt.solve, items};
    LayoutPlan& plan = out.plan;
    for (std::uint32_t u = 0; u < nunits; ++u) out.units.emplace_back(cores.begin() + u * k, cores.begin() + (u + 1) * k);
    plan.add_array("L", out.instances * n * n);
    plan.add_array("rhs", out.instances * n);
    if (opt.solve) out.solver.resize(out.instances);

    MemoryAllocator local_alloc(t);
    MemoryAllocator& alloc = shared_alloc ? *shared_alloc : local_alloc;
    const std::uint32_t rhs_rows = (n + 3) / 4;
    for (std::uint32_t u = 0; u < nunits; ++u) {
        const auto& unit = out.units[u];
        const std::vector<std::uint32_t> banks = alloc.banks_of(unit);
        const std::uint32_t base = alloc.rows(banks, items * members * (n + rhs_rows));
        for (std::uint32_t q = 0; q < items; ++q)
            for (std::uint32_t m = 0; m < members; ++m) {
                const std::uint32_t inst = (u * items + q) * members + m;
                const std::uint32_t region = base + (q * members + m) * (n + rhs_rows);
                for (std::uint32_t i = 0; i < n; ++i) {
                    const std::uint32_t r = m == 0 ? i : n - 1 - i;
                    const std::uint32_t bank = t.local_bank(unit[r % k], r / k);
                    for (std::uint32_t c = 0; c < n; ++c) plan.place(out.l(inst, i, c), t.physical(bank, region + c));
                }
                // the right-hand side sits with the core that solves it
                const CoreId solver = m == 0 ? unit.front() : unit.back();
                if (opt.solve) out.solver[inst] = solver;
                for (std::uint32_t i = 0; i < n; ++i)
                    plan.place(out.rhs(inst, i), t.physical(t.local_bank(solver, i % 4), region + n + i / 4));
            }
    }

    // Column j: phase 2j computes diagonals, phase 2j+1 the entries below them.
    for (std::uint32_t u = 0; u < nunits; ++u) {
        const auto& unit = out.units[u];
        for (std::uint32_t j = 0; j < n; ++j) {
            for (std::uint32_t pos = 0; pos < k; ++pos) {
                const CoreId core = unit[pos];
                std::vector<detail::DotTask> diag, below;
                // rotate the item order per core so concurrent reads of row j spread out
                for (std::uint32_t qq = 0; qq < items * members; ++qq) {
                    const std::uint32_t slot = (qq + pos) % (items * members);
                    const std::uint32_t inst = u * items * members + slot;
                    for (std::uint32_t i = j; i < n; ++i) {
                        if (out.owner(inst, i) != core) continue;
                        detail::DotTask task;
                        task.init = out.l(inst, i, j);
                        task.out = out.l(inst, i, j);
                        for (std::uint32_t c = 0; c < j; ++c) task.terms.emplace_back(out.l(inst, i, c), out.l(inst, j, c));
                        if (i == j) {
                            diag.push_back(std::move(task));
                        } else {
                            task.finish = Opcode::DivReal;
                            task.divisor = out.l(inst, j, j);
                            below.push_back(std::move(task));
                        }
                    }
                }
                detail::emit_tasks(plan, core, 2 * j, diag);
                detail::emit_tasks(plan, core, 2 * j + 1, below);
            }
            if (k > 1 && (j + 1 < n || opt.solve)) plan.sync(2 * j, unit);
        }
    }

    std::uint32_t last = 2 * n - 2;
    if (opt.solve) {
        // forward then backward substitution, one core per instance
        last = 2 * n;
        for (CoreId core : cores) {
            std::vector<std::uint32_t> mine;
            for (std::uint32_t inst = 0; inst < out.instances; ++inst)
                if (out.solver[inst] == core) mine.push_back(inst);
            for (std::uint32_t i = 0; i < n; ++i) {
                std::vector<detail::DotTask> tasks;
                for (std::uint32_t inst : mine) {
                    detail::DotTask task{out.rhs(inst, i), {}, Opcode::Msub, Opcode::Div, out.l(inst, i, i), out.rhs(inst, i)};
                    for (std::uint32_t c = 0; c < i; ++c) task.terms.emplace_back(out.l(inst, i, c), out.rhs(inst, c));
                    tasks.push_back(std::move(task));
                }
                detail::emit_tasks(plan, core, last, tasks);
            }
            for (std::uint32_t ii = n; ii-- > 0;) {
                std::vector<detail::DotTask> tasks;
                for (std::uint32_t inst : mine) {
                    detail::DotTask task{out.rhs(inst, ii), {}, Opcode::MsubConja, Opcode::DivConj, out.l(inst, ii, ii),
                                         out.rhs(inst, ii)};
                    for (std::uint32_t c = ii + 1; c < n; ++c) task.terms.emplace_back(out.l(inst, c, ii), out.rhs(inst, c));
                    tasks.push_back(std::move(task));
                }
                detail::emit_tasks(plan, core, last, tasks);
            }
        }
    }
    plan.sync(last, cores);
    return out;
}

/// One decomposition on exactly cholesky_cores_per_unit(n) cores: a mirrored
/// pair for n >= 8, a single instance for n == 4.
inline CholeskyLayout cholesky_layout(std::uint32_t n, const ClusterTopology& t, const std::vector<CoreId>& cores) {
    require(n >= 4 && n % 4 == 0 && cores.size() == cholesky_cores_per_unit(n), ErrorKind::SizeMismatch,
            std::to_string(n) + "x" + std::to_string(n) + " needs exactly " + std::to_string(cholesky_cores_per_unit(n)) +
                " cores");
    return cholesky_replicated(n, t, cores);
}

} // namespace poolsim
