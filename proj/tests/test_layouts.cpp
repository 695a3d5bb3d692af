// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <set>

#include "poolsim/engine/simulator.hpp"
#include "poolsim/layouts/cholesky.hpp"
#include "poolsim/layouts/fft_fold.hpp"
#include "poolsim/layouts/lowering.hpp"
#include "poolsim/layouts/mmm_schedule.hpp"
#include "poolsim/layouts/verify.hpp"
#include "poolsim/numerics/fft.hpp"
#include "poolsim/numerics/linalg.hpp"
#include "support.hpp"

namespace poolsim {
namespace {

std::vector<CoreId> first_cores(std::uint32_t n) {
    std::vector<CoreId> c(n);
    std::iota(c.begin(), c.end(), 0);
    return c;
}

// Bank (global) that holds a logical element.
std::uint32_t bank_of(const LayoutPlan& plan, const ClusterTopology& t, LogicalId id) {
    return t.bank_of(plan.address(id));
}

TEST(FftFold, ReplicationCounts) {
    const auto mp = ClusterTopology::mempool();
    const auto tp = ClusterTopology::terapool();
    EXPECT_EQ(fft_replication(256, mp).instances, 16u);
    EXPECT_EQ(fft_replication(4096, mp).instances, 1u);
    EXPECT_EQ(fft_replication(256, tp).instances, 64u);
    EXPECT_EQ(fft_replication(4096, tp).instances, 4u);
    EXPECT_EQ(fft_replication(4, mp).instances, 256u);
    EXPECT_THROW(fft_replication(8, mp), Error);
    EXPECT_THROW(fft_replication(4096, ClusterTopology::minpool()), Error);
}

TEST(FftFold, SlotsAreABijectionPerStage) {
    for (std::uint32_t n : {16u, 64u, 256u, 1024u}) {
        const std::uint32_t k = fft_cores_per_instance(n);
        for (std::uint32_t s = 0; s <= log4(n); ++s) {
            std::set<std::uint32_t> seen;
            for (std::uint32_t e = 0; e < n; ++e) {
                const FoldSlot f = fold_slot(n, s, e);
                ASSERT_LT(f.core, k);
                ASSERT_LT(f.bank, 4u);
                ASSERT_LT(f.row, 4u);
                seen.insert(f.core * 16 + f.bank * 4 + f.row);
            }
            EXPECT_EQ(seen.size(), n) << n << " stage " << s;
        }
    }
}

TEST(FftFold, LocalAndConflictFreeOnBothPresets) {
    for (const auto& t : {ClusterTopology::mempool(), ClusterTopology::terapool()})
        for (std::uint32_t n : {16u, 64u, 256u, 1024u, 4096u}) {
            const FftLayout lay = fft_fold_plan(n, t, fft_replication(n, t));
            lay.plan.validate(t);
            const LocalityReport r = verify_conflict_free(lay.plan, t);
            EXPECT_DOUBLE_EQ(r.local_read_fraction, 1.0) << t.name << " " << n;
            EXPECT_EQ(r.conflict_count, 0u) << t.name << " " << n;
        }
}

TEST(FftFold, UnfoldedControlIsMostlyRemote) {
    const auto t = ClusterTopology::mempool();
    for (std::uint32_t n : {64u, 256u, 1024u}) {
        const FftLayout lay = fft_unfolded_layout(n, t);
        const LocalityReport r = verify_conflict_free(lay.plan, t, {"data"});
        ASSERT_EQ(r.phase_local_fraction.size(), log4(n));
        // 1 of the 4 butterfly inputs is local on every stage that spans banks
        for (std::uint32_t s = 0; s + 1 < log4(n); ++s) EXPECT_DOUBLE_EQ(r.phase_local_fraction[s], 0.25) << n;
        // the last stage works on 4 consecutive elements, all in the core's banks
        const double stages = log4(n);
        EXPECT_DOUBLE_EQ(r.local_read_fraction, ((stages - 1) * 0.25 + 1.0) / stages);
    }
}

TEST(FftFold, ProducesTheSpectrumThroughTheEngine) {
    const auto t = ClusterTopology::minpool();
    const std::uint32_t n = 256;
    const FftLayout lay = fft_fold_layout(n, t, first_cores(fft_cores_per_instance(n)));
    Simulator sim(t);
    for (auto [id, v] : lay.constants) sim.memory()[lay.plan.address(id)] = v;
    const auto x = testing::random_values(n, 3);
    for (std::uint32_t e = 0; e < n; ++e) sim.memory()[lay.plan.address(lay.input(0, 0, e))] = x[e];
    const CycleStats st = sim.run(lower(lay.plan, t));
    EXPECT_TRUE(st.accounting_exact());
    const ComplexVector gold = fft_radix4(ComplexVector(x), TwiddleTable(n));
    for (std::uint32_t e = 0; e < n; ++e)
        EXPECT_EQ(sim.memory()[lay.plan.address(lay.output(0, 0, e))], gold[digit_reverse4(e, log4(n))]);
}

TEST(MmmSchedule, EightCubedOnOneTile) {
    const auto t = ClusterTopology::minpool();
    const MmmLayout lay = mmm_schedule(8, 8, 8, t, first_cores(4));
    ASSERT_EQ(lay.assignment.size(), 4u);
    std::set<std::pair<std::uint32_t, std::uint32_t>> windows;
    std::set<std::uint32_t> col_starts;
    for (const auto& a : lay.assignment) {
        ASSERT_EQ(a.tasks.size(), 1u);
        ASSERT_EQ(a.tasks[0].col_blocks.size(), 1u);
        windows.insert({a.tasks[0].row_block, a.tasks[0].col_blocks[0]});
        col_starts.insert(4 * a.tasks[0].col_blocks[0]);
    }
    EXPECT_EQ(windows.size(), 4u);
    EXPECT_EQ(col_starts, (std::set<std::uint32_t>{0, 4}));
    EXPECT_FALSE(lay.plan.has_flag("dimension_too_small"));
}

// Every output element is written by exactly one store.
void expect_partition(const MmmLayout& lay) {
    std::map<LogicalId, int> writes;
    for (CoreId c = 0; c < lay.plan.num_cores(); ++c)
        for (const auto& ph : lay.plan.core_work(c))
            for (const auto& op : ph)
                if (op.op.kind == OpKind::Store) ++writes[op.id];
    ASSERT_EQ(writes.size(), static_cast<std::size_t>(lay.mp) * lay.pp);
    for (std::uint32_t i = 0; i < lay.mp; ++i)
        for (std::uint32_t j = 0; j < lay.pp; ++j) EXPECT_EQ(writes[lay.c(i, j)], 1);
}

TEST(MmmSchedule, WindowsPartitionTheOutput) {
    const auto t = ClusterTopology::minpool();
    for (std::uint32_t cores : {1u, 3u, 4u, 16u}) expect_partition(mmm_schedule(32, 16, 32, t, first_cores(cores)));
    expect_partition(mmm_schedule(10, 7, 6, t, first_cores(16)));
    expect_partition(mmm_schedule(256, 128, 256, ClusterTopology::mempool(), first_cores(256)));
}

TEST(MmmSchedule, EightLoadsPerSixteenMacs) {
    const auto t = ClusterTopology::mempool();
    const MmmLayout lay = mmm_schedule(256, 128, 256, t, first_cores(256));
    for (CoreId c : {0u, 77u, 255u}) {
        std::size_t loads = 0, macs = 0;
        for (const auto& op : lay.plan.core_work(c).at(0)) {
            loads += op.op.kind == OpKind::Load;
            macs += op.op.kind == OpKind::Compute && is_mac(op.op.code);
        }
        ASSERT_GT(macs, 0u);
        EXPECT_EQ(loads * 16, macs * 8) << "core " << c;
    }
}

TEST(MmmSchedule, TileMatesReadARowsFromDistinctGroups) {
    const auto t = ClusterTopology::mempool();
    const MmmLayout lay = mmm_schedule(256, 128, 256, t, first_cores(256));
    const LocalityReport r = verify_conflict_free(lay.plan, t, {"A"});
    EXPECT_EQ(r.max_tile_to_group_collisions, 0u);
}

TEST(MmmSchedule, ForcedSameGroupRowsAreFlagged) {
    const auto t = ClusterTopology::mempool();
    // rows 4rb.. of a 128-column A sit in group (rb / 2) mod 4 at equal k; give
    // the four tile-mates row blocks 0, 2, 4, 6 without any rotation
    MmmOptions opt;
    opt.stagger = false;
    opt.row_block_order = {0, 2, 4, 6, 1, 3, 5, 7};
    const MmmLayout lay = mmm_schedule(32, 128, 16, t, first_cores(4), opt);
    const LocalityReport r = verify_conflict_free(lay.plan, t, {"A"});
    EXPECT_GT(r.max_tile_to_group_collisions, 0u);
}

TEST(MmmSchedule, TooFewWindows) {
    const auto t = ClusterTopology::minpool();
    const MmmLayout lay = mmm_schedule(4, 4, 8, t, first_cores(4));
    EXPECT_TRUE(lay.plan.has_flag("dimension_too_small"));
    EXPECT_EQ(lay.assignment.size(), 2u);
    MmmOptions strict;
    strict.strict = true;
    try {
        mmm_schedule(4, 4, 8, t, first_cores(4), strict);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionTooSmall);
    }
}

TEST(MmmSchedule, IdentityThroughTheEngine) {
    const auto t = ClusterTopology::minpool();
    const std::uint32_t m = 12, n = 8;
    const MmmLayout lay = mmm_schedule(m, n, n, t, first_cores(16));
    const auto a = testing::random_matrix(m, n, 5);
    Simulator sim(t);
    for (std::uint32_t i = 0; i < m; ++i)
        for (std::uint32_t k = 0; k < n; ++k) {
            sim.memory()[lay.plan.address(lay.a(i, k))] = a(i, k);
            sim.memory()[lay.plan.address(lay.b(i % n, k))] = i % n == k ? cf32(1.0f) : cf32(0.0f);
        }
    sim.run(lower(lay.plan, t));
    for (std::uint32_t i = 0; i < m; ++i)
        for (std::uint32_t j = 0; j < n; ++j) EXPECT_EQ(sim.memory()[lay.plan.address(lay.c(i, j))], a(i, j));
}

TEST(CholeskyLayout, SixteenPairOnFourCores) {
    const auto t = ClusterTopology::minpool();
    const CholeskyLayout lay = cholesky_layout(16, t, first_cores(4));
    ASSERT_EQ(lay.instances, 2u);
    for (CoreId c = 0; c < 4; ++c) {
        std::set<std::uint32_t> m1, m2;
        for (std::uint32_t i = 0; i < 16; ++i) {
            if (lay.owner(0, i) == c) m1.insert(i);
            if (lay.owner(1, i) == c) m2.insert(i);
        }
        EXPECT_EQ(m1, (std::set<std::uint32_t>{c, c + 4, c + 8, c + 12}));
        EXPECT_EQ(m2, (std::set<std::uint32_t>{15 - c, 11 - c, 7 - c, 3 - c}));
    }
    EXPECT_THROW(cholesky_layout(16, t, first_cores(3)), Error);
    EXPECT_THROW(cholesky_layout(6, t, first_cores(1)), Error);
}

TEST(CholeskyLayout, RowsStayInOneOwnerBank) {
    const auto t = ClusterTopology::minpool();
    for (std::uint32_t n : {4u, 8u, 16u, 32u}) {
        const CholeskyLayout lay = cholesky_layout(n, t, first_cores(cholesky_cores_per_unit(n)));
        for (std::uint32_t inst = 0; inst < lay.instances; ++inst)
            for (std::uint32_t i = 0; i < n; ++i) {
                const std::uint32_t bank = bank_of(lay.plan, t, lay.l(inst, i, 0));
                EXPECT_EQ(bank / 4, lay.owner(inst, i)) << n;
                for (std::uint32_t k = 1; k < n; ++k) EXPECT_EQ(bank_of(lay.plan, t, lay.l(inst, i, k)), bank);
            }
    }
}

TEST(CholeskyLayout, MirroredPairBalancesWork) {
    const auto t = ClusterTopology::mempool();
    for (std::uint32_t n : {8u, 16u, 32u}) {
        const CholeskyLayout lay = cholesky_layout(n, t, first_cores(n / 4));
        std::vector<double> elements(n / 4, 0.0);
        for (std::uint32_t inst = 0; inst < 2; ++inst)
            for (std::uint32_t i = 0; i < n; ++i) elements[lay.owner(inst, i)] += i + 1;
        const double mean = std::accumulate(elements.begin(), elements.end(), 0.0) / elements.size();
        for (double e : elements) EXPECT_LE(std::abs(e - mean), n / 4.0) << n;
    }
}

TEST(CholeskyLayout, ClusterCapacity) {
    const auto mp = ClusterTopology::mempool();
    const auto tp = ClusterTopology::terapool();
    EXPECT_EQ(cholesky_capacity(4, mp), 256u);
    EXPECT_EQ(cholesky_capacity(4, tp), 1024u);
    EXPECT_EQ(cholesky_capacity(32, mp), 32u);
    EXPECT_EQ(cholesky_capacity(32, tp), 128u);
    // the whole cluster holds them at once
    EXPECT_NO_THROW(cholesky_replicated(32, mp, first_cores(256)));
    EXPECT_NO_THROW(cholesky_replicated(4, tp, first_cores(1024)));
}

TEST(CholeskyLayout, FactorAndSolveThroughTheEngine) {
    const auto t = ClusterTopology::minpool();
    for (std::uint32_t n : {4u, 8u, 16u}) {
        const CholeskyLayout lay = cholesky_replicated(n, t, first_cores(8 / cholesky_cores_per_unit(n) * cholesky_cores_per_unit(n)),
                                                       {2, true});
        Simulator sim(t);
        std::vector<ComplexMatrix> g;
        std::vector<ComplexVector> b;
        for (std::uint32_t inst = 0; inst < lay.instances; ++inst) {
            g.push_back(testing::random_hpd(n, inst + 1));
            b.push_back(testing::random_vector(n, inst + 50));
            for (std::uint32_t i = 0; i < n; ++i) {
                for (std::uint32_t k = 0; k <= i; ++k) sim.memory()[lay.plan.address(lay.l(inst, i, k))] = g[inst](i, k);
                sim.memory()[lay.plan.address(lay.rhs(inst, i))] = b[inst][i];
            }
        }
        const CycleStats st = sim.run(lower(lay.plan, t));
        EXPECT_TRUE(st.accounting_exact());
        for (std::uint32_t inst = 0; inst < lay.instances; ++inst) {
            const ComplexMatrix l = cholesky_crout(g[inst]);
            const ComplexVector x = solve_upper(l, solve_lower(l, b[inst]));
            for (std::uint32_t i = 0; i < n; ++i) {
                for (std::uint32_t k = 0; k <= i; ++k) EXPECT_EQ(sim.memory()[lay.plan.address(lay.l(inst, i, k))], l(i, k));
                EXPECT_EQ(sim.memory()[lay.plan.address(lay.rhs(inst, i))], x[i]);
            }
        }
    }
}

TEST(PlanJson, DumpsPlacementAndPhases) {
    const auto t = ClusterTopology::minpool();
    const MmmLayout lay = mmm_schedule(8, 4, 8, t, first_cores(4));
    const auto j = to_json(lay.plan, t);
    EXPECT_EQ(j["kernel"], "mmm");
    ASSERT_EQ(j["arrays"].size(), 3u);
    EXPECT_EQ(j["arrays"][0]["name"], "A");
    EXPECT_EQ(j["arrays"][0]["placement"].size(), 32u);
    EXPECT_EQ(j["arrays"][0]["placement"][0].size(), 4u);
    EXPECT_EQ(j["sync_points"].size(), 1u);
    EXPECT_EQ(to_json(lay.plan, t).dump(), j.dump());
}

TEST(Lowering, BarrierSlotsDoNotOverlap) {
    const auto t = ClusterTopology::minpool();
    const FftLayout lay = fft_fold_plan(256, t, fft_replication(256, t), 2);
    const auto progs = lower(lay.plan, t);
    ASSERT_EQ(progs.size(), t.num_cores());
    Simulator sim(t);
    EXPECT_NO_THROW(sim.run(progs));
}

} // namespace
} // namespace poolsim
