// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#include <gtest/gtest.h>

#include "poolsim/kernels/estimation.hpp"
#include "poolsim/kernels/fft.hpp"
#include "poolsim/kernels/linalg.hpp"
#include "poolsim/numerics/oracles.hpp"

namespace poolsim {
namespace {

RunOptions quick(std::uint32_t cores = 0, std::uint32_t batch = 1) {
    RunOptions o;
    o.cores = cores;
    o.batch = batch;
    return o;
}

void expect_sane(const KernelRun& r, std::uint32_t cores) {
    EXPECT_TRUE(r.verified) << r.kernel << " error " << r.max_error;
    EXPECT_TRUE(r.stats.accounting_exact()) << r.kernel;
    EXPECT_GT(r.cycles, 0u);
    EXPECT_LE(r.speedup(), static_cast<double>(cores) + 1e-9) << r.kernel;
    if (cores > 1) {
        EXPECT_GT(r.speedup(), 1.0) << r.kernel;
    }
    EXPECT_LE(r.stats.macs_per_cycle(), static_cast<double>(r.stats.active_cores()));
}

TEST(FftKernel, MatchesTheDftOracle) {
    const auto t = ClusterTopology::minpool();
    for (std::uint32_t n : {16u, 64u, 256u}) {
        std::vector<std::vector<cf32>> spectra;
        auto rng = stream_rng(5, n);
        std::vector<std::vector<cf32>> inputs;
        for (int i = 0; i < 6; ++i) inputs.push_back(complex_gaussian(n, rng));
        const KernelRun r = run_fft(n, inputs.size(), t, quick(), [&](std::uint64_t i) { return inputs[i]; }, &spectra);
        expect_sane(r, 16);
        EXPECT_EQ(r.max_error, 0.0);
        EXPECT_EQ(r.locality.conflict_count, 0u);
        EXPECT_DOUBLE_EQ(r.locality.local_read_fraction, 1.0);
        ASSERT_EQ(spectra.size(), inputs.size());
        for (std::size_t i = 0; i < inputs.size(); ++i)
            EXPECT_LE(oracle::relative_error(spectra[i], oracle::dft(oracle::widen(inputs[i]))), 1e-5) << n;
    }
}

TEST(FftKernel, SpeedupGrowsWithCores) {
    const auto t = ClusterTopology::minpool();
    double last = 0.0;
    for (std::uint32_t c : {1u, 4u, 16u}) {
        const KernelRun r = run_fft(256, 16, t, quick(c));
        expect_sane(r, c);
        EXPECT_GE(r.speedup(), last) << c;
        last = r.speedup();
    }
    EXPECT_GT(last, 8.0);
}

TEST(FftKernel, BatchingDoesNotRaiseWfi) {
    const auto t = ClusterTopology::minpool();
    const KernelRun one = run_fft(256, 16, t, quick(0, 1));
    const KernelRun four = run_fft(256, 16, t, quick(0, 4));
    EXPECT_LE(four.stats.fraction(&CoreStats::wfi), one.stats.fraction(&CoreStats::wfi));
    EXPECT_GE(four.stats.ipc(), one.stats.ipc());
    EXPECT_LE(four.cycles, one.cycles);
}

TEST(MmmKernel, MatchesTheDoubleProduct) {
    const auto t = ClusterTopology::minpool();
    auto rng = stream_rng(9, 0);
    const ComplexMatrix a = gaussian_matrix(32, 16, rng);
    const ComplexMatrix b = gaussian_matrix(16, 32, rng);
    ComplexMatrix c(1, 1);
    const KernelRun r = run_mmm(32, 16, 32, t, quick(), &a, &b, &c);
    expect_sane(r, 16);
    EXPECT_EQ(r.max_error, 0.0);
    EXPECT_EQ(r.useful_macs, 32u * 16u * 32u);
    EXPECT_LE(oracle::relative_error(c.data(), oracle::mmm(a, b)), 1e-5);
}

TEST(MmmKernel, OddShapesArePadded) {
    const auto t = ClusterTopology::minpool();
    const KernelRun r = run_mmm(10, 7, 6, t, quick(4));
    expect_sane(r, 4);
}

TEST(MmmKernel, CoreSweep) {
    const auto t = ClusterTopology::minpool();
    double last = 0.0;
    for (std::uint32_t c : {1u, 4u, 16u}) {
        const KernelRun r = run_mmm(64, 32, 64, t, quick(c));
        expect_sane(r, c);
        EXPECT_GE(r.speedup(), last);
        last = r.speedup();
        if (c == 16) {
            EXPECT_GE(r.stats.ipc(), 0.5);
        }
    }
}

TEST(CholeskyKernel, PairsOfEight) {
    const auto t = ClusterTopology::minpool();
    const KernelRun r = run_cholesky(8, 16, t, quick());
    expect_sane(r, 16);
    EXPECT_EQ(r.max_error, 0.0);
    EXPECT_EQ(r.instances, 16u);
}

TEST(CholeskyKernel, PaddedOrders) {
    const auto t = ClusterTopology::minpool();
    for (std::uint32_t n : {2u, 3u, 5u, 6u}) {
        const KernelRun r = run_cholesky(n, 20, t, quick());
        expect_sane(r, 16);
    }
}

TEST(CholeskyKernel, BatchingDoesNotRaiseWfi) {
    const auto t = ClusterTopology::minpool();
    const KernelRun one = run_cholesky(4, 64, t, quick(0, 1));
    const KernelRun four = run_cholesky(4, 64, t, quick(0, 4));
    EXPECT_LE(four.stats.fraction(&CoreStats::wfi), one.stats.fraction(&CoreStats::wfi));
    EXPECT_LT(four.rounds, one.rounds);
}

TEST(MmseKernel, SolvesAgainstTheNormalEquations) {
    const auto t = ClusterTopology::minpool();
    for (std::uint32_t n : {3u, 4u, 8u}) {
        std::vector<ComplexMatrix> hs;
        std::vector<std::vector<cf32>> ys;
        auto rng = stream_rng(3, n);
        for (int i = 0; i < 10; ++i) {
            hs.push_back(gaussian_matrix(2 * n, n, rng));
            ys.push_back(complex_gaussian(2 * n, rng));
        }
        const NoiseVariance nv(0.1);
        std::vector<SystemResult> out;
        const KernelRun r = run_mmse(
            n, hs.size(), t, quick(),
            [&](std::uint64_t i) {
                return HermitianSystem{gramian(hs[i], nv), matched_filter(hs[i], ComplexVector(ys[i])).values()};
            },
            &out);
        expect_sane(r, 16);
        for (std::size_t i = 0; i < hs.size(); ++i)
            EXPECT_LE(oracle::relative_error(out[i].solution, oracle::normal_equations(hs[i], ys[i], 0.1)), 1e-4);
    }
}

TEST(MmseKernel, FewerCoresThanAUnit) {
    const auto t = ClusterTopology::minpool();
    const KernelRun r = run_mmse(16, 2, t, quick(2));
    expect_sane(r, 2);
    EXPECT_EQ(r.cores, 2u);
}

TEST(EstimationKernels, ChannelEstimate) {
    const auto t = ClusterTopology::minpool();
    const EstimationShape s{8, 4, 2, 100};
    const PilotData d = random_pilots(s, 4);
    std::vector<ComplexMatrix> est;
    const KernelRun r = run_che(s, t, quick(), &d, &est);
    expect_sane(r, 16);
    EXPECT_EQ(r.max_error, 0.0);
    for (std::uint32_t p = 0; p < s.pilots; ++p) {
        const ComplexMatrix gold = channel_estimate_ls(d.y[p], d.x[p]);
        for (std::uint32_t sc = 0; sc < s.subcarriers; sc += 7)
            for (std::uint32_t b = 0; b < s.beams; ++b) {
                const cf64 want = cf64(d.y[p](b, sc)) / cf64(d.x[p](sc % s.users, sc));
                EXPECT_NEAR(std::abs(cf64(est[p](b, sc)) - want), 0.0, 1e-5);
                EXPECT_EQ(est[p](b, sc), gold(b, sc));
            }
    }
}

TEST(EstimationKernels, NoiseResiduals) {
    const auto t = ClusterTopology::minpool();
    const EstimationShape s{8, 4, 2, 100};
    const PilotData d = random_pilots(s, 6);
    std::vector<float> res;
    const KernelRun r = run_ne(s, t, quick(), &d, &res);
    expect_sane(r, 16);
    // each subcarrier's residual in double
    for (std::uint32_t sc = 0; sc < s.subcarriers; ++sc) {
        double want = 0.0;
        for (std::uint32_t p = 0; p < s.pilots; ++p)
            for (std::uint32_t b = 0; b < s.beams; ++b) {
                cf64 e = cf64(d.y[p](b, sc));
                for (std::uint32_t l = 0; l < s.users; ++l) e -= cf64(d.h[sc](b, l)) * cf64(d.x[p](l, sc));
                want += std::norm(e);
            }
        EXPECT_NEAR(res[sc], want, 1e-4 * std::max(1.0, want));
    }
}

TEST(Driver, DeterministicStats) {
    const auto t = ClusterTopology::minpool();
    const KernelRun a = run_cholesky(4, 40, t, quick(0, 2));
    const KernelRun b = run_cholesky(4, 40, t, quick(0, 2));
    EXPECT_EQ(a.cycles, b.cycles);
    EXPECT_EQ(a.serial_cycles, b.serial_cycles);
    EXPECT_EQ(a.stats.total_cycles, b.stats.total_cycles);
    ASSERT_EQ(a.stats.cores.size(), b.stats.cores.size());
    for (std::size_t c = 0; c < a.stats.cores.size(); ++c) EXPECT_EQ(a.stats.cores[c], b.stats.cores[c]);
}

TEST(Driver, ExtrapolatesFromTheFirstRounds) {
    const auto t = ClusterTopology::minpool();
    const KernelRun all = run_fft(64, 64, t, quick());
    RunOptions o = quick();
    o.max_rounds = 1;
    const KernelRun some = run_fft(64, 64, t, o);
    EXPECT_TRUE(some.extrapolated);
    EXPECT_LT(some.simulated_rounds, all.simulated_rounds);
    EXPECT_EQ(some.rounds, all.rounds);
    EXPECT_EQ(some.serial_cycles, all.serial_cycles);
    EXPECT_NEAR(static_cast<double>(some.cycles), static_cast<double>(all.cycles), 0.05 * static_cast<double>(all.cycles));
}

TEST(Driver, RejectsTooManyCores) {
    EXPECT_THROW(run_fft(64, 1, ClusterTopology::minpool(), quick(17)), Error);
}

TEST(Driver, CheckThrowsOnMismatch) {
    KernelRun r;
    r.kernel = "x";
    r.max_error = 1.0;
    EXPECT_THROW(r.check(), Error);
    try {
        r.check();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::GoldenMismatch);
    }
}

TEST(FullPresets, OneSizeEach) {
    const auto mp = ClusterTopology::mempool();
    expect_sane(run_fft(256, 16, mp, quick()), 256);
    expect_sane(run_mmm(64, 32, 64, mp, quick()), 256);
    expect_sane(run_cholesky(4, 512, mp, quick()), 256);
    expect_sane(run_che({32, 4, 2, 512}, mp, quick()), 256);
    const auto tp = ClusterTopology::terapool();
    expect_sane(run_fft(1024, 16, tp, quick()), 1024);
}

} // namespace
} // namespace poolsim
