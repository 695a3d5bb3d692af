// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <memory>
#include <vector>

#include "poolsim/kernels/driver.hpp"
#include "poolsim/kernels/stimulus.hpp"
#include "poolsim/layouts/estimation.hpp"
#include "poolsim/numerics/estimation.hpp"

namespace poolsim {

/// Pilot-symbol data of the estimation kernels. y[p] is beams x subcarriers,
/// x[p] users x subcarriers, h[sc] beams x users (NE only).
struct PilotData {
    std::vector<ComplexMatrix> y;
    std::vector<ComplexMatrix> x;
    std::vector<ComplexMatrix> h;
};

/// Random unit-modulus pilots, Gaussian observations and channel estimates.
inline PilotData random_pilots(const EstimationShape& s, std::uint64_t seed) {
    auto rng = stream_rng(seed, 0);
    PilotData d;
    for (std::uint32_t p = 0; p < s.pilots; ++p) {
        d.y.push_back(gaussian_matrix(s.beams, s.subcarriers, rng));
        ComplexMatrix x(s.users, s.subcarriers);
        for (std::uint32_t l = 0; l < s.users; ++l)
            for (std::uint32_t sc = 0; sc < s.subcarriers; ++sc) x(l, sc) = qpsk(rng);
        d.x.push_back(std::move(x));
    }
    for (std::uint32_t sc = 0; sc < s.subcarriers; ++sc) d.h.push_back(gaussian_matrix(s.beams, s.users, rng));
    return d;
}

namespace detail {

// Subcarriers [first, first + count) of the shape, as a stand-alone shape.
inline EstimationShape slice(EstimationShape s, std::uint64_t count) {
    s.subcarriers = static_cast<std::uint32_t>(count);
    return s;
}

} // namespace detail

/// Least-squares channel estimation on every pilot symbol. `estimates`, when
/// given, receives one beams x subcarriers matrix per pilot symbol.
inline KernelRun run_che(const EstimationShape& s, const ClusterTopology& t, const RunOptions& opt,
                         const PilotData* data = nullptr, std::vector<ComplexMatrix>* estimates = nullptr) {
    auto owned = std::make_shared<PilotData>(data ? PilotData{data->y, data->x, {}} : random_pilots(s, opt.seed));
    const std::vector<CoreId> cores = core_range(t, opt.cores);
    const std::uint64_t per_round =
        static_cast<std::uint64_t>(cores.size()) * std::max(1u, subcarriers_per_core(t, s.pilots * (s.beams + s.users)));
    auto gold = std::make_shared<std::vector<ComplexMatrix>>();
    for (std::uint32_t p = 0; p < s.pilots; ++p) gold->push_back(channel_estimate_ls(owned->y[p], owned->x[p]));
    if (estimates) estimates->assign(s.pilots, ComplexMatrix(s.beams, s.subcarriers));

    auto build = [&, owned, gold](std::uint64_t first, std::uint64_t cnt) {
        auto lay = std::make_shared<EstimationLayout>(che_layout(detail::slice(s, cnt), t, cores));
        Round r;
        r.plan = std::shared_ptr<const LayoutPlan>(lay, &lay->plan);
        r.stage = [lay, owned, first, cnt, s](std::span<cf32> mem) {
            for (std::uint32_t sc = 0; sc < cnt; ++sc)
                for (std::uint32_t p = 0; p < s.pilots; ++p) {
                    for (std::uint32_t b = 0; b < s.beams; ++b) mem[lay->plan.address(lay->y(p, b, sc))] = owned->y[p](b, first + sc);
                    for (std::uint32_t l = 0; l < s.users; ++l) mem[lay->plan.address(lay->x(p, l, sc))] = owned->x[p](l, first + sc);
                }
        };
        r.compare = [lay, gold, first, cnt, s, estimates](std::span<const cf32> mem) {
            double err = 0.0;
            for (std::uint32_t sc = 0; sc < cnt; ++sc)
                for (std::uint32_t p = 0; p < s.pilots; ++p)
                    for (std::uint32_t b = 0; b < s.beams; ++b) {
                        const cf32 v = mem[lay->plan.address(lay->y(p, b, sc))];
                        err = std::max(err, deviation(v, (*gold)[p](b, first + sc)));
                        if (estimates) (*estimates)[p](b, first + sc) = v;
                    }
            return err;
        };
        return r;
    };
    KernelRun run = drive_rounds("che", t, opt, s.subcarriers, per_round, build);
    run.useful_macs = static_cast<std::uint64_t>(s.pilots) * s.subcarriers * s.beams * s.users;
    return run;
}

/// Residual power per subcarrier, simulated; `residuals` receives the float
/// per-subcarrier sums that the host reduces into the noise variance.
inline KernelRun run_ne(const EstimationShape& s, const ClusterTopology& t, const RunOptions& opt,
                        const PilotData* data = nullptr, std::vector<float>* residuals = nullptr) {
    auto owned = std::make_shared<PilotData>(data ? *data : random_pilots(s, opt.seed));
    require(owned->h.size() == s.subcarriers, ErrorKind::DimensionMismatch, "one channel matrix per subcarrier required");
    const std::vector<CoreId> cores = core_range(t, opt.cores);
    const std::uint64_t per_round =
        static_cast<std::uint64_t>(cores.size()) * std::max(1u, subcarriers_per_core(t, ne_words(s)));
    if (residuals) residuals->assign(s.subcarriers, 0.0f);

    auto build = [&, owned](std::uint64_t first, std::uint64_t cnt) {
        auto lay = std::make_shared<EstimationLayout>(ne_layout(detail::slice(s, cnt), t, cores));
        Round r;
        r.plan = std::shared_ptr<const LayoutPlan>(lay, &lay->plan);
        r.stage = [lay, owned, first, cnt, s](std::span<cf32> mem) {
            for (std::uint32_t sc = 0; sc < cnt; ++sc) {
                for (std::uint32_t p = 0; p < s.pilots; ++p) {
                    for (std::uint32_t b = 0; b < s.beams; ++b) mem[lay->plan.address(lay->y(p, b, sc))] = owned->y[p](b, first + sc);
                    for (std::uint32_t l = 0; l < s.users; ++l) mem[lay->plan.address(lay->x(p, l, sc))] = owned->x[p](l, first + sc);
                }
                for (std::uint32_t b = 0; b < s.beams; ++b)
                    for (std::uint32_t l = 0; l < s.users; ++l) mem[lay->plan.address(lay->h(b, l, sc))] = owned->h[first + sc](b, l);
            }
        };
        r.compare = [lay, owned, first, cnt, s, residuals](std::span<const cf32> mem) {
            double err = 0.0;
            std::vector<cf32> ycol(s.beams), xcol(s.users);
            for (std::uint32_t sc = 0; sc < cnt; ++sc) {
                float gold = 0.0f;
                for (std::uint32_t p = 0; p < s.pilots; ++p) {
                    for (std::uint32_t b = 0; b < s.beams; ++b) ycol[b] = owned->y[p](b, first + sc);
                    for (std::uint32_t l = 0; l < s.users; ++l) xcol[l] = owned->x[p](l, first + sc);
                    gold = residual_power(ycol, owned->h[first + sc], xcol, gold);
                }
                const float got = mem[lay->plan.address(lay->residual(sc))].real();
                // relative: the sum grows with the number of beams
                err = std::max(err, std::abs(static_cast<double>(got) - gold) / std::max(1.0, std::abs(static_cast<double>(gold))));
                if (residuals) (*residuals)[first + sc] = got;
            }
            return err;
        };
        return r;
    };
    KernelRun run = drive_rounds("ne", t, opt, s.subcarriers, per_round, build);
    run.useful_macs = 2ull * s.pilots * s.subcarriers * s.beams * s.users;
    return run;
}

} // namespace poolsim
