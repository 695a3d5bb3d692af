// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <memory>
#include <vector>

#include "poolsim/kernels/driver.hpp"
#include "poolsim/kernels/stimulus.hpp"
#include "poolsim/layouts/cholesky.hpp"
#include "poolsim/layouts/mmm_schedule.hpp"
#include "poolsim/numerics/linalg.hpp"

namespace poolsim {

/// C = A B on the window schedule. Random operands unless given.
inline KernelRun run_mmm(std::uint32_t m, std::uint32_t n, std::uint32_t p, const ClusterTopology& t, const RunOptions& opt,
                         const ComplexMatrix* a_in = nullptr, const ComplexMatrix* b_in = nullptr,
                         ComplexMatrix* c_out = nullptr) {
    auto rng = stream_rng(opt.seed, 0);
    auto a = std::make_shared<ComplexMatrix>(a_in ? *a_in : gaussian_matrix(m, n, rng));
    auto b = std::make_shared<ComplexMatrix>(b_in ? *b_in : gaussian_matrix(n, p, rng));
    require(a->rows() == m && a->cols() == n && b->rows() == n && b->cols() == p, ErrorKind::DimensionMismatch,
            "mmm operands do not match the requested sizes");
    const std::vector<CoreId> cores = core_range(t, opt.cores);
    auto build = [&](std::uint64_t, std::uint64_t) {
        auto lay = std::make_shared<MmmLayout>(mmm_schedule(m, n, p, t, cores));
        Round r;
        r.plan = std::shared_ptr<const LayoutPlan>(lay, &lay->plan);
        r.stage = [lay, a, b](std::span<cf32> mem) {
            for (std::uint32_t i = 0; i < lay->m; ++i)
                for (std::uint32_t k = 0; k < lay->n; ++k) mem[lay->plan.address(lay->a(i, k))] = (*a)(i, k);
            for (std::uint32_t k = 0; k < lay->n; ++k)
                for (std::uint32_t j = 0; j < lay->p; ++j) mem[lay->plan.address(lay->b(k, j))] = (*b)(k, j);
        };
        r.compare = [lay, a, b, c_out](std::span<const cf32> mem) {
            const ComplexMatrix gold = mmm(*a, *b);
            double err = 0.0;
            for (std::uint32_t i = 0; i < lay->m; ++i)
                for (std::uint32_t j = 0; j < lay->p; ++j) {
                    const cf32 v = mem[lay->plan.address(lay->c(i, j))];
                    err = std::max(err, deviation(v, gold(i, j)));
                    if (c_out) (*c_out)(i, j) = v;
                }
            return err;
        };
        return r;
    };
    if (c_out) *c_out = ComplexMatrix(m, p);
    KernelRun run = drive_rounds("mmm", t, opt, 1, 1, build);
    run.useful_macs = static_cast<std::uint64_t>(m) * n * p;
    return run;
}

/// One linear system for the decomposition kernels: G (Hermitian positive
/// definite) and, for MMSE, the right-hand side H^H y.
struct HermitianSystem {
    ComplexMatrix g;
    std::vector<cf32> rhs;
};

using SystemSource = std::function<HermitianSystem(std::uint64_t index)>;

/// Entries of L and the solution of system i, as produced by the simulation.
struct SystemResult {
    std::vector<cf32> solution;
};

namespace detail {

inline std::uint32_t padded_order(std::uint32_t n) { return std::max(4u, (n + 3) / 4 * 4); }

// Items each unit can take per round, capped by the local memory the layout needs.
inline std::uint32_t fitting_items(std::uint32_t np, const ClusterTopology& t, std::uint32_t wanted) {
    const std::uint32_t per_item = cholesky_members(np) * (np + (np + 3) / 4);
    const std::uint32_t rows = t.words_per_bank - 1;
    require(per_item <= rows, ErrorKind::OutOfMemory, "one decomposition does not fit the local banks");
    return std::max(1u, std::min(wanted, rows / per_item));
}

inline KernelRun run_systems(const std::string& kernel, std::uint32_t n, std::uint64_t count, bool solve,
                             const ClusterTopology& t, const RunOptions& opt, SystemSource source,
                             std::vector<SystemResult>* results) {
    require(n >= 1, ErrorKind::InvalidArgument, "matrix order must be positive");
    const std::uint32_t np = padded_order(n);
    const std::vector<CoreId> cores = core_range(t, opt.cores);
    const std::uint32_t k = cholesky_cores_per_unit(np);
    const auto ncores = static_cast<std::uint32_t>(cores.size());
    const std::uint32_t units = std::max(1u, ncores / k);
    const std::uint32_t items = fitting_items(np, t, opt.batch);
    const std::uint32_t per_round = units * items * cholesky_members(np);
    if (results) results->assign(count, {});

    auto build = [&](std::uint64_t first, std::uint64_t cnt) {
        // fill only the units the round needs
        const std::uint32_t per_unit = items * cholesky_members(np);
        const auto used_units = static_cast<std::uint32_t>((cnt + per_unit - 1) / per_unit);
        const std::uint32_t round_items =
            static_cast<std::uint32_t>((cnt + static_cast<std::uint64_t>(used_units) * cholesky_members(np) - 1) /
                                       (static_cast<std::uint64_t>(used_units) * cholesky_members(np)));
        std::vector<CoreId> unit_cores(static_cast<std::size_t>(used_units) * k);
        std::iota(unit_cores.begin(), unit_cores.end(), 0);
        auto lay = std::make_shared<CholeskyLayout>(cholesky_replicated(np, t, unit_cores, {round_items, solve}));
        auto plan = std::make_shared<LayoutPlan>(ncores < k ? remap(lay->plan, cores) : lay->plan);
        auto systems = std::make_shared<std::vector<HermitianSystem>>();
        for (std::uint64_t j = 0; j < cnt; ++j) {
            systems->push_back(source(first + j));
            const auto& s = systems->back();
            require(s.g.rows() == n && s.g.cols() == n && (!solve || s.rhs.size() == n), ErrorKind::DimensionMismatch,
                    kernel + ": system shape differs from the requested order");
        }
        Round r;
        r.plan = plan;
        r.stage = [lay, systems, np, n, solve](std::span<cf32> mem) {
            for (std::size_t j = 0; j < lay->instances; ++j) {
                const auto inst = static_cast<std::uint32_t>(j);
                // unused instances and padding decompose the identity
                for (std::uint32_t i = 0; i < np; ++i) {
                    for (std::uint32_t c = 0; c <= i; ++c) {
                        cf32 v = i == c ? cf32(1.0f) : cf32(0.0f);
                        if (j < systems->size() && i < n) v = (*systems)[j].g(i, c);
                        mem[lay->plan.address(lay->l(inst, i, c))] = v;
                    }
                    if (solve)
                        mem[lay->plan.address(lay->rhs(inst, i))] =
                            j < systems->size() && i < n ? (*systems)[j].rhs[i] : cf32(0.0f);
                }
            }
        };
        r.compare = [lay, systems, n, solve, first, results](std::span<const cf32> mem) {
            double err = 0.0;
            for (std::size_t j = 0; j < systems->size(); ++j) {
                const auto inst = static_cast<std::uint32_t>(j);
                const ComplexMatrix l = cholesky_crout((*systems)[j].g);
                for (std::uint32_t i = 0; i < n; ++i)
                    for (std::uint32_t c = 0; c <= i; ++c)
                        err = std::max(err, deviation(mem[lay->plan.address(lay->l(inst, i, c))], l(i, c)));
                if (!solve) continue;
                const ComplexVector x = solve_upper(l, solve_lower(l, ComplexVector((*systems)[j].rhs)));
                std::vector<cf32> got(n);
                for (std::uint32_t i = 0; i < n; ++i) {
                    got[i] = mem[lay->plan.address(lay->rhs(inst, i))];
                    err = std::max(err, deviation(got[i], x[i]));
                }
                if (results) (*results)[first + j].solution = std::move(got);
            }
            return err;
        };
        return r;
    };
    return drive_rounds(kernel, t, opt, count, per_round, build);
}

} // namespace detail

/// `count` Cholesky-Crout decompositions of order n (padded to a multiple of 4
/// with an identity block).
inline KernelRun run_cholesky(std::uint32_t n, std::uint64_t count, const ClusterTopology& t, const RunOptions& opt,
                              SystemSource source = {}) {
    if (!source) source = [&](std::uint64_t i) {
        auto rng = stream_rng(opt.seed, i);
        return HermitianSystem{random_hpd_matrix(n, rng), {}};
    };
    KernelRun run = detail::run_systems("cholesky", n, count, false, t, opt, source, nullptr);
    run.useful_macs = count * (static_cast<std::uint64_t>(n) * n * n / 3);
    return run;
}

/// `count` MMSE solves (H^H H + sigma2 I) x = H^H y for N_L = n users. The
/// Gramian and matched filter are formed on the host, the decomposition and
/// both substitutions are simulated.
inline KernelRun run_mmse(std::uint32_t n, std::uint64_t count, const ClusterTopology& t, const RunOptions& opt,
                          SystemSource source = {}, std::vector<SystemResult>* results = nullptr) {
    if (!source) source = [&](std::uint64_t i) {
        auto rng = stream_rng(opt.seed, i);
        const ComplexMatrix h = gaussian_matrix(2 * n, n, rng);
        const ComplexVector y(complex_gaussian(2 * n, rng));
        return HermitianSystem{gramian(h, NoiseVariance(0.1)), matched_filter(h, y).values()};
    };
    KernelRun run = detail::run_systems("mmse", n, count, true, t, opt, source, results);
    const std::uint64_t nn = n;
    run.useful_macs = count * (nn * nn * nn / 3 + 2 * nn * nn);
    return run;
}

} // namespace poolsim
