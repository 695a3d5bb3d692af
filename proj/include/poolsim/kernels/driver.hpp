// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "poolsim/engine/simulator.hpp"
#include "poolsim/layouts/lowering.hpp"
#include "poolsim/layouts/plan.hpp"
#include "poolsim/layouts/verify.hpp"

namespace poolsim {

inline constexpr double kGoldenTolerance = 1e-4;

struct RunOptions {
    EngineConfig engine{};
    /// Cores to use, 0 for the whole cluster.
    std::uint32_t cores = 0;
    /// Independent instances per unit between the same barriers.
    std::uint32_t batch = 1;
    std::uint64_t seed = 1;
    /// Simulate at most this many full rounds and extrapolate the rest (0: all).
    std::uint32_t max_rounds = 0;
    /// Also run each round shape serialized on one core. The single core sees
    /// every bank at local latency, so the baseline never pays for a placement
    /// that was chosen for the parallel run.
    bool serial = true;
    /// Run the address-stream verifier on the first round's plan.
    bool verify_layout = true;
    double tolerance = kGoldenTolerance;
    std::ostream* trace = nullptr;
};

/// Outcome of a scheduled kernel, possibly split into rounds that each fit the
/// cluster memory.
struct KernelRun {
    std::string kernel;
    std::string topology;
    std::uint64_t instances = 0;
    std::uint32_t cores = 0;  // active cores in a full round
    std::uint64_t rounds = 0;
    std::uint64_t simulated_rounds = 0;
    CycleStats stats;             // the simulated rounds, back to back
    std::uint64_t cycles = 0;     // all rounds, extrapolated when not all ran
    std::uint64_t serial_cycles = 0;
    std::uint64_t useful_macs = 0;  // complex MACs of the kernel's work, as counted by the formulas
    double max_error = 0.0;        // simulated memory vs golden
    bool verified = false;
    bool extrapolated = false;
    LocalityReport locality;
    std::vector<std::string> flags;

    double speedup() const noexcept {
        return cycles > 0 && serial_cycles > 0 ? static_cast<double>(serial_cycles) / static_cast<double>(cycles) : 0.0;
    }

    /// Throws GoldenMismatch unless every simulated round matched golden.
    const KernelRun& check() const {
        require(verified, ErrorKind::GoldenMismatch,
                kernel + ": simulated output differs from golden by " + std::to_string(max_error));
        return *this;
    }
};

/// Adds a run that executed after `into` (same kernel, sequential in time).
inline void merge(KernelRun& into, const KernelRun& next) {
    if (into.kernel.empty()) {
        into = next;
        return;
    }
    into.instances += next.instances;
    into.cores = std::max(into.cores, next.cores);
    into.rounds += next.rounds;
    into.simulated_rounds += next.simulated_rounds;
    into.stats += next.stats;
    into.cycles += next.cycles;
    into.serial_cycles += next.serial_cycles;
    into.useful_macs += next.useful_macs;
    into.max_error = std::max(into.max_error, next.max_error);
    into.verified = into.verified && next.verified;
    into.extrapolated = into.extrapolated || next.extrapolated;
    for (const auto& f : next.flags)
        if (std::find(into.flags.begin(), into.flags.end(), f) == into.flags.end()) into.flags.push_back(f);
}

/// One round: a plan, how to fill memory before the run, and how to compare the
/// memory afterwards (returns the largest absolute deviation from golden).
struct Round {
    std::shared_ptr<const LayoutPlan> plan;
    std::function<void(std::span<cf32>)> stage;
    std::function<double(std::span<const cf32>)> compare;
};

inline double deviation(cf32 a, cf32 b) { return std::abs(cf64(a) - cf64(b)); }

inline std::vector<CoreId> core_range(const ClusterTopology& t, std::uint32_t count) {
    if (count == 0) count = t.num_cores();
    require(count <= t.num_cores(), ErrorKind::TooFewCores,
            std::to_string(count) + " cores requested, cluster has " + std::to_string(t.num_cores()));
    std::vector<CoreId> c(count);
    std::iota(c.begin(), c.end(), 0);
    return c;
}

namespace detail {

inline std::pair<CycleStats, double> execute(const ClusterTopology& t, const RunOptions& opt, const Round& r,
                                             const LayoutPlan& plan) {
    Simulator sim(t, opt.engine);
    sim.set_trace(opt.trace);
    r.stage(sim.memory());
    const CycleStats st = sim.run(lower(plan, t));
    return {st, r.compare(sim.memory())};
}

// The topology the serial baseline runs on.
inline ClusterTopology flat_latency(ClusterTopology t) {
    t.latency_local_group = t.latency_local;
    t.latency_remote_group = t.latency_local;
    return t;
}

} // namespace detail

/// Runs `total` instances in rounds of at most `per_round`; `build(first, count)`
/// prepares the round holding instances [first, first + count).
inline KernelRun drive_rounds(const std::string& kernel, const ClusterTopology& t, const RunOptions& opt, std::uint64_t total,
                              std::uint64_t per_round, const std::function<Round(std::uint64_t, std::uint64_t)>& build) {
    require(total > 0 && per_round > 0, ErrorKind::InvalidArgument, kernel + ": nothing to run");
    KernelRun run;
    run.kernel = kernel;
    run.topology = t.name;
    run.instances = total;
    run.rounds = (total + per_round - 1) / per_round;
    const std::uint64_t full = total / per_round;
    const std::uint64_t partial = total % per_round;
    const std::uint64_t sim_full = opt.max_rounds == 0 ? full : std::min<std::uint64_t>(full, opt.max_rounds);

    std::uint64_t full_cycles = 0;
    std::uint64_t serial_full = 0;
    std::uint64_t serial_partial = 0;
    auto one = [&](std::uint64_t first, std::uint64_t count, bool is_full, bool first_of_shape) {
        const Round r = build(first, count);
        if (run.simulated_rounds == 0) {
            run.flags = r.plan->flags();
            run.cores = static_cast<std::uint32_t>(r.plan->active_cores().size());
            if (opt.verify_layout) run.locality = verify_conflict_free(*r.plan, t);
        }
        const auto [st, err] = detail::execute(t, opt, r, *r.plan);
        run.max_error = std::max(run.max_error, err);
        run.stats += st;
        ++run.simulated_rounds;
        if (is_full) full_cycles += st.total_cycles;
        if (opt.serial && first_of_shape) {
            const LayoutPlan serial = serialize(*r.plan);
            RunOptions quiet = opt;
            quiet.trace = nullptr;
            const auto [sst, serr] = detail::execute(detail::flat_latency(t), quiet, r, serial);
            run.max_error = std::max(run.max_error, serr);
            (is_full ? serial_full : serial_partial) = sst.total_cycles;
        }
        return st.total_cycles;
    };
    std::uint64_t partial_cycles = 0;
    for (std::uint64_t i = 0; i < sim_full; ++i) one(i * per_round, per_round, true, i == 0);
    if (partial > 0) partial_cycles = one(full * per_round, partial, false, true);

    run.extrapolated = sim_full < full;
    const double mean_full = sim_full > 0 ? static_cast<double>(full_cycles) / static_cast<double>(sim_full) : 0.0;
    run.cycles = full_cycles + partial_cycles +
                 static_cast<std::uint64_t>(std::llround(mean_full * static_cast<double>(full - sim_full)));
    if (opt.serial) run.serial_cycles = full * serial_full + serial_partial;
    run.verified = run.max_error <= opt.tolerance;
    return run;
}

} // namespace poolsim
