// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "poolsim/app/report.hpp"
#include "poolsim/kernels/estimation.hpp"
#include "poolsim/kernels/fft.hpp"
#include "poolsim/kernels/linalg.hpp"
#include "poolsim/layouts/fft_fold.hpp"

namespace poolsim {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitVerification = 2, kExitDeadlock = 3 };

inline int exit_code_for(ErrorKind k) {
    switch (k) {
    case ErrorKind::GoldenMismatch: return kExitVerification;
    case ErrorKind::Deadlock: return kExitDeadlock;
    default: return kExitUsage;
    }
}

/// The main size of a kernel, the one a sweep varies.
inline std::uint32_t primary_size(const KernelSpec& k) {
    if (k.name == "fft") return k.n;
    if (k.name == "mmm") return k.m;
    if (k.name == "cholesky" || k.name == "mmse") return k.size;
    return k.subcarriers;
}

inline void set_primary_size(KernelSpec& k, std::uint32_t v) {
    if (k.name == "fft")
        k.n = v;
    else if (k.name == "mmm")
        k.m = v;
    else if (k.name == "cholesky" || k.name == "mmse")
        k.size = v;
    else
        k.subcarriers = v;
}

inline EstimationShape estimation_shape(const KernelSpec& k) { return {k.beams, k.users, k.pilots, k.subcarriers}; }

inline KernelRun run_kernel(const KernelSpec& k, const RunConfig& cfg, std::ostream* trace = nullptr) {
    RunOptions opt = cfg.run_options();
    opt.cores = k.cores;
    opt.batch = k.batch;
    opt.trace = trace;
    const ClusterTopology& t = cfg.topology;
    if (k.name == "fft") return run_fft(k.n, k.instances, t, opt);
    if (k.name == "mmm") return run_mmm(k.m, k.n, k.p, t, opt);
    if (k.name == "cholesky") return run_cholesky(k.size, k.instances, t, opt);
    if (k.name == "mmse") return run_mmse(k.size, k.instances, t, opt);
    if (k.name == "che") return run_che(estimation_shape(k), t, opt);
    if (k.name == "ne") return run_ne(estimation_shape(k), t, opt);
    fail(ErrorKind::ConfigError, "unknown kernel '" + k.name + "'");
}

inline ordered_json kernel_record(const KernelSpec& k, const KernelRun& r, const std::string& hash) {
    ordered_json j = run_record("kernel", k.name, r, hash);
    j["size"] = primary_size(k);
    j["batch"] = k.batch;
    j["requested_cores"] = k.cores;
    return j;
}

inline ReportDocument cmd_kernel(const RunConfig& cfg, std::ostream* trace = nullptr) {
    cfg.validate();
    ReportDocument doc{"kernel", cfg, {}};
    doc.records.push_back(kernel_record(cfg.kernel, run_kernel(cfg.kernel, cfg, trace), config_hash(cfg)));
    return doc;
}

inline ReportDocument cmd_pipeline(const RunConfig& cfg, std::ostream* trace = nullptr) {
    cfg.validate();
    ReportDocument doc{"pipeline", cfg, {}};
    const std::string hash = config_hash(cfg);
    const Stimulus st = generate_stimulus(cfg.usecase);
    const ChainOutputs gold = run_golden(st);
    RunOptions opt = cfg.run_options();
    opt.cores = 0;
    opt.trace = trace;
    const ChainReport rep = run_simulated(st, gold, cfg.topology, cfg.batching, opt);
    for (const auto& s : rep.stages) {
        ordered_json j = run_record("stage", std::string(stage_name(s.stage)), s.run, hash);
        j["macs"] = s.mac_count;
        j["macs_per_cycle"] = s.cycles() > 0 ? static_cast<double>(s.mac_count) / static_cast<double>(s.cycles()) : 0.0;
        doc.records.push_back(std::move(j));
    }
    doc.records.push_back(chain_record(rep, hash));
    return doc;
}

/// One record per sweep point, in axis order (sizes outermost, batch innermost).
inline ReportDocument cmd_sweep(const RunConfig& cfg) {
    cfg.validate();
    ReportDocument doc{"sweep", cfg, {}};
    const std::string hash = config_hash(cfg);
    auto axis = [](const std::vector<std::uint32_t>& v, std::uint32_t fallback) {
        return v.empty() ? std::vector<std::uint32_t>{fallback} : v;
    };
    std::uint32_t point = 0;
    for (std::uint32_t size : axis(cfg.sweep.sizes, primary_size(cfg.kernel)))
        for (std::uint32_t cores : axis(cfg.sweep.cores, cfg.kernel.cores))
            for (std::uint32_t batch : axis(cfg.sweep.batch, cfg.kernel.batch)) {
                KernelSpec k = cfg.kernel;
                set_primary_size(k, size);
                k.cores = cores;
                k.batch = batch;
                ordered_json j = kernel_record(k, run_kernel(k, cfg), hash);
                j["point"] = point++;
                doc.records.push_back(std::move(j));
            }
    return doc;
}

/// Builds the kernel's layout for one round on the whole cluster and replays
/// its address streams. The folded FFT must be local and conflict-free; the
/// other layouts only need to be well formed.
inline ReportDocument cmd_verify_layout(const RunConfig& cfg, bool unfolded = false) {
    cfg.validate();
    const ClusterTopology& t = cfg.topology;
    const KernelSpec& k = cfg.kernel;
    const std::vector<CoreId> cores = core_range(t, k.cores);
    LayoutPlan plan("none", t.num_cores());
    bool strict = false;
    if (k.name == "fft" && unfolded) {
        plan = fft_unfolded_layout(k.n, t).plan;
    } else if (k.name == "fft") {
        plan = fft_fold_plan(k.n, t, fft_replication(k.n, t), k.batch).plan;
        strict = true;
    } else if (k.name == "mmm") {
        plan = mmm_schedule(k.m, k.n, k.p, t, cores).plan;
    } else if (k.name == "cholesky" || k.name == "mmse") {
        const std::uint32_t np = detail::padded_order(k.size);
        const std::uint32_t unit = cholesky_cores_per_unit(np);
        require(cores.size() >= unit, ErrorKind::TooFewCores, "not enough cores for one decomposition");
        const std::vector<CoreId> used(cores.begin(), cores.begin() + cores.size() / unit * unit);
        plan = cholesky_replicated(np, t, used, {detail::fitting_items(np, t, k.batch), k.name == "mmse"}).plan;
    } else {
        // the first round of the kernel
        const EstimationShape shape = estimation_shape(k);
        const bool ne = k.name == "ne";
        const std::uint32_t words = ne ? ne_words(shape) : shape.pilots * (shape.beams + shape.users);
        const std::uint64_t per_round = cores.size() * std::max(1u, subcarriers_per_core(t, words));
        const EstimationShape first = detail::slice(shape, std::min<std::uint64_t>(k.subcarriers, per_round));
        plan = (ne ? ne_layout(first, t, cores) : che_layout(first, t, cores)).plan;
    }
    const LocalityReport rep = verify_conflict_free(plan, t);
    ordered_json j;
    j["kind"] = "layout";
    j["name"] = plan.kernel();
    j["topology"] = t.name;
    j["config_hash"] = config_hash(cfg);
    j["cores"] = plan.active_cores().size();
    j["phases"] = plan.num_phases();
    j["reads"] = rep.reads;
    j["local_read_fraction"] = rep.local_read_fraction;
    j["conflict_count"] = rep.conflict_count;
    j["tile_to_group_collisions"] = rep.tile_to_group_collisions;
    j["max_tile_to_group_collisions"] = rep.max_tile_to_group_collisions;
    j["phase_local_fraction"] = rep.phase_local_fraction;
    j["flags"] = plan.flags();
    j["verified"] = !strict || (rep.conflict_count == 0 && rep.local_read_fraction == 1.0);
    ReportDocument doc{"verify-layout", cfg, {}};
    doc.records.push_back(std::move(j));
    return doc;
}

} // namespace poolsim
