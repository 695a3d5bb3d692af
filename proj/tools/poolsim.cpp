// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

// Command-line front end: kernel, pipeline, sweep and verify-layout runs.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "poolsim/app/commands.hpp"

namespace {

using namespace poolsim;

struct KernelFlags {
    std::optional<std::string> name;
    std::optional<std::uint32_t> n, m, p, size, beams, users, pilots, subcarriers, batch, cores;
    std::optional<std::uint64_t> instances;

    void add(CLI::App* app) {
        app->add_option("--n", n, "FFT length, or inner dimension of mmm");
        app->add_option("--m", m, "mmm rows of A");
        app->add_option("--p", p, "mmm columns of B");
        app->add_option("--size", size, "cholesky/mmse matrix order");
        app->add_option("--instances", instances, "independent problems");
        app->add_option("--beams", beams, "che/ne beams");
        app->add_option("--users", users, "che/ne users");
        app->add_option("--pilots", pilots, "che/ne pilot symbols");
        app->add_option("--subcarriers", subcarriers, "che/ne subcarriers");
        app->add_option("--batch", batch, "instances per unit between barriers");
        app->add_option("--cores", cores, "cores to use (0: all)");
    }

    void apply(KernelSpec& k) const {
        if (name) k.name = *name;
        auto set = [](auto& dst, const auto& src) {
            if (src) dst = *src;
        };
        set(k.n, n);
        set(k.m, m);
        set(k.p, p);
        set(k.size, size);
        set(k.instances, instances);
        set(k.beams, beams);
        set(k.users, users);
        set(k.pilots, pilots);
        set(k.subcarriers, subcarriers);
        set(k.batch, batch);
        set(k.cores, cores);
    }
};

int write_report(const ReportDocument& doc, const RunConfig& cfg) {
    const std::string body = cfg.format == "csv" ? to_csv(doc) : doc.to_json().dump(2) + "\n";
    if (cfg.out.empty()) {
        std::cout << body;
    } else {
        std::ofstream out(cfg.out);
        if (!out) {
            std::cerr << "poolsim: cannot write '" << cfg.out << "'\n";
            return kExitUsage;
        }
        out << body;
    }
    if (!doc.verified()) {
        std::cerr << "poolsim: verification failed\n";
        return kExitVerification;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cycle-level model of shared-L1 many-core clusters running the PUSCH receive chain"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config;
    std::optional<std::string> topology, out, format, trace_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> max_rounds;
    bool no_serial = false;
    app.add_option("--config", config, "config file, or a preset: mempool, terapool, usecase-5g");
    app.add_option("--topology", topology, "topology preset: mempool, terapool, minpool");
    app.add_option("--out", out, "write the report here instead of stdout");
    app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--trace", trace_path, "per-cycle event trace file");
    app.add_option("--seed", seed, "seed for kernel inputs and the use case");
    app.add_option("--max-rounds", max_rounds, "simulate at most this many full rounds per kernel, extrapolate the rest");
    app.add_flag("--no-serial", no_serial, "skip the single-core baseline runs");

    KernelFlags kflags;
    auto* kernel = app.add_subcommand("kernel", "run one scheduled kernel against its golden model");
    kernel->add_option("name", kflags.name, "fft, mmm, cholesky, mmse, che or ne")->required();
    kflags.add(kernel);

    std::optional<std::uint32_t> fft_batch, cholesky_batch;
    std::optional<double> sigma2;
    auto* pipeline = app.add_subcommand("pipeline", "run the full receive chain, golden and simulated");
    pipeline->add_option("--fft-batch", fft_batch, "FFTs per core set between barriers");
    pipeline->add_option("--cholesky-batch", cholesky_batch, "decompositions per unit between barriers");
    pipeline->add_option("--sigma2", sigma2, "injected noise variance");

    KernelFlags sflags;
    std::vector<std::uint32_t> sizes, sweep_cores, sweep_batch;
    auto* sweep = app.add_subcommand("sweep", "run a kernel over sizes, core counts and batch sizes");
    sweep->add_option("--kernel", sflags.name, "kernel to sweep");
    sflags.add(sweep);
    sweep->add_option("--sizes", sizes, "main kernel size per point")->delimiter(',');
    sweep->add_option("--core-counts", sweep_cores, "core counts")->delimiter(',');
    sweep->add_option("--batches", sweep_batch, "batch sizes")->delimiter(',');

    KernelFlags vflags;
    bool unfolded = false;
    auto* verify = app.add_subcommand("verify-layout", "replay a layout's address streams without timing");
    verify->add_option("name", vflags.name, "fft, mmm, cholesky, mmse, che or ne")->required();
    vflags.add(verify);
    verify->add_flag("--unfolded", unfolded, "fft only: the control layout without folding");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
        if (topology) cfg.topology = ClusterTopology::preset(*topology);
        if (out) cfg.out = *out;
        if (format) cfg.format = *format;
        if (seed) {
            cfg.seed = *seed;
            cfg.usecase.seed = *seed;
        }
        if (max_rounds) cfg.max_rounds = *max_rounds;
        if (no_serial) cfg.serial = false;

        std::ofstream trace_file;
        std::ostream* trace = nullptr;
        if (trace_path) {
            trace_file.open(*trace_path);
            require(trace_file.good(), ErrorKind::ConfigError, "cannot write trace '" + *trace_path + "'");
            trace = &trace_file;
        }

        if (*kernel) {
            kflags.apply(cfg.kernel);
            return write_report(cmd_kernel(cfg, trace), cfg);
        }
        if (*pipeline) {
            if (fft_batch) cfg.batching.fft_batch = *fft_batch;
            if (cholesky_batch) cfg.batching.cholesky_batch = *cholesky_batch;
            if (sigma2) cfg.usecase.sigma2_true = *sigma2;
            return write_report(cmd_pipeline(cfg, trace), cfg);
        }
        if (*sweep) {
            sflags.apply(cfg.kernel);
            if (!sizes.empty()) cfg.sweep.sizes = sizes;
            if (!sweep_cores.empty()) cfg.sweep.cores = sweep_cores;
            if (!sweep_batch.empty()) cfg.sweep.batch = sweep_batch;
            return write_report(cmd_sweep(cfg), cfg);
        }
        vflags.apply(cfg.kernel);
        return write_report(cmd_verify_layout(cfg, unfolded), cfg);
    } catch (const Error& e) {
        std::cerr << "poolsim: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "poolsim: " << e.what() << "\n";
        return kExitUsage;
    }
}
