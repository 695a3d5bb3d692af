// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "poolsim/cluster/topology.hpp"
#include "poolsim/engine/simulator.hpp"
#include "poolsim/pipeline/chain.hpp"

namespace poolsim {

using ordered_json = nlohmann::ordered_json;

inline constexpr std::string_view kKernelNames[] = {"fft", "mmm", "cholesky", "mmse", "che", "ne"};

/// One kernel run. Which size fields apply depends on `name`:
/// fft uses n, mmm uses m x n x p, cholesky and mmse use size, che and ne use
/// beams / users / pilots / subcarriers. `instances` counts independent problems.
struct KernelSpec {
    std::string name = "fft";
    std::uint32_t n = 256;
    std::uint32_t m = 64;
    std::uint32_t p = 64;
    std::uint32_t size = 4;
    std::uint64_t instances = 1;
    std::uint32_t beams = 32;
    std::uint32_t users = 4;
    std::uint32_t pilots = 2;
    std::uint32_t subcarriers = 3276;
    std::uint32_t batch = 1;
    std::uint32_t cores = 0;

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Cartesian product of the non-empty axes around `RunConfig::kernel`; empty
/// axes leave the kernel's own value. `sizes` sets the kernel's main size
/// (fft n, mmm m, cholesky/mmse size, che/ne subcarriers).
struct SweepSpec {
    std::vector<std::uint32_t> sizes;
    std::vector<std::uint32_t> cores;
    std::vector<std::uint32_t> batch;

    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct RunConfig {
    ClusterTopology topology = ClusterTopology::mempool();
    EngineConfig engine;
    std::uint64_t seed = 1;
    KernelSpec kernel;
    SweepSpec sweep;
    UseCaseConfig usecase;
    Batching batching{16, 4};
    /// Full rounds simulated per kernel or stage before extrapolating (0: all).
    std::uint32_t max_rounds = 0;
    bool serial = true;
    bool verify_layout = true;
    double tolerance = kGoldenTolerance;
    std::string out;
    std::string format = "json";

    void validate() const {
        topology.validate();
        engine.validate();
        usecase.validate();
        require(std::find(std::begin(kKernelNames), std::end(kKernelNames), kernel.name) != std::end(kKernelNames),
                ErrorKind::ConfigError, "unknown kernel '" + kernel.name + "'");
        require(kernel.instances > 0 && kernel.batch > 0, ErrorKind::ConfigError, "instances and batch must be positive");
        require(kernel.cores <= topology.num_cores(), ErrorKind::ConfigError, "more cores requested than the cluster has");
        for (auto c : sweep.cores)
            require(c > 0 && c <= topology.num_cores(), ErrorKind::ConfigError, "sweep core count out of range");
        for (auto b : sweep.batch) require(b > 0, ErrorKind::ConfigError, "sweep batch must be positive");
        require(batching.fft_batch > 0 && batching.cholesky_batch > 0, ErrorKind::ConfigError, "batching must be positive");
        require(format == "json" || format == "csv", ErrorKind::ConfigError, "format must be json or csv");
        require(tolerance > 0.0, ErrorKind::ConfigError, "tolerance must be positive");
    }

    RunOptions run_options() const {
        RunOptions o;
        o.engine = engine;
        o.cores = kernel.cores;
        o.batch = kernel.batch;
        o.seed = seed;
        o.max_rounds = max_rounds;
        o.serial = serial;
        o.verify_layout = verify_layout;
        o.tolerance = tolerance;
        return o;
    }

    friend bool operator==(const RunConfig& a, const RunConfig& b) { return to_json(a) == to_json(b); }
    friend ordered_json to_json(const RunConfig& c);
};

namespace detail {

// Reads the keys of one JSON object and rejects any it does not know.
class StrictObject {
public:
    StrictObject(const ordered_json& j, std::string where) : j_(j), where_(std::move(where)) {
        require(j.is_object(), ErrorKind::ConfigError, where_ + " must be an object");
    }
    /// Call after the last get(): any key not asked for is an error.
    void done() const {
        for (const auto& [k, v] : j_.items())
            require(seen_.count(k) > 0, ErrorKind::ConfigError, "unknown key '" + k + "' in " + where_);
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            const ordered_json& v = j_.at(key);
            if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
                require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
                        ErrorKind::ConfigError, where_ + "." + key + " must be a non-negative integer");
                const auto raw = v.get<std::uint64_t>();
                require(raw <= std::numeric_limits<T>::max(), ErrorKind::ConfigError, where_ + "." + key + " is too large");
                out = static_cast<T>(raw);
            } else {
                out = v.get<T>();
            }
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::ConfigError, where_ + "." + key + ": " + e.what());
        }
    }

    const ordered_json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

private:
    const ordered_json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

inline void read_topology(const ordered_json& j, ClusterTopology& t) {
    if (j.is_string()) {
        t = ClusterTopology::preset(j.get<std::string>());
        return;
    }
    StrictObject o(j, "topology");
    std::string preset;
    o.get("preset", preset);
    if (!preset.empty()) t = ClusterTopology::preset(preset);
    o.get("name", t.name);
    o.get("cores_per_tile", t.cores_per_tile);
    o.get("banks_per_tile", t.banks_per_tile);
    o.get("tiles_per_group", t.tiles_per_group);
    o.get("num_groups", t.num_groups);
    o.get("words_per_bank", t.words_per_bank);
    o.get("latency_local", t.latency_local);
    o.get("latency_local_group", t.latency_local_group);
    o.get("latency_remote_group", t.latency_remote_group);
    o.get("max_outstanding", t.max_outstanding);
    o.get("interleaved_rows", t.interleaved_rows);
    o.done();
}

inline ordered_json write_topology(const ClusterTopology& t) {
    return {{"name", t.name},
            {"cores_per_tile", t.cores_per_tile},
            {"banks_per_tile", t.banks_per_tile},
            {"tiles_per_group", t.tiles_per_group},
            {"num_groups", t.num_groups},
            {"words_per_bank", t.words_per_bank},
            {"latency_local", t.latency_local},
            {"latency_local_group", t.latency_local_group},
            {"latency_remote_group", t.latency_remote_group},
            {"max_outstanding", t.max_outstanding},
            {"interleaved_rows", t.interleaved_rows}};
}

inline std::string beamformer_name(Beamformer b) { return b == Beamformer::Identity ? "identity" : "random"; }

} // namespace detail

inline ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["topology"] = detail::write_topology(c.topology);
    j["engine"] = {{"alu_latency", c.engine.alu_latency},
                   {"mul_latency", c.engine.mul_latency},
                   {"divsqrt_latency", c.engine.divsqrt_latency},
                   {"divsqrt_pipelined", c.engine.divsqrt_pipelined},
                   {"deadlock_factor", c.engine.deadlock_factor}};
    j["seed"] = c.seed;
    const KernelSpec& k = c.kernel;
    j["kernel"] = {{"name", k.name},         {"n", k.n},           {"m", k.m},
                   {"p", k.p},               {"size", k.size},     {"instances", k.instances},
                   {"beams", k.beams},       {"users", k.users},   {"pilots", k.pilots},
                   {"subcarriers", k.subcarriers}, {"batch", k.batch}, {"cores", k.cores}};
    j["sweep"] = {{"sizes", c.sweep.sizes}, {"cores", c.sweep.cores}, {"batch", c.sweep.batch}};
    const UseCaseConfig& u = c.usecase;
    j["usecase"] = {{"n_sc", u.n_sc},
                    {"n_fft", u.n_fft},
                    {"n_symb", u.n_symb},
                    {"n_pilot", u.n_pilot},
                    {"n_data", u.n_data},
                    {"n_r", u.n_r},
                    {"n_b", u.n_b},
                    {"n_l", u.n_l},
                    {"sigma2_true", u.sigma2_true},
                    {"seed", u.seed},
                    {"coherence_sc", u.coherence_sc},
                    {"beamformer", detail::beamformer_name(u.beamformer)}};
    j["batching"] = {{"fft_batch", c.batching.fft_batch}, {"cholesky_batch", c.batching.cholesky_batch}};
    j["run"] = {{"max_rounds", c.max_rounds},
                {"serial", c.serial},
                {"verify_layout", c.verify_layout},
                {"tolerance", c.tolerance}};
    j["output"] = {{"path", c.out}, {"format", c.format}};
    return j;
}

/// Applies a JSON document on top of `base`. Unknown keys anywhere are errors.
inline RunConfig parse_config(const ordered_json& j, RunConfig base = {}) {
    RunConfig c = std::move(base);
    detail::StrictObject root(j, "config");
    if (const auto* t = root.child("topology")) detail::read_topology(*t, c.topology);
    if (const auto* e = root.child("engine")) {
        detail::StrictObject o(*e, "engine");
        o.get("alu_latency", c.engine.alu_latency);
        o.get("mul_latency", c.engine.mul_latency);
        o.get("divsqrt_latency", c.engine.divsqrt_latency);
        o.get("divsqrt_pipelined", c.engine.divsqrt_pipelined);
        o.get("deadlock_factor", c.engine.deadlock_factor);
        o.done();
    }
    root.get("seed", c.seed);
    if (const auto* k = root.child("kernel")) {
        detail::StrictObject o(*k, "kernel");
        o.get("name", c.kernel.name);
        o.get("n", c.kernel.n);
        o.get("m", c.kernel.m);
        o.get("p", c.kernel.p);
        o.get("size", c.kernel.size);
        o.get("instances", c.kernel.instances);
        o.get("beams", c.kernel.beams);
        o.get("users", c.kernel.users);
        o.get("pilots", c.kernel.pilots);
        o.get("subcarriers", c.kernel.subcarriers);
        o.get("batch", c.kernel.batch);
        o.get("cores", c.kernel.cores);
        o.done();
    }
    if (const auto* s = root.child("sweep")) {
        detail::StrictObject o(*s, "sweep");
        o.get("sizes", c.sweep.sizes);
        o.get("cores", c.sweep.cores);
        o.get("batch", c.sweep.batch);
        o.done();
    }
    if (const auto* u = root.child("usecase")) {
        detail::StrictObject o(*u, "usecase");
        UseCaseConfig& x = c.usecase;
        o.get("n_sc", x.n_sc);
        o.get("n_fft", x.n_fft);
        o.get("n_symb", x.n_symb);
        o.get("n_pilot", x.n_pilot);
        o.get("n_data", x.n_data);
        o.get("n_r", x.n_r);
        o.get("n_b", x.n_b);
        o.get("n_l", x.n_l);
        o.get("sigma2_true", x.sigma2_true);
        o.get("seed", x.seed);
        o.get("coherence_sc", x.coherence_sc);
        std::string bf = detail::beamformer_name(x.beamformer);
        o.get("beamformer", bf);
        require(bf == "random" || bf == "identity", ErrorKind::ConfigError, "beamformer must be random or identity");
        x.beamformer = bf == "identity" ? Beamformer::Identity : Beamformer::Random;
        o.done();
    }
    if (const auto* b = root.child("batching")) {
        detail::StrictObject o(*b, "batching");
        o.get("fft_batch", c.batching.fft_batch);
        o.get("cholesky_batch", c.batching.cholesky_batch);
        o.done();
    }
    if (const auto* r = root.child("run")) {
        detail::StrictObject o(*r, "run");
        o.get("max_rounds", c.max_rounds);
        o.get("serial", c.serial);
        o.get("verify_layout", c.verify_layout);
        o.get("tolerance", c.tolerance);
        o.done();
    }
    if (const auto* out = root.child("output")) {
        detail::StrictObject o(*out, "output");
        o.get("path", c.out);
        o.get("format", c.format);
        o.done();
    }
    root.done();
    return c;
}

/// Built-in configurations: "mempool", "terapool" and "usecase-5g" (the
/// default slot on TeraPool with the batched schedule).
inline RunConfig preset_config(const std::string& name) {
    RunConfig c;
    if (name == "mempool") return c;
    if (name == "terapool") {
        c.topology = ClusterTopology::terapool();
        return c;
    }
    if (name == "usecase-5g") {
        c.topology = ClusterTopology::terapool();
        c.batching = {16, 4};
        c.max_rounds = 1;
        return c;
    }
    fail(ErrorKind::ConfigError, "unknown config preset '" + name + "'");
}

inline bool is_preset_name(const std::string& s) { return s == "mempool" || s == "terapool" || s == "usecase-5g"; }

inline RunConfig load_config(const std::string& path_or_preset) {
    if (is_preset_name(path_or_preset)) return preset_config(path_or_preset);
    std::ifstream in(path_or_preset);
    require(in.good(), ErrorKind::ConfigError, "cannot open config '" + path_or_preset + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ConfigError, path_or_preset + ": " + e.what());
    }
    RunConfig base;
    if (j.is_object() && j.contains("preset")) {
        base = preset_config(j.at("preset").get<std::string>());
        j.erase("preset");
    }
    return parse_config(j, base);
}

/// FNV-1a over the compact dump of the resolved config, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

} // namespace poolsim
