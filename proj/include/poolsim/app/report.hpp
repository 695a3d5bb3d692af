// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "poolsim/app/config.hpp"

namespace poolsim {

inline constexpr std::string_view kToolVersion = "0.1.0";

inline ordered_json stats_json(const CycleStats& st) {
    const CoreStats a = st.aggregate();
    return {{"total_cycles", st.total_cycles},
            {"active_cores", st.active_cores()},
            {"core_cycles", a.accounted()},
            {"issued", a.issued},
            {"lsu", a.lsu},
            {"raw", a.raw},
            {"wfi", a.wfi},
            {"idle", a.idle},
            {"accounting_exact", st.accounting_exact()}};
}

/// One record per kernel run or pipeline stage.
inline ordered_json run_record(const std::string& kind, const std::string& name, const KernelRun& r,
                               const std::string& hash) {
    ordered_json j;
    j["kind"] = kind;
    j["name"] = name;
    j["kernel"] = r.kernel;
    j["topology"] = r.topology;
    j["config_hash"] = hash;
    j["instances"] = r.instances;
    j["cores"] = r.cores;
    j["rounds"] = r.rounds;
    j["simulated_rounds"] = r.simulated_rounds;
    j["extrapolated"] = r.extrapolated;
    j["cycles"] = r.cycles;
    j["single_core_cycles"] = r.serial_cycles;
    j["speedup"] = r.speedup();
    j["ipc"] = r.stats.ipc();
    j["stalls"] = {{"lsu", r.stats.fraction(&CoreStats::lsu)},
                   {"raw", r.stats.fraction(&CoreStats::raw)},
                   {"wfi", r.stats.fraction(&CoreStats::wfi)},
                   {"idle", r.stats.fraction(&CoreStats::idle)}};
    j["simulated"] = stats_json(r.stats);
    j["macs"] = r.useful_macs;
    j["macs_per_cycle"] = r.cycles > 0 ? static_cast<double>(r.useful_macs) / static_cast<double>(r.cycles) : 0.0;
    j["verified"] = r.verified;
    j["max_error"] = r.max_error;
    j["local_read_fraction"] = r.locality.local_read_fraction;
    j["conflict_count"] = r.locality.conflict_count;
    j["flags"] = r.flags;
    return j;
}

inline ordered_json chain_record(const ChainReport& rep, const std::string& hash) {
    ordered_json j;
    j["kind"] = "chain";
    j["name"] = "chain";
    j["config_hash"] = hash;
    j["cycles"] = rep.cycles;
    j["single_core_cycles"] = rep.single_core_cycles;
    j["speedup"] = rep.speedup();
    ordered_json shares = ordered_json::object();
    const auto s = rep.cycle_shares();
    for (std::size_t i = 0; i < rep.stages.size(); ++i) shares[std::string(stage_name(rep.stages[i].stage))] = 100.0 * s[i];
    j["cycle_percent"] = shares;
    std::uint64_t macs = 0;
    for (const auto& st : rep.stages) macs += st.mac_count;
    j["macs"] = macs;
    j["evm"] = rep.evm;
    j["sigma2_hat"] = rep.sigma2_hat;
    j["verified"] = rep.verified;
    return j;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// The document written by every subcommand. Only "timestamp" and "version"
/// vary between runs of the same config.
struct ReportDocument {
    std::string command;
    RunConfig config;
    std::vector<ordered_json> records;

    bool verified() const {
        for (const auto& r : records)
            if (r.contains("verified") && !r.at("verified").get<bool>()) return false;
        return true;
    }

    ordered_json to_json(bool with_timestamp = true) const {
        ordered_json j;
        j["tool"] = "poolsim";
        j["version"] = kToolVersion;
        if (with_timestamp) j["timestamp"] = utc_timestamp();
        j["command"] = command;
        j["config"] = poolsim::to_json(config);
        j["config_hash"] = config_hash(config);
        j["records"] = records;
        j["verified"] = verified();
        return j;
    }
};

inline constexpr const char* kCsvColumns[] = {"kind",   "name",     "kernel", "topology",  "config_hash",
                                             "instances", "cores", "cycles", "single_core_cycles", "speedup",
                                             "ipc",    "lsu",      "raw",    "wfi",       "macs",
                                             "macs_per_cycle", "verified", "max_error", "local_read_fraction",
                                             "conflict_count"};

/// Flattens the records into one CSV row each; absent fields stay empty.
inline std::string to_csv(const ReportDocument& doc) {
    std::ostringstream os;
    for (std::size_t i = 0; i < std::size(kCsvColumns); ++i) os << (i ? "," : "") << kCsvColumns[i];
    os << '\n';
    for (const auto& r : doc.records) {
        for (std::size_t i = 0; i < std::size(kCsvColumns); ++i) {
            if (i) os << ',';
            const std::string key = kCsvColumns[i];
            const ordered_json* v = nullptr;
            if (r.contains(key))
                v = &r.at(key);
            else if (r.contains("stalls") && r.at("stalls").contains(key))
                v = &r.at("stalls").at(key);
            if (!v) continue;
            if (v->is_string())
                os << v->get<std::string>();
            else
                os << v->dump();
        }
        os << '\n';
    }
    return os.str();
}

} // namespace poolsim
