// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "poolsim/app/commands.hpp"

namespace poolsim {
namespace {

namespace fs = std::filesystem;

struct CliResult {
    int code = -1;
    std::string out;
};

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? v : fallback;
}

std::string cli() { return env_or("POOLSIM_CLI", "poolsim"); }
std::string configs() { return env_or("POOLSIM_CONFIGS", "configs"); }

CliResult run_cli(const std::string& args) {
    CliResult r;
    const std::string cmd = cli() + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

ordered_json parse_out(const CliResult& r) { return ordered_json::parse(r.out); }

fs::path temp_file(const std::string& name, const std::string& body) {
    const fs::path p = fs::temp_directory_path() / ("poolsim_test_" + name);
    std::ofstream(p) << body;
    return p;
}

// Stalls and issued cycles add up to active cores times total cycles.
void expect_accounted(const ordered_json& rec) {
    const auto& s = rec.at("simulated");
    const std::uint64_t sum = s.at("issued").get<std::uint64_t>() + s.at("lsu").get<std::uint64_t>() +
                              s.at("raw").get<std::uint64_t>() + s.at("wfi").get<std::uint64_t>() +
                              s.at("idle").get<std::uint64_t>();
    EXPECT_EQ(sum, s.at("core_cycles").get<std::uint64_t>());
    EXPECT_EQ(sum, s.at("active_cores").get<std::uint64_t>() * s.at("total_cycles").get<std::uint64_t>());
    EXPECT_TRUE(s.at("accounting_exact").get<bool>());
}

TEST(Config, DefaultsValidate) {
    const RunConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.topology.name, "mempool");
    EXPECT_EQ(c.usecase, UseCaseConfig{});
}

TEST(Config, RoundTripReValidates) {
    RunConfig c = preset_config("usecase-5g");
    c.kernel.name = "mmse";
    c.sweep.cores = {1, 4};
    c.usecase.beamformer = Beamformer::Identity;
    c.engine.divsqrt_pipelined = true;
    const RunConfig back = parse_config(to_json(c));
    EXPECT_NO_THROW(back.validate());
    EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
    EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, UnknownKeysRejected) {
    for (const char* text : {R"({"kernal": {}})", R"({"kernel": {"name": "fft", "nn": 4}})",
                             R"({"topology": {"preset": "mempool", "cores": 4}})", R"({"usecase": {"n_ue": 4}})",
                             R"({"run": {"fast": true}})"}) {
        try {
            parse_config(ordered_json::parse(text));
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << text;
        }
    }
}

TEST(Config, TypesAndRangesChecked) {
    EXPECT_THROW(parse_config(ordered_json::parse(R"({"seed": "one"})")), Error);
    EXPECT_THROW(parse_config(ordered_json::parse(R"({"kernel": {"n": -4}})")), Error);
    EXPECT_THROW(parse_config(ordered_json::parse(R"({"topology": "bigpool"})")), Error);
    EXPECT_THROW(parse_config(ordered_json::parse(R"({"usecase": {"beamformer": "dft"}})")), Error);
    EXPECT_THROW(parse_config(ordered_json::parse(R"({"usecase": {"n_data": 3}})")).validate(), Error);
    EXPECT_THROW(parse_config(ordered_json::parse(R"({"output": {"format": "xml"}})")).validate(), Error);
    EXPECT_THROW(parse_config(ordered_json::parse(R"({"kernel": {"name": "qr"}})")).validate(), Error);
}

TEST(Config, Presets) {
    EXPECT_EQ(preset_config("terapool").topology.num_cores(), 1024u);
    const RunConfig u = preset_config("usecase-5g");
    EXPECT_EQ(u.topology.name, "terapool");
    EXPECT_EQ(u.batching.fft_batch, 16u);
    EXPECT_EQ(u.batching.cholesky_batch, 4u);
    EXPECT_THROW(preset_config("nope"), Error);
    const fs::path p = temp_file("preset.json", R"({"preset": "terapool", "seed": 7})");
    const RunConfig c = load_config(p.string());
    EXPECT_EQ(c.topology.name, "terapool");
    EXPECT_EQ(c.seed, 7u);
}

TEST(Config, HashTracksContent) {
    RunConfig a;
    RunConfig b;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Report, KernelRecordFields) {
    RunConfig c;
    c.topology = ClusterTopology::minpool();
    c.kernel.name = "fft";
    c.kernel.n = 64;
    c.kernel.instances = 8;
    const ReportDocument doc = cmd_kernel(c);
    ASSERT_EQ(doc.records.size(), 1u);
    const auto& r = doc.records[0];
    for (const char* key : {"kernel", "topology", "config_hash", "cycles", "ipc", "stalls", "macs_per_cycle", "speedup",
                            "verified"})
        EXPECT_TRUE(r.contains(key)) << key;
    for (const char* key : {"lsu", "raw", "wfi"}) EXPECT_TRUE(r.at("stalls").contains(key)) << key;
    EXPECT_EQ(r.at("config_hash"), config_hash(c));
    expect_accounted(r);
    EXPECT_TRUE(doc.verified());
}

TEST(Report, DeterministicBodies) {
    RunConfig c;
    c.topology = ClusterTopology::minpool();
    c.kernel.name = "cholesky";
    c.kernel.size = 8;
    c.kernel.instances = 12;
    EXPECT_EQ(cmd_kernel(c).to_json(false).dump(), cmd_kernel(c).to_json(false).dump());
}

TEST(Report, CsvFlattening) {
    RunConfig c;
    c.topology = ClusterTopology::minpool();
    c.kernel.name = "che";
    c.kernel.subcarriers = 40;
    c.kernel.beams = 8;
    const std::string csv = to_csv(cmd_kernel(c));
    std::istringstream in(csv);
    std::string header, row, extra;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_FALSE(std::getline(in, extra));
    EXPECT_EQ(header.rfind("kind,name,kernel", 0), 0u);
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
    EXPECT_EQ(row.rfind("kernel,che,che,minpool", 0), 0u);
}

TEST(Report, ExitCodes) {
    EXPECT_EQ(exit_code_for(ErrorKind::ConfigError), 1);
    EXPECT_EQ(exit_code_for(ErrorKind::TooFewCores), 1);
    EXPECT_EQ(exit_code_for(ErrorKind::GoldenMismatch), 2);
    EXPECT_EQ(exit_code_for(ErrorKind::Deadlock), 3);
    ReportDocument doc;
    doc.records.push_back({{"verified", true}});
    EXPECT_TRUE(doc.verified());
    doc.records.push_back({{"verified", false}});
    EXPECT_FALSE(doc.verified());
}

TEST(Cli, KernelFftBatchedOnTeraPool) {
    const CliResult r = run_cli("kernel fft --n 4096 --topology terapool --batch 16 --instances 16 --no-serial");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto doc = parse_out(r);
    const auto& rec = doc.at("records").at(0);
    EXPECT_EQ(rec.at("topology"), "terapool");
    EXPECT_GT(rec.at("ipc").get<double>(), 0.0);
    EXPECT_TRUE(rec.at("stalls").contains("wfi"));
    expect_accounted(rec);
}

TEST(Cli, KernelMmmMacsPerCycleBound) {
    const CliResult r = run_cli("kernel mmm --m 256 --n 128 --p 256 --topology mempool");
    ASSERT_EQ(r.code, 0);
    const auto rec = parse_out(r).at("records").at(0);
    EXPECT_LE(rec.at("macs_per_cycle").get<double>(), 256.0);
    EXPECT_GT(rec.at("macs_per_cycle").get<double>(), 0.0);
    EXPECT_LE(rec.at("speedup").get<double>(), 256.0);
}

TEST(Cli, KernelCholeskyInstances) {
    const CliResult r = run_cli("kernel cholesky --size 4 --instances 4096");
    ASSERT_EQ(r.code, 0);
    const auto rec = parse_out(r).at("records").at(0);
    EXPECT_EQ(rec.at("instances").get<std::uint64_t>(), 4096u);
    EXPECT_TRUE(rec.at("verified").get<bool>());
    EXPECT_EQ(rec.at("max_error").get<double>(), 0.0);
}

TEST(Cli, PipelineRecords) {
    const CliResult r = run_cli("--config " + configs() + "/pipeline_small.json pipeline");
    ASSERT_EQ(r.code, 0);
    const auto doc = parse_out(r);
    const auto& recs = doc.at("records");
    ASSERT_EQ(recs.size(), 6u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(recs[i].at("kind"), "stage");
        EXPECT_EQ(recs[i].at("name"), std::string(stage_name(kStages[i])));
        expect_accounted(recs[i]);
    }
    EXPECT_EQ(recs[5].at("kind"), "chain");
    double percent = 0.0;
    for (const auto& [k, v] : recs[5].at("cycle_percent").items()) percent += v.get<double>();
    EXPECT_NEAR(percent, 100.0, 1e-9);
}

TEST(Cli, PipelineNoiselessEvm) {
    const CliResult r = run_cli("--config " + configs() + "/pipeline_noiseless.json pipeline");
    ASSERT_EQ(r.code, 0);
    EXPECT_LE(parse_out(r).at("records").at(5).at("evm").get<double>(), 1e-3);
}

TEST(Cli, PipelineRepeatsByteForByte) {
    const std::string args = "--config " + configs() + "/pipeline_small.json pipeline";
    auto a = parse_out(run_cli(args));
    auto b = parse_out(run_cli(args));
    a.erase("timestamp");
    b.erase("timestamp");
    EXPECT_EQ(a.dump(2), b.dump(2));
}

TEST(Cli, SweepFftSizes) {
    const CliResult r = run_cli("--topology mempool sweep --kernel fft --sizes 64,256,1024 --instances 16");
    ASSERT_EQ(r.code, 0);
    const auto recs = parse_out(r).at("records");
    ASSERT_EQ(recs.size(), 3u);
    double last = 0.0;
    for (const auto& rec : recs) {
        EXPECT_GE(rec.at("speedup").get<double>(), last) << rec.at("size");
        last = rec.at("speedup").get<double>();
    }
}

TEST(Cli, SweepMmmCores) {
    const CliResult r = run_cli("--config " + configs() + "/sweep_mmm_cores.json sweep");
    ASSERT_EQ(r.code, 0);
    const auto recs = parse_out(r).at("records");
    ASSERT_EQ(recs.size(), 4u);
    for (const auto& rec : recs)
        EXPECT_LE(rec.at("speedup").get<double>(), rec.at("requested_cores").get<double>() + 1e-9);
}

TEST(Cli, SweepWithoutAxesIsOnePoint) {
    const CliResult r = run_cli("--topology minpool sweep --kernel mmse --size 4 --instances 8");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(parse_out(r).at("records").size(), 1u);
}

TEST(Cli, VerifyLayout) {
    CliResult r = run_cli("--topology mempool verify-layout fft --n 4096");
    ASSERT_EQ(r.code, 0);
    auto rec = parse_out(r).at("records").at(0);
    EXPECT_EQ(rec.at("local_read_fraction").get<double>(), 1.0);
    EXPECT_EQ(rec.at("conflict_count").get<std::uint64_t>(), 0u);
    r = run_cli("--topology mempool verify-layout fft --n 256 --unfolded");
    ASSERT_EQ(r.code, 0);
    rec = parse_out(r).at("records").at(0);
    EXPECT_LT(rec.at("local_read_fraction").get<double>(), 1.0);
}

TEST(Cli, CsvAndOutFile) {
    const fs::path out = fs::temp_directory_path() / "poolsim_test_out.csv";
    fs::remove(out);
    const CliResult r = run_cli("--topology minpool --format csv --out " + out.string() + " kernel ne --subcarriers 32 --beams 8");
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("kind,name", 0), 0u);
}

TEST(Cli, EchoedConfigReruns) {
    const CliResult first = run_cli("--topology minpool --seed 5 kernel mmse --size 3 --instances 6");
    ASSERT_EQ(first.code, 0);
    const auto doc = parse_out(first);
    const fs::path p = temp_file("echo.json", doc.at("config").dump());
    const CliResult second = run_cli("--config " + p.string() + " kernel mmse");
    ASSERT_EQ(second.code, 0);
    EXPECT_EQ(parse_out(second).at("config_hash"), doc.at("config_hash"));
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_cli("").code, 1);
    EXPECT_EQ(run_cli("kernel fft --bogus 3").code, 1);
    EXPECT_EQ(run_cli("kernel qr").code, 1);
    EXPECT_EQ(run_cli("--config /nonexistent.json kernel fft").code, 1);
    const fs::path bad = temp_file("bad.json", R"({"kernal": {}})");
    EXPECT_EQ(run_cli("--config " + bad.string() + " kernel fft").code, 1);
    EXPECT_EQ(run_cli("--topology minpool kernel fft --n 4096").code, 1);
    // an impatient deadlock detector trips on a long divide
    const fs::path slow = temp_file("slow.json", R"({"topology": "minpool",
        "engine": {"divsqrt_latency": 200, "deadlock_factor": 1}})");
    EXPECT_EQ(run_cli("--config " + slow.string() + " kernel cholesky --size 4 --instances 4").code, 3);
    EXPECT_EQ(run_cli("--help").code, 0);
}

} // namespace
} // namespace poolsim
