#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "decaylab/cli.hpp"

using namespace decaylab;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "decaylab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("decaylab_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Cli, SlowScenarioWritesSlowReport) {
    const fs::path out = scratch_dir("slow");
    const CliRun r = run({"--out", out.string(), "scenario", "slow_counterexample"});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string report = slurp(out / "slow_counterexample" / "report.csv");
    EXPECT_NE(report.find("slow_counterexample,slow,"), std::string::npos);
    for (const char* f : {"spectrum.csv", "trajectory.csv", "trace.csv", "energy.dat", "quotient.dat"})
        EXPECT_TRUE(fs::exists(out / "slow_counterexample" / f)) << f;
}

TEST(Cli, OutputsAreByteIdenticalAcrossRuns) {
    const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
    ASSERT_EQ(run({"--out", a.string(), "--seed", "4", "scenario", "random_linear"}).code, 0);
    ASSERT_EQ(run({"--out", b.string(), "--seed", "4", "scenario", "random_linear"}).code, 0);
    for (const char* f : {"trajectory.csv", "trace.csv", "report.csv", "spectrum.csv"})
        EXPECT_EQ(slurp(a / "random_linear_4" / f), slurp(b / "random_linear_4" / f)) << f;
}

TEST(Cli, BlowupIsNumericalFailureWithPartialOutput) {
    const fs::path out = scratch_dir("blowup");
    const CliRun r = run({"--out", out.string(), "scenario", "blowup"});
    EXPECT_EQ(r.code, kExitNumerical);
    EXPECT_NE(r.err.find("StepSizeUnderflow"), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "blowup" / "trajectory.csv"));
    EXPECT_NE(slurp(out / "blowup" / "report.csv").find("nonglobal"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwo) {
    const fs::path out = scratch_dir("cfg");
    write_file(out / "bad.cfg", "[operator]\ndelta = zero\neigenvalues = 1\n");
    const CliRun r = run({"--out", out.string(), "simulate", (out / "bad.cfg").string()});
    EXPECT_EQ(r.code, kExitConfig);
    EXPECT_NE(r.err.find("operator.delta"), std::string::npos);
    EXPECT_EQ(run({"scenario", "unknown_thing"}).code, kExitConfig);
    EXPECT_EQ(run({"frobnicate"}).code, kExitConfig);
}

TEST(Cli, MissingConfigIsIoError) {
    EXPECT_EQ(run({"simulate", "/nonexistent/dir/x.cfg"}).code, kExitIo);
}

TEST(Cli, UnwritableOutputIsIoError) {
    EXPECT_EQ(run({"--out", "/proc/decaylab", "scenario", "slow_counterexample"}).code, kExitIo);
}

TEST(Cli, ConstructFastVerb) {
    const fs::path out = scratch_dir("construct");
    write_file(out / "cubic.cfg",
               "name = cubic\n[operator]\ndelta = 0.5\neigenvalues = 0.09\n[nonlinearity]\ntype = cubic\n"
               "[construct]\nr0 = 0.1\nv_u = 0.02\nv_v = -0.002\nt_end = 150\n");
    const CliRun r = run({"--out", out.string(), "construct-fast", (out / "cubic.cfg").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(out / "cubic" / "construction.csv"));
    EXPECT_NE(slurp(out / "cubic" / "constructed_report.csv").find(",fast,"), std::string::npos);
}

TEST(Cli, OversizedConstructionFailsUnlessOverridden) {
    const fs::path out = scratch_dir("override");
    write_file(out / "big.cfg",
               "name = big\n[operator]\ndelta = 0.5\neigenvalues = 0.09\n[nonlinearity]\ntype = cubic\n"
               "[construct]\nr0 = 0.1\nv_u = 0.2\nv_v = -0.02\nt_end = 150\n");
    const CliRun r = run({"--out", out.string(), "construct-fast", (out / "big.cfg").string()});
    EXPECT_EQ(r.code, kExitNumerical);
    EXPECT_NE(r.err.find("SmallnessViolated"), std::string::npos);
    const CliRun forced = run({"--out", out.string(), "--override-smallness", "construct-fast", (out / "big.cfg").string()});
    EXPECT_NE(forced.out.find("smallness override"), std::string::npos) << forced.out << forced.err;
}

TEST(Cli, BatchRunsEveryConfig) {
    const fs::path dir = scratch_dir("batch_in"), out = scratch_dir("batch_out");
    write_file(dir / "a.cfg", "scenario = ode_scalar\nt_end = 300\n");
    write_file(dir / "b.cfg", "scenario = random_linear\nseed = 2\n");
    write_file(dir / "c.cfg", "scenario = blowup\n");
    const CliRun r = run({"--out", out.string(), "batch", dir.string()});
    EXPECT_EQ(r.code, kExitNumerical);
    EXPECT_TRUE(fs::exists(out / "a" / "report.csv"));
    EXPECT_TRUE(fs::exists(out / "b" / "report.csv"));
    EXPECT_TRUE(fs::exists(out / "c" / "trajectory.csv"));
}

TEST(Cli, EnvironmentSelectsOutputDirectory) {
    const fs::path out = scratch_dir("env");
    ::setenv("DECAYLAB_OUT", out.string().c_str(), 1);
    const CliRun r = run({"--t-end", "50", "scenario", "fast_optimality"});
    ::unsetenv("DECAYLAB_OUT");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(out / "fast_optimality" / "spectrum.csv"));
}
