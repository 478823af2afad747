#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "decaylab/error.hpp"
#include "decaylab/scenarios.hpp"

namespace decaylab {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

int exit_code_for(ErrorCode code) noexcept;

struct RunOutcome {
    int exit_code = kExitOk;
    /// Files written, in order.
    std::vector<std::filesystem::path> files;
    std::string message;
};

/// Runs the scenario's pipeline and writes its artifacts into `out_dir`.
/// Numerical failures keep whatever was computed before them on disk.
/// Never throws for library errors; they become the exit code.
RunOutcome run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir, std::ostream& log);

/// `decaylab <verb> ...`; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace decaylab
