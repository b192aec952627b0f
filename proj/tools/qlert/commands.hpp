#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>

#include "config.hpp"

namespace qlert::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitNonConvergence = 3,
    kExitIo = 4,
};

struct RunOptions {
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;  // overrides task.tomo.seed
    int threads = 1;
};

// Runs the configured command and writes its artifacts into options.out
// (created if needed). Progress goes to `log`. Returns kExitOk, or
// kExitNonConvergence when a sweep point failed (artifacts are still written).
// Throws on every other failure; see exit_code_for().
int run_command(const RunConfig& config, const RunOptions& options, std::ostream& log);

// Maps an exception from load_config()/run_command() to an exit code.
int exit_code_for(const std::exception& error);

}  // namespace qlert::cli
