#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fpeproj/cli/config.hpp"
#include "fpeproj/expfam.hpp"
#include "fpeproj/sde.hpp"

namespace fpeproj::cli {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumeric = 3 };

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::uint64_t> seed;
};

struct RunReport {
    int exit_code = kExitOk;
    std::string operation;  ///< failing operation on exit 3
    std::string message;
    std::filesystem::path out_dir;
    std::vector<std::string> events;  ///< guard events and notes, also in meta.txt
};

BackgroundDensity make_background(const std::string& spec);
ExpFamily make_family(const FamilyConfig& cfg);
SdeModel make_model(const ModelConfig& cfg, const std::string& name);

/// Uniform output times with `count` points on [t0, t1].
std::vector<double> output_times(double t0, double t1, int count);

/// Executes a parsed configuration and writes its artifacts.
RunReport run_config(ExperimentConfig cfg, const RunOptions& opts = {});

/// Loads, validates and runs; prints a one-line summary to `out` or the
/// failure to `err`. Returns the process exit code.
int run_experiment(const std::filesystem::path& config_path, const RunOptions& opts, std::ostream& out,
                   std::ostream& err);

}  // namespace fpeproj::cli
