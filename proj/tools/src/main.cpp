#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fpeproj/cli/config.hpp"
#include "fpeproj/cli/runner.hpp"

int main(int argc, char** argv) {
    using namespace fpeproj::cli;

    CLI::App app{"Fisher-Rao projection of Fokker-Planck flows onto exponential families"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run an experiment");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides output.dir)");
    auto* seed_opt = run->add_option("--seed", seed, "RNG seed (overrides seed)");

    auto* presets = app.add_subcommand("presets", "list presets");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "parse and validate a config without running");
    validate->add_option("--config", validate_path, "experiment config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    if (*presets) {
        for (const auto& name : preset_names())
            std::cout << name << "  " << preset_description(*parse_preset(name)) << '\n';
        return kExitOk;
    }
    if (*validate) {
        try {
            const ExperimentConfig cfg = load_config(validate_path);
            std::cout << "ok: preset " << preset_name(cfg.preset) << ", " << cfg.family.statistics.size()
                      << " statistics\n";
            return kExitOk;
        } catch (const ConfigError& e) {
            std::cerr << "validation error: " << e.what() << '\n';
            return kExitValidation;
        }
    }
    RunOptions opts;
    if (*out_opt) opts.out_dir = out_dir;
    if (*seed_opt) opts.seed = seed;
    try {
        return run_experiment(config_path, opts, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "numeric failure in run: " << e.what() << '\n';
        return kExitNumeric;
    }
}
