#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpeproj/field.hpp"

namespace fpeproj::cli {

/// Validation failure; `key` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

enum class Preset { OuGaussian, HeatGalerkin, QuarticResidual, EigenMle, SynthesizeSde, Custom };

std::string preset_name(Preset p);
std::optional<Preset> parse_preset(const std::string& name);
std::vector<std::string> preset_names();
std::string preset_description(Preset p);

struct FamilyConfig {
    /// "hermite:k", "monomial:k" or "explicit" when given as coefficient lists.
    std::string statistics_spec;
    std::vector<Polynomial> statistics;
    std::string background = "lebesgue";  ///< lebesgue | gaussian | generalized:m
};

struct ModelConfig {
    Polynomial drift;
    Polynomial a;
};

struct TimeConfig {
    double t0 = 0.0;
    double t1 = 1.0;
    double h0 = 1e-2;
    double rtol = 1e-10;
    double atol = 1e-12;
    int outputs = 51;  ///< uniformly spaced output rows including both ends
};

struct OracleConfig {
    double lo = -10.0;
    double hi = 10.0;
    int m = 2001;
    double dt = 1e-4;
};

struct OutputConfig {
    std::string dir = "out";
    bool plot = false;
};

struct MixtureComponent {
    double weight = 1.0;
    double mean = 0.0;
    double variance = 1.0;
};

struct InitialConfig {
    std::vector<double> theta;              ///< starting natural parameters (or inversion guess)
    std::vector<MixtureComponent> mixture;  ///< Gaussian mixture p0 for the grid oracle
    std::vector<double> offset;             ///< eigen-mle: added to the projected start
};

struct SynthConfig {
    std::size_t paths = 100000;
    double dt = 1e-3;
    std::vector<double> times;
    double grid_lo = -10.0;
    double grid_hi = 10.0;
    int grid_m = 2001;
};

struct ExperimentConfig {
    Preset preset = Preset::Custom;
    FamilyConfig family;
    ModelConfig model;
    TimeConfig time;
    std::optional<OracleConfig> oracle;
    OutputConfig output;
    InitialConfig initial;
    SynthConfig synth;
    std::uint64_t seed = 42;
    nlohmann::json source;  ///< document as read, echoed into meta.txt
};

/// Preset defaults overlaid with the document's entries. Unknown keys and
/// out-of-range values raise ConfigError naming the key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Parses "hermite:k" / "monomial:k".
std::vector<Polynomial> named_statistics(const std::string& spec, const std::string& key);

}  // namespace fpeproj::cli
