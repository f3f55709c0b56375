#include "fpeproj/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace fpeproj::cli {
namespace {

using nlohmann::json;

struct PresetInfo {
    Preset preset;
    const char* name;
    const char* description;
};

constexpr PresetInfo kPresets[] = {
    {Preset::OuGaussian, "ou-gaussian", "Ornstein-Uhlenbeck f=-x, a=2 projected on c=(x,x^2); exact Gaussian closure"},
    {Preset::HeatGalerkin, "heat-galerkin", "Galerkin flow of dp/dt = (a p')' with W=(x,x^2-1) over a Gaussian background"},
    {Preset::QuarticResidual, "quartic-residual", "double well f=x-x^3, a=2 on the Gaussian family; nonzero residual"},
    {Preset::EigenMle, "eigen-mle", "OU with Hermite statistics He1..He4 against the grid oracle from a bimodal start"},
    {Preset::SynthesizeSde, "synthesize-sde", "modified SDE whose marginals follow the projected double-well flow"},
    {Preset::Custom, "custom", "user supplied family, model and time span"},
};

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
    }
}

double get_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(key, "must be finite");
    return d;
}

long long get_integer(const json& v, const std::string& key) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(key, "expected an integer");
    return v.get<long long>();
}

std::vector<double> get_vector(const json& v, const std::string& key) {
    if (!v.is_array()) throw ConfigError(key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], key + "[" + std::to_string(i) + "]"));
    return out;
}

Polynomial get_polynomial(const json& v, const std::string& key) {
    if (v.is_number()) return Polynomial::constant(get_number(v, key));
    auto c = get_vector(v, key);
    if (c.empty()) throw ConfigError(key, "empty coefficient list");
    return Polynomial(std::move(c));
}

void read_family(const json& j, FamilyConfig& fam) {
    check_keys(j, "family", {"statistics", "background"});
    if (j.contains("statistics")) {
        const json& s = j["statistics"];
        if (s.is_string()) {
            fam.statistics_spec = s.get<std::string>();
            fam.statistics = named_statistics(fam.statistics_spec, "family.statistics");
        } else if (s.is_array()) {
            if (s.empty()) throw ConfigError("family.statistics", "at least one statistic is required");
            fam.statistics_spec = "explicit";
            fam.statistics.clear();
            for (std::size_t i = 0; i < s.size(); ++i) {
                const std::string key = "family.statistics[" + std::to_string(i) + "]";
                Polynomial p = get_polynomial(s[i], key);
                if (p.degree() < 1) throw ConfigError(key, "statistics must be nonconstant");
                fam.statistics.push_back(std::move(p));
            }
        } else {
            throw ConfigError("family.statistics", "expected \"hermite:k\", \"monomial:k\" or coefficient lists");
        }
    }
    if (j.contains("background")) {
        if (!j["background"].is_string()) throw ConfigError("family.background", "expected a string");
        fam.background = j["background"].get<std::string>();
    }
}

int generalized_order(const std::string& bg) {
    const std::string prefix = "generalized:";
    if (bg.rfind(prefix, 0) != 0) return 0;
    try {
        std::size_t used = 0;
        const int m = std::stoi(bg.substr(prefix.size()), &used);
        if (used != bg.size() - prefix.size()) return -1;
        return m;
    } catch (const std::exception&) {
        return -1;
    }
}

void defaults_for(Preset p, ExperimentConfig& c) {
    c.preset = p;
    c.family.statistics_spec = "monomial:2";
    c.family.statistics = named_statistics("monomial:2", "family.statistics");
    c.family.background = "lebesgue";
    c.time = TimeConfig{};
    c.oracle.reset();
    switch (p) {
        case Preset::OuGaussian:
            c.model = {Polynomial{0.0, -1.0}, Polynomial{2.0}};
            c.time.t1 = 5.0;
            c.initial.theta = {1.0, -1.0};
            break;
        case Preset::HeatGalerkin:
            c.family.statistics_spec = "explicit";
            c.family.statistics = {Polynomial{0.0, 1.0}, Polynomial{-1.0, 0.0, 1.0}};
            c.family.background = "gaussian";
            c.model = {Polynomial{}, Polynomial{1.0}};
            c.time.t1 = 5.0;
            c.initial.theta = {0.0, 0.0};
            break;
        case Preset::QuarticResidual:
            c.model = {Polynomial{0.0, 1.0, 0.0, -1.0}, Polynomial{2.0}};
            c.time.t1 = 5.0;
            c.initial.theta = {0.0, -0.5};
            break;
        case Preset::EigenMle:
            c.family.statistics_spec = "hermite:4";
            c.family.statistics = named_statistics("hermite:4", "family.statistics");
            c.model = {Polynomial{0.0, -1.0}, Polynomial{2.0}};
            c.time.t1 = 2.0;
            c.time.outputs = 21;
            c.oracle = OracleConfig{};
            c.initial.theta = {0.0, -0.5, 0.0, -0.01};
            c.initial.mixture = {{0.5, -1.0, 0.09}, {0.5, 1.0, 0.09}};
            break;
        case Preset::SynthesizeSde:
            c.model = {Polynomial{0.0, 1.0, 0.0, -1.0}, Polynomial{2.0}};
            c.time.t1 = 1.0;
            c.time.outputs = 201;
            c.initial.theta = {1.0, -1.0};
            c.synth.times = {0.5, 1.0};
            break;
        case Preset::Custom:
            c.model = {Polynomial{0.0, -1.0}, Polynomial{2.0}};
            c.initial.theta = {0.0, -0.5};
            break;
    }
}

void validate(const ExperimentConfig& c) {
    const auto& t = c.time;
    if (!(t.t1 > t.t0)) throw ConfigError("time.t1", "must exceed time.t0");
    if (!(t.h0 > 0.0)) throw ConfigError("time.h0", "must be positive");
    if (!(t.rtol > 0.0)) throw ConfigError("time.rtol", "must be positive");
    if (!(t.atol > 0.0)) throw ConfigError("time.atol", "must be positive");
    if (t.outputs < 2) throw ConfigError("time.outputs", "need at least 2 output rows");

    const std::string& bg = c.family.background;
    const int m = generalized_order(bg);
    if (bg != "lebesgue" && bg != "gaussian" && m == 0)
        throw ConfigError("family.background", "expected lebesgue, gaussian or generalized:m");
    if (m != 0 && (m < 4 || m % 2 != 0)) throw ConfigError("family.background", "generalized order must be even and >= 4");

    const std::size_t n = c.family.statistics.size();
    if (n == 0) throw ConfigError("family.statistics", "at least one statistic is required");
    if (c.initial.theta.size() != n)
        throw ConfigError("initial.theta", "expected " + std::to_string(n) + " entries");

    // Integrability of exp(theta . c) without a decaying background needs the
    // top-degree statistic to be even with a negative coefficient.
    if (bg == "lebesgue") {
        int top = 0;
        double lead = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Polynomial& p = c.family.statistics[i];
            if (p.degree() > top) {
                top = p.degree();
                lead = 0.0;
            }
            if (p.degree() == top) lead += c.initial.theta[i] * p.coeff(top);
        }
        if (top % 2 != 0)
            throw ConfigError("family.statistics", "odd top degree needs a gaussian or generalized background");
        if (!(lead < 0.0))
            throw ConfigError("initial.theta", "leading coefficient of theta . c must be negative on a lebesgue background");
    }
    if (m != 0) {
        for (std::size_t i = 0; i < n; ++i)
            if (c.family.statistics[i].degree() >= m)
                throw ConfigError("family.statistics", "degree must stay below the generalized background order");
    }

    if (c.model.a.is_zero() && c.preset != Preset::HeatGalerkin)
        throw ConfigError("model.a", "squared diffusion must not vanish identically");
    if (c.preset == Preset::HeatGalerkin && !c.model.drift.is_zero())
        throw ConfigError("model.drift", "heat-galerkin takes no drift; a(x) alone defines the equation");
    if (c.preset == Preset::HeatGalerkin && c.model.a.is_zero())
        throw ConfigError("model.a", "diffusion coefficient must not vanish identically");

    if (c.oracle) {
        if (!(c.oracle->hi > c.oracle->lo)) throw ConfigError("oracle.hi", "must exceed oracle.lo");
        if (c.oracle->m < 3) throw ConfigError("oracle.m", "need at least 3 grid points");
        if (!(c.oracle->dt > 0.0)) throw ConfigError("oracle.dt", "must be positive");
    }
    if (c.preset == Preset::EigenMle && !c.oracle) throw ConfigError("oracle", "eigen-mle requires the grid oracle");
    for (std::size_t i = 0; i < c.initial.mixture.size(); ++i) {
        const auto& comp = c.initial.mixture[i];
        const std::string key = "initial.mixture[" + std::to_string(i) + "]";
        if (!(comp.weight > 0.0)) throw ConfigError(key, "weight must be positive");
        if (!(comp.variance > 0.0)) throw ConfigError(key, "variance must be positive");
    }
    if (!c.initial.offset.empty() && c.initial.offset.size() != n)
        throw ConfigError("initial.offset", "expected " + std::to_string(n) + " entries");

    if (c.preset == Preset::SynthesizeSde) {
        const auto& s = c.synth;
        if (s.paths == 0) throw ConfigError("synth.paths", "must be positive");
        if (!(s.dt > 0.0)) throw ConfigError("synth.dt", "must be positive");
        if (!(s.grid_hi > s.grid_lo)) throw ConfigError("synth.hi", "must exceed synth.lo");
        if (s.grid_m < 3) throw ConfigError("synth.m", "need at least 3 grid points");
        for (double tt : s.times)
            if (tt < t.t0 || tt > t.t1) throw ConfigError("synth.times", "record times must lie in [time.t0, time.t1]");
    }
    if (c.output.dir.empty()) throw ConfigError("output.dir", "must not be empty");
}

}  // namespace

std::string preset_name(Preset p) {
    for (const auto& info : kPresets)
        if (info.preset == p) return info.name;
    return "custom";
}

std::optional<Preset> parse_preset(const std::string& name) {
    for (const auto& info : kPresets)
        if (name == info.name) return info.preset;
    return std::nullopt;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& info : kPresets) out.emplace_back(info.name);
    return out;
}

std::string preset_description(Preset p) {
    for (const auto& info : kPresets)
        if (info.preset == p) return info.description;
    return {};
}

std::vector<Polynomial> named_statistics(const std::string& spec, const std::string& key) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ConfigError(key, "expected \"hermite:k\" or \"monomial:k\"");
    const std::string kind = spec.substr(0, colon);
    int k = 0;
    try {
        std::size_t used = 0;
        k = std::stoi(spec.substr(colon + 1), &used);
        if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError(key, "bad degree in \"" + spec + "\"");
    }
    if (k < 1 || k > 12) throw ConfigError(key, "degree must be in 1..12");
    std::vector<Polynomial> out;
    for (int i = 1; i <= k; ++i) {
        if (kind == "hermite") out.push_back(hermite(i));
        else if (kind == "monomial") out.push_back(Polynomial::monomial(i));
        else throw ConfigError(key, "unknown statistics family \"" + kind + "\"");
    }
    return out;
}

ExperimentConfig parse_config(const json& doc) {
    check_keys(doc, "", {"preset", "family", "model", "time", "oracle", "output", "initial", "synth", "seed"});
    ExperimentConfig c;
    Preset preset = Preset::Custom;
    if (doc.contains("preset")) {
        if (!doc["preset"].is_string()) throw ConfigError("preset", "expected a string");
        const auto p = parse_preset(doc["preset"].get<std::string>());
        if (!p) throw ConfigError("preset", "unknown preset \"" + doc["preset"].get<std::string>() + "\"");
        preset = *p;
    }
    defaults_for(preset, c);
    c.source = doc;

    if (doc.contains("family")) {
        const bool had_theta = doc.contains("initial") && doc["initial"].is_object() && doc["initial"].contains("theta");
        read_family(doc["family"], c.family);
        if (!had_theta && c.initial.theta.size() != c.family.statistics.size())
            throw ConfigError("initial.theta", "required when the family dimension differs from the preset");
    }
    if (doc.contains("model")) {
        const json& j = doc["model"];
        check_keys(j, "model", {"drift", "a"});
        if (j.contains("drift")) c.model.drift = get_polynomial(j["drift"], "model.drift");
        if (j.contains("a")) c.model.a = get_polynomial(j["a"], "model.a");
    }
    if (doc.contains("time")) {
        const json& j = doc["time"];
        check_keys(j, "time", {"t0", "t1", "h0", "rtol", "atol", "outputs"});
        if (j.contains("t0")) c.time.t0 = get_number(j["t0"], "time.t0");
        if (j.contains("t1")) c.time.t1 = get_number(j["t1"], "time.t1");
        if (j.contains("h0")) c.time.h0 = get_number(j["h0"], "time.h0");
        if (j.contains("rtol")) c.time.rtol = get_number(j["rtol"], "time.rtol");
        if (j.contains("atol")) c.time.atol = get_number(j["atol"], "time.atol");
        if (j.contains("outputs")) {
            const long long o = get_integer(j["outputs"], "time.outputs");
            if (o < 2 || o > 100000) throw ConfigError("time.outputs", "must be in 2..100000");
            c.time.outputs = static_cast<int>(o);
        }
    }
    if (doc.contains("oracle")) {
        const json& j = doc["oracle"];
        if (j.is_null()) {
            c.oracle.reset();
        } else {
            check_keys(j, "oracle", {"lo", "hi", "m", "dt"});
            OracleConfig o = c.oracle.value_or(OracleConfig{});
            if (j.contains("lo")) o.lo = get_number(j["lo"], "oracle.lo");
            if (j.contains("hi")) o.hi = get_number(j["hi"], "oracle.hi");
            if (j.contains("m")) {
                const long long m = get_integer(j["m"], "oracle.m");
                if (m < 3 || m > 1000000) throw ConfigError("oracle.m", "must be in 3..1000000");
                o.m = static_cast<int>(m);
            }
            if (j.contains("dt")) o.dt = get_number(j["dt"], "oracle.dt");
            c.oracle = o;
        }
    }
    if (doc.contains("output")) {
        const json& j = doc["output"];
        check_keys(j, "output", {"dir", "plot"});
        if (j.contains("dir")) {
            if (!j["dir"].is_string()) throw ConfigError("output.dir", "expected a string");
            c.output.dir = j["dir"].get<std::string>();
        }
        if (j.contains("plot")) {
            if (!j["plot"].is_boolean()) throw ConfigError("output.plot", "expected true or false");
            c.output.plot = j["plot"].get<bool>();
        }
    }
    if (doc.contains("initial")) {
        const json& j = doc["initial"];
        check_keys(j, "initial", {"theta", "mixture", "offset"});
        if (j.contains("theta")) c.initial.theta = get_vector(j["theta"], "initial.theta");
        if (j.contains("offset")) c.initial.offset = get_vector(j["offset"], "initial.offset");
        if (j.contains("mixture")) {
            const json& mix = j["mixture"];
            if (!mix.is_array()) throw ConfigError("initial.mixture", "expected a list of [weight, mean, variance]");
            c.initial.mixture.clear();
            for (std::size_t i = 0; i < mix.size(); ++i) {
                const std::string key = "initial.mixture[" + std::to_string(i) + "]";
                const auto v = get_vector(mix[i], key);
                if (v.size() != 3) throw ConfigError(key, "expected [weight, mean, variance]");
                c.initial.mixture.push_back({v[0], v[1], v[2]});
            }
        }
    }
    if (doc.contains("synth")) {
        const json& j = doc["synth"];
        check_keys(j, "synth", {"paths", "dt", "times", "lo", "hi", "m"});
        if (j.contains("paths")) {
            const long long p = get_integer(j["paths"], "synth.paths");
            if (p < 1 || p > 100000000) throw ConfigError("synth.paths", "must be in 1..1e8");
            c.synth.paths = static_cast<std::size_t>(p);
        }
        if (j.contains("dt")) c.synth.dt = get_number(j["dt"], "synth.dt");
        if (j.contains("times")) c.synth.times = get_vector(j["times"], "synth.times");
        if (j.contains("lo")) c.synth.grid_lo = get_number(j["lo"], "synth.lo");
        if (j.contains("hi")) c.synth.grid_hi = get_number(j["hi"], "synth.hi");
        if (j.contains("m")) {
            const long long m = get_integer(j["m"], "synth.m");
            if (m < 3 || m > 1000000) throw ConfigError("synth.m", "must be in 3..1000000");
            c.synth.grid_m = static_cast<int>(m);
        }
    }
    if (doc.contains("seed")) {
        const json& s = doc["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            throw ConfigError("seed", "expected a non-negative integer");
        c.seed = s.get<std::uint64_t>();
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, false);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("parse error: ") + e.what());
    }
    return parse_config(doc);
}

}  // namespace fpeproj::cli
