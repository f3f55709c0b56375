#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fpeproj/cli/config.hpp"
#include "fpeproj/cli/csv.hpp"
#include "fpeproj/cli/runner.hpp"
#include "fpeproj/cli/svg.hpp"
#include "fpeproj/errors.hpp"

using namespace fpeproj;
using namespace fpeproj::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fpeproj_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int count(const std::string& hay, const std::string& needle) {
    int n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

std::string config_error_key(const std::string& text) {
    try {
        (void)parse_config(nlohmann::json::parse(text));
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(FPE_PROJECT_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(EmitCsv, HeaderOnlyForEmptyRows) {
    const fs::path p = scratch("csv_empty") / "t.csv";
    emit_csv({"a", "b"}, {}, p);
    EXPECT_EQ(slurp(p), "a,b\n");
}

TEST(EmitCsv, OneRowTwoLines) {
    const fs::path p = scratch("csv_one") / "t.csv";
    emit_csv({"a", "b"}, {{1.0, 0.5}}, p);
    EXPECT_EQ(slurp(p), "a,b\n1,0.5\n");
}

TEST(EmitCsv, RoundTripIsExact) {
    const fs::path p = scratch("csv_rt") / "t.csv";
    const std::vector<std::vector<double>> rows{{0.1, 1.0 / 3.0, -2.5e-17}, {1e300, -0.0, 123456789.123456789}};
    emit_csv({"x", "y", "z"}, rows, p);
    const CsvTable t = read_csv(p);
    ASSERT_EQ(t.header, (std::vector<std::string>{"x", "y", "z"}));
    ASSERT_EQ(t.rows.size(), 2u);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(t.rows[i][j], rows[i][j]);
}

TEST(EmitCsv, ArityMismatchAndIoErrors) {
    EXPECT_THROW(emit_csv({"a"}, {{1.0, 2.0}}, scratch("csv_bad") / "t.csv"), Error);
    try {
        emit_csv({"a"}, {{1.0}}, "/nonexistent_dir_for_test/t.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::IoError);
    }
}

TEST(EmitPlot, ConstantSeriesIsHorizontal) {
    const std::string svg = render_plot({{"c", {0.0, 1.0, 2.0}, {3.0, 3.0, 3.0}}});
    ASSERT_EQ(count(svg, "<polyline"), 1);
    const auto pts = svg.find("points=\"", svg.find("<polyline")) + 8;
    const std::string points = svg.substr(pts, svg.find('"', pts) - pts);
    std::istringstream is(points);
    std::string pair;
    std::string y0;
    while (is >> pair) {
        const std::string y = pair.substr(pair.find(',') + 1);
        if (y0.empty()) y0 = y;
        EXPECT_EQ(y, y0);
    }
    EXPECT_NE(svg.find("<svg"), std::string::npos);
}

TEST(EmitPlot, TwoSeriesTwoLegendEntries) {
    const std::string svg = render_plot({{"first", {0.0, 1.0}, {0.0, 1.0}}, {"second", {0.0, 1.0}, {1.0, 0.0}}});
    EXPECT_EQ(count(svg, "<polyline"), 2);
    const std::string legend = svg.substr(svg.find("<g class=\"legend\""));
    EXPECT_NE(legend.find("first"), std::string::npos);
    EXPECT_NE(legend.find("second"), std::string::npos);
}

TEST(EmitPlot, EmptySeriesListIsRejected) {
    EXPECT_THROW((void)render_plot({}), Error);
}

TEST(EmitPlot, Deterministic) {
    const std::vector<PlotSeries> s{{"a", {0.0, 0.5, 1.0}, {1.0, 0.2, 0.7}}};
    EXPECT_EQ(render_plot(s), render_plot(s));
    const fs::path d = scratch("svg");
    emit_plot(s, d / "a.svg");
    emit_plot(s, d / "b.svg");
    EXPECT_EQ(slurp(d / "a.svg"), slurp(d / "b.svg"));
}

TEST(Config, PresetDefaults) {
    const ExperimentConfig c = parse_config(nlohmann::json::parse(R"({"preset":"ou-gaussian"})"));
    EXPECT_EQ(c.preset, Preset::OuGaussian);
    EXPECT_EQ(c.family.statistics.size(), 2u);
    EXPECT_EQ(c.initial.theta, (std::vector<double>{1.0, -1.0}));
    EXPECT_DOUBLE_EQ(c.time.t1, 5.0);
    EXPECT_FALSE(c.oracle.has_value());
}

TEST(Config, ValidationNamesTheKey) {
    EXPECT_EQ(config_error_key(R"({"preset":"ou-gaussian","time":{"t0":1,"t1":1}})"), "time.t1");
    EXPECT_EQ(config_error_key(R"({"preset":"ou-gaussian","bogus":1})"), "bogus");
    EXPECT_EQ(config_error_key(R"({"preset":"ou-gaussian","time":{"t2":1}})"), "time.t2");
    EXPECT_EQ(config_error_key(R"({"preset":"nope"})"), "preset");
    EXPECT_EQ(config_error_key(R"({"family":{"background":"weird"}})"), "family.background");
    EXPECT_EQ(config_error_key(R"({"family":{"background":"generalized:5"}})"), "family.background");
    EXPECT_EQ(config_error_key(R"({"oracle":{"m":2}})"), "oracle.m");
    EXPECT_EQ(config_error_key(R"({"model":{"a":"two"}})"), "model.a");
    EXPECT_EQ(config_error_key(R"({"preset":"eigen-mle","oracle":null})"), "oracle");
}

TEST(Config, MonomialIntegrabilityRule) {
    EXPECT_EQ(config_error_key(R"({"family":{"statistics":"monomial:3"},"initial":{"theta":[0,0,-1]}})"),
              "family.statistics");
    EXPECT_EQ(config_error_key(R"({"family":{"statistics":"monomial:2"},"initial":{"theta":[0,1]}})"),
              "initial.theta");
    EXPECT_EQ(config_error_key(
                  R"({"family":{"statistics":"monomial:3","background":"generalized:4"},"initial":{"theta":[0,0,1]}})"),
              "");
    EXPECT_EQ(config_error_key(R"({"family":{"statistics":[[0,1],[0,0,-1]]},"initial":{"theta":[0,1]}})"), "");
}

TEST(Config, NamedStatistics) {
    const auto h = named_statistics("hermite:3", "k");
    ASSERT_EQ(h.size(), 3u);
    EXPECT_EQ(max_coeff_diff(h[2], hermite(3)), 0.0);
    EXPECT_THROW(named_statistics("legendre:2", "k"), ConfigError);
    EXPECT_THROW(named_statistics("monomial:x", "k"), ConfigError);
}

TEST(Run, OuGaussianResidualIsTiny) {
    const fs::path dir = scratch("run_ou");
    const RunReport r = run_config(parse_config(nlohmann::json::parse(R"({"preset":"ou-gaussian"})")), {dir, {}});
    ASSERT_EQ(r.exit_code, 0) << r.message;
    const CsvTable t = read_csv(dir / "trajectory.csv");
    ASSERT_EQ(t.header.back(), "residual");
    ASSERT_EQ(t.header.size(), 6u);
    ASSERT_EQ(t.rows.size(), 51u);
    for (const auto& row : t.rows) EXPECT_LE(row.back(), 1e-8);
    EXPECT_TRUE(fs::exists(dir / "meta.txt"));
    EXPECT_FALSE(fs::exists(dir / "oracle.csv"));
}

TEST(Run, QuarticResidualIsPositive) {
    const fs::path dir = scratch("run_quartic");
    const RunReport r =
        run_config(parse_config(nlohmann::json::parse(R"({"preset":"quartic-residual","time":{"t1":1}})")), {dir, {}});
    ASSERT_EQ(r.exit_code, 0) << r.message;
    for (const auto& row : read_csv(dir / "trajectory.csv").rows) EXPECT_GT(row.back(), 0.0);
}

TEST(Run, OracleFileAndPlot) {
    const fs::path dir = scratch("run_oracle");
    const RunReport r = run_config(
        parse_config(nlohmann::json::parse(
            R"({"preset":"ou-gaussian","time":{"t1":1,"outputs":6},"oracle":{"dt":1e-3},"output":{"plot":true}})")),
        {dir, {}});
    ASSERT_EQ(r.exit_code, 0) << r.message;
    const CsvTable o = read_csv(dir / "oracle.csv");
    EXPECT_EQ(o.header, (std::vector<std::string>{"t", "eta_true_1", "eta_true_2", "eta_proj_1", "eta_proj_2",
                                                  "eps_norm"}));
    ASSERT_EQ(o.rows.size(), 6u);
    for (const auto& row : o.rows) EXPECT_LT(row.back(), 1e-4);
    EXPECT_TRUE(fs::exists(dir / "trajectory.svg"));
}

TEST(Run, DeterministicOutputs) {
    const auto cfg = parse_config(nlohmann::json::parse(R"({"preset":"heat-galerkin","time":{"t1":1}})"));
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    ASSERT_EQ(run_config(cfg, {a, {}}).exit_code, 0);
    ASSERT_EQ(run_config(cfg, {b, {}}).exit_code, 0);
    EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
}

TEST(Run, SynthesizeWritesEnsemble) {
    const fs::path dir = scratch("run_synth");
    const auto cfg = parse_config(nlohmann::json::parse(
        R"({"preset":"synthesize-sde","time":{"t1":0.5,"outputs":51},"synth":{"paths":20000,"times":[0.25,0.5]}})"));
    const RunReport r = run_config(cfg, {dir, std::uint64_t{7}});
    ASSERT_EQ(r.exit_code, 0) << r.operation << ": " << r.message;
    const std::string csv = slurp(dir / "ensemble.csv");
    EXPECT_EQ(csv.rfind("stat,empirical,target,stderr,z\n", 0), 0u);
    EXPECT_NE(csv.find("c1@t=0.25"), std::string::npos);
    EXPECT_NE(csv.find("c2@t=0.5"), std::string::npos);
}

TEST(Run, NumericFailureNamesOperation) {
    // theta far in the tail: the double-well flow from a huge variance start
    // collapses; a tiny synthesized grid forces paths to escape.
    const fs::path dir = scratch("run_fail");
    const auto cfg = parse_config(nlohmann::json::parse(
        R"({"preset":"synthesize-sde","time":{"t1":0.2,"outputs":5},"synth":{"paths":1000,"times":[],"lo":-0.5,"hi":0.5,"m":51}})"));
    const RunReport r = run_config(cfg, {dir, {}});
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_FALSE(r.operation.empty());
    EXPECT_NE(slurp(dir / "meta.txt").find("failed in"), std::string::npos);
}

TEST(Binary, ExitCodes) {
    const fs::path dir = scratch("bin");
    {
        std::ofstream(dir / "bad.json") << R"({"preset":"ou-gaussian","time":{"t1":-1}})";
        std::ofstream(dir / "broken.json") << "{not json";
        std::ofstream(dir / "ok.json") << R"({"preset":"heat-galerkin","time":{"t1":0.5}})";
    }
    EXPECT_EQ(run_binary("run --config " + (dir / "bad.json").string()), 2);
    EXPECT_EQ(run_binary("run --config " + (dir / "broken.json").string()), 2);
    EXPECT_EQ(run_binary("run --config " + (dir / "missing.json").string()), 2);
    EXPECT_EQ(run_binary("validate --config " + (dir / "ok.json").string()), 0);
    EXPECT_EQ(run_binary("presets"), 0);
    EXPECT_EQ(run_binary("run --config " + (dir / "ok.json").string() + " --out " + (dir / "out").string() +
                         " --seed 5"),
              0);
    EXPECT_TRUE(fs::exists(dir / "out" / "trajectory.csv"));
    EXPECT_EQ(run_binary("frobnicate"), 2);
}
