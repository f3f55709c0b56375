#include "fpeproj/cli/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <Eigen/Core>

#include "fpeproj/cli/csv.hpp"
#include "fpeproj/cli/svg.hpp"
#include "fpeproj/errors.hpp"
#include "fpeproj/oracle.hpp"
#include "fpeproj/projection.hpp"
#include "fpeproj/synth.hpp"

namespace fpeproj::cli {
namespace {

/// Numeric failure tagged with the operation that raised it.
struct StageFailure {
    std::string operation;
    std::string message;
};

template <class F>
auto stage(const char* operation, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw StageFailure{operation, e.what()};
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageFailure{operation, e.what()};
    }
}

struct Outputs {
    std::vector<double> t;
    std::vector<Vector> theta;
    std::vector<Vector> eta;
    std::vector<double> residual;
};

struct OracleRows {
    std::vector<double> t;
    std::vector<Vector> eta_true;
    std::vector<Vector> eta_proj;
};

std::vector<std::string> indexed(const std::string& stem, int n) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(stem + "_" + std::to_string(i));
    return out;
}

void write_trajectory(const Outputs& o, int n, const std::filesystem::path& path) {
    std::vector<std::string> header{"t"};
    for (auto& h : indexed("theta", n)) header.push_back(h);
    for (auto& h : indexed("eta", n)) header.push_back(h);
    header.push_back("residual");
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < o.t.size(); ++k) {
        std::vector<double> row{o.t[k]};
        for (int i = 0; i < n; ++i) row.push_back(o.theta[k][i]);
        for (int i = 0; i < n; ++i) row.push_back(o.eta[k][i]);
        row.push_back(o.residual[k]);
        rows.push_back(std::move(row));
    }
    emit_csv(header, rows, path);
}

void write_oracle(const OracleRows& o, int n, const std::filesystem::path& path) {
    std::vector<std::string> header{"t"};
    for (auto& h : indexed("eta_true", n)) header.push_back(h);
    for (auto& h : indexed("eta_proj", n)) header.push_back(h);
    header.push_back("eps_norm");
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < o.t.size(); ++k) {
        std::vector<double> row{o.t[k]};
        for (int i = 0; i < n; ++i) row.push_back(o.eta_true[k][i]);
        for (int i = 0; i < n; ++i) row.push_back(o.eta_proj[k][i]);
        row.push_back((o.eta_true[k] - o.eta_proj[k]).lpNorm<Eigen::Infinity>());
        rows.push_back(std::move(row));
    }
    emit_csv(header, rows, path);
}

void write_plot(const Outputs& o, int n, const std::string& title, const std::filesystem::path& path) {
    std::vector<PlotSeries> series;
    for (int i = 0; i < n; ++i) {
        PlotSeries s{"theta_" + std::to_string(i + 1), o.t, {}};
        for (const Vector& th : o.theta) s.y.push_back(th[i]);
        series.push_back(std::move(s));
    }
    PlotOptions po;
    po.title = title;
    po.y_label = "theta";
    emit_plot(series, path, po);
}

Grid1D oracle_grid(const ExperimentConfig& cfg) {
    const OracleConfig o = cfg.oracle.value_or(OracleConfig{});
    Grid1D g{o.lo, o.hi, o.m};
    g.validate();
    return g;
}

GridDensity mixture_density(const Grid1D& grid, const std::vector<MixtureComponent>& mix) {
    double total = 0.0;
    for (const auto& c : mix) total += c.weight;
    GridDensity p = GridDensity::from_function(grid, [&](double x) {
        double v = 0.0;
        for (const auto& c : mix) v += c.weight / total * normal_pdf(x, c.mean, c.variance);
        return v;
    });
    p.normalize();
    return p;
}

std::string format_vector(const Vector& v) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << format_number(v[i]);
    os << ')';
    return os.str();
}

Outputs rows_from_trajectory(const ExpFamily& fam, const SdeModel& model, const Trajectory& traj) {
    Outputs o;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const NaturalParams th{traj.states[k]};
        o.t.push_back(traj.times[k]);
        o.theta.push_back(th.theta);
        o.eta.push_back(stage("mean_params", [&] { return mean_params(fam, th).eta; }));
        o.residual.push_back(stage("residual", [&] { return residual(fam, model, {traj.times[k], th}).r2; }));
    }
    return o;
}

OracleRows oracle_rows(const ExpFamily& fam, const SdeModel& model, const GridDensity& p0, const Outputs& o,
                       double dt, std::vector<std::string>& events) {
    FpeOptions fo;
    fo.output_times.assign(o.t.begin() + 1, o.t.end());
    const double t1 = o.t.back();
    const FpeResult res = stage("fpe_solve", [&] { return fpe_solve(model, p0, o.t.front(), t1, dt, fo); });
    for (const auto& line : res.log) events.push_back("oracle: " + line);
    events.push_back("oracle: mass drift rate " + format_number(res.mass_drift_rate));
    OracleRows rows;
    const std::size_t count = std::min(res.snapshots.size(), o.t.size());
    for (std::size_t k = 0; k < count; ++k) {
        rows.t.push_back(o.t[k]);
        rows.eta_true.push_back(stage("grid_moments", [&] { return grid_moments(fam, res.snapshots[k].density).eta; }));
        rows.eta_proj.push_back(o.eta[k]);
    }
    return rows;
}

IntegrateOptions ode_options(const TimeConfig& t) {
    IntegrateOptions io;
    io.h0 = t.h0;
    io.rtol = t.rtol;
    io.atol = t.atol;
    io.record_steps = false;
    return io;
}

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void note_exit(const Trajectory& traj, std::vector<std::string>& events) {
    if (traj.exit)
        events.push_back("guard: integration stopped at t=" + format_number(traj.exit->t) + " (" +
                         traj.exit->reason + ")");
}

void run_projected(const ExperimentConfig& cfg, const std::filesystem::path& dir, RunReport& report) {
    const ExpFamily fam = make_family(cfg.family);
    const SdeModel model = make_model(cfg.model, preset_name(cfg.preset));
    const int n = fam.n();
    NaturalParams theta0{to_vector(cfg.initial.theta)};
    std::optional<GridDensity> p0;
    if (!cfg.initial.mixture.empty()) {
        p0 = mixture_density(oracle_grid(cfg), cfg.initial.mixture);
        theta0 = stage("moment_project", [&] { return moment_project(fam, *p0, theta0).first; });
        report.events.push_back("initial: moment projection of the mixture, theta0 = " + format_vector(theta0.theta));
    }
    const auto times = output_times(cfg.time.t0, cfg.time.t1, cfg.time.outputs);
    const Trajectory traj = stage("projected_flow", [&] {
        return integrate_at(projected_flow(fam, model, theta0, cfg.time.t0, cfg.time.t1), times,
                            ode_options(cfg.time));
    });
    note_exit(traj, report.events);
    const Outputs o = rows_from_trajectory(fam, model, traj);
    write_trajectory(o, n, dir / "trajectory.csv");
    if (cfg.oracle) {
        if (!p0) p0 = stage("from_family", [&] { return GridDensity::from_family(oracle_grid(cfg), fam, theta0); });
        write_oracle(oracle_rows(fam, model, *p0, o, cfg.oracle->dt, report.events), n, dir / "oracle.csv");
    }
    if (cfg.output.plot) write_plot(o, n, preset_name(cfg.preset), dir / "trajectory.svg");
}

void run_galerkin(const ExperimentConfig& cfg, const std::filesystem::path& dir, RunReport& report) {
    GalerkinBasis basis;
    for (const Polynomial& w : cfg.family.statistics) basis.W.emplace_back(w);
    basis.coeff = SmoothField(cfg.model.a);
    basis.background = make_background(cfg.family.background);
    const ExpFamily fam = basis.family();
    const SdeModel model = divergence_form(basis.coeff);
    try {
        check_model(model, output_times(-5.0, 5.0, 11));
    } catch (const Error& e) {
        throw ConfigError("model.a", e.what());
    }
    const int n = fam.n();
    const NaturalParams theta0{to_vector(cfg.initial.theta)};
    const auto times = output_times(cfg.time.t0, cfg.time.t1, cfg.time.outputs);
    const Trajectory traj = stage("galerkin_flow", [&] {
        return integrate_at(galerkin_flow(basis, theta0, cfg.time.t0, cfg.time.t1), times, ode_options(cfg.time));
    });
    note_exit(traj, report.events);
    const Outputs o = rows_from_trajectory(fam, model, traj);
    write_trajectory(o, n, dir / "trajectory.csv");
    if (cfg.oracle) {
        const GridDensity p0 =
            stage("from_family", [&] { return GridDensity::from_family(oracle_grid(cfg), fam, theta0); });
        write_oracle(oracle_rows(fam, model, p0, o, cfg.oracle->dt, report.events), n, dir / "oracle.csv");
    }
    if (cfg.output.plot) write_plot(o, n, preset_name(cfg.preset), dir / "trajectory.svg");
}

void run_eigen_mle(const ExperimentConfig& cfg, const std::filesystem::path& dir, RunReport& report) {
    const ExpFamily fam = make_family(cfg.family);
    const SdeModel model = make_model(cfg.model, preset_name(cfg.preset));
    const int n = fam.n();
    const Vector lambda = stage("eigen_spectrum", [&] { return eigen_spectrum(fam, model); });
    report.events.push_back("spectrum: Lambda = " + format_vector(lambda));

    const Grid1D grid = oracle_grid(cfg);
    const NaturalParams guess{to_vector(cfg.initial.theta)};
    const GridDensity p0 = cfg.initial.mixture.empty()
                               ? stage("from_family", [&] { return GridDensity::from_family(grid, fam, guess); })
                               : mixture_density(grid, cfg.initial.mixture);
    MleOptions mo;
    mo.ode = ode_options(cfg.time);
    if (!cfg.initial.offset.empty()) mo.offset = to_vector(cfg.initial.offset);
    const auto times = output_times(cfg.time.t0, cfg.time.t1, cfg.time.outputs);
    const MleSeries series =
        stage("mle_error_series", [&] { return mle_error_series(fam, model, p0, times, cfg.oracle->dt, guess, mo); });
    report.events.push_back("oracle: mass drift rate " + format_number(series.fpe_mass_drift_rate));
    report.events.push_back("mle: max eps_norm " + format_number(series.max_eps));

    Outputs o;
    OracleRows rows;
    NaturalParams hint = series.theta0;
    for (const MleRow& r : series.rows) {
        hint = stage("natural_from_mean", [&] { return natural_from_mean(fam, {r.eta_proj}, hint, 1e-11); });
        o.t.push_back(r.t);
        o.theta.push_back(hint.theta);
        o.eta.push_back(r.eta_proj);
        o.residual.push_back(stage("residual", [&] { return residual(fam, model, {r.t, hint}).r2; }));
        rows.t.push_back(r.t);
        rows.eta_true.push_back(r.eta_true);
        rows.eta_proj.push_back(r.eta_proj);
    }
    write_trajectory(o, n, dir / "trajectory.csv");
    write_oracle(rows, n, dir / "oracle.csv");
    if (cfg.output.plot) write_plot(o, n, preset_name(cfg.preset), dir / "trajectory.svg");
}

bool is_gaussian_pair(const FamilyConfig& f) {
    return f.statistics.size() == 2 && max_coeff_diff(f.statistics[0], Polynomial::monomial(1)) == 0.0 &&
           max_coeff_diff(f.statistics[1], Polynomial::monomial(2)) == 0.0;
}

void run_synthesize(const ExperimentConfig& cfg, const std::filesystem::path& dir, RunReport& report) {
    const ExpFamily fam = make_family(cfg.family);
    const SdeModel model = make_model(cfg.model, preset_name(cfg.preset));
    const int n = fam.n();
    const NaturalParams theta0{to_vector(cfg.initial.theta)};

    auto times = output_times(cfg.time.t0, cfg.time.t1, cfg.time.outputs);
    for (double t : cfg.synth.times) times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    const Trajectory traj = stage("projected_flow", [&] {
        return integrate_at(projected_flow(fam, model, theta0, cfg.time.t0, cfg.time.t1), times,
                            ode_options(cfg.time));
    });
    if (traj.exit)
        throw StageFailure{"projected_flow", "parameter flow left the feasible set at t=" + format_number(traj.exit->t)};
    const Outputs o = rows_from_trajectory(fam, model, traj);
    write_trajectory(o, n, dir / "trajectory.csv");
    if (cfg.output.plot) write_plot(o, n, preset_name(cfg.preset), dir / "trajectory.svg");

    const Grid1D grid{cfg.synth.grid_lo, cfg.synth.grid_hi, cfg.synth.grid_m};
    const SynthesizedDrift drift = stage("modified_drift", [&] { return SynthesizedDrift(model, fam, traj, grid); });
    const FamilySampler sampler = stage("sampler", [&] { return FamilySampler(fam, theta0, grid); });
    SimulateOptions so;
    so.record_times = cfg.synth.times;
    const PathEnsemble ens = stage("simulate_em", [&] {
        return simulate_em(drift, [&sampler](std::mt19937_64& rng) { return sampler(rng); }, cfg.synth.paths,
                           cfg.synth.dt, cfg.time.t1, cfg.seed, so);
    });
    report.events.push_back("ensemble: " + std::to_string(ens.n_paths) + " paths, dt " + format_number(ens.dt) +
                            ", escaped " + std::to_string(ens.escaped));

    std::optional<Vector> eta0;
    if (is_gaussian_pair(cfg.family)) eta0 = stage("mean_params", [&] { return mean_params(fam, theta0).eta; });

    MomentReport all;
    all.all_pass = true;
    for (std::size_t j = 0; j < ens.record_times.size(); ++j) {
        const double tr = ens.record_times[j];
        const auto it = std::min_element(o.t.begin(), o.t.end(),
                                         [tr](double a, double b) { return std::abs(a - tr) < std::abs(b - tr); });
        const std::size_t k = static_cast<std::size_t>(std::distance(o.t.begin(), it));
        std::vector<double> bias;
        if (eta0) {
            try {
                bias = affine_em_bias(drift, (*eta0)[0], (*eta0)[1] - (*eta0)[0] * (*eta0)[0], cfg.synth.dt, tr);
            } catch (const Error& e) {
                report.events.push_back(std::string("ensemble: no EM bias calibration (") + e.what() + ")");
            }
        }
        MomentReport r = stage("validate_moments", [&] {
            return validate_moments(ens.recorded[j], fam, {o.theta[k]}, bias);
        });
        std::ostringstream suffix;
        suffix << "@t=" << format_number(o.t[k]);
        for (MomentCheck c : r.checks) {
            c.stat += suffix.str();
            all.checks.push_back(c);
        }
        all.all_pass = all.all_pass && r.all_pass;
        all.insufficient_paths = all.insufficient_paths || r.insufficient_paths;
    }
    {
        std::ofstream out(dir / "ensemble.csv", std::ios::binary);
        if (!out) fail(ErrorKind::IoError, "cannot write " + (dir / "ensemble.csv").string());
        all.write_csv(out);
        if (!out) fail(ErrorKind::IoError, "write failed for " + (dir / "ensemble.csv").string());
    }
    for (const MomentCheck& c : all.checks)
        report.events.push_back("ensemble: " + c.stat + " z=" + format_number(c.z) + " bias_budget=" +
                                format_number(c.bias_budget) + (c.pass ? " pass" : " FAIL"));
    if (all.insufficient_paths) report.events.push_back("ensemble: too few paths for a meaningful moment check");
    if (!all.all_pass) throw StageFailure{"validate_moments", "empirical moments disagree with the projected family"};
}

void write_meta(const ExperimentConfig& cfg, const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
    out << "fpe-project 0.1.0\n";
    out << "eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n';
#if defined(__clang__)
    out << "compiler clang " << __clang_version__ << '\n';
#elif defined(__GNUC__)
    out << "compiler gcc " << __VERSION__ << '\n';
#endif
    out << "preset " << preset_name(cfg.preset) << '\n';
    out << "seed " << cfg.seed << '\n';
    out << "status " << (report.exit_code == kExitOk ? "ok" : "failed");
    if (!report.operation.empty()) out << " in " << report.operation << ": " << report.message;
    out << '\n';
    out << "\n[config]\n" << cfg.source.dump(2) << '\n';
    out << "\n[events]\n";
    for (const auto& e : report.events) out << e << '\n';
}

}  // namespace

BackgroundDensity make_background(const std::string& spec) {
    if (spec == "lebesgue") return BackgroundDensity::lebesgue();
    if (spec == "gaussian") return BackgroundDensity::gaussian();
    const std::string prefix = "generalized:";
    if (spec.rfind(prefix, 0) == 0) return BackgroundDensity::generalized(std::stoi(spec.substr(prefix.size())));
    throw ConfigError("family.background", "unknown background \"" + spec + "\"");
}

ExpFamily make_family(const FamilyConfig& cfg) {
    std::vector<SmoothField> stats(cfg.statistics.begin(), cfg.statistics.end());
    return ExpFamily(std::move(stats), make_background(cfg.background));
}

SdeModel make_model(const ModelConfig& cfg, const std::string& name) {
    SdeModel model{SmoothField(cfg.drift), SmoothField(cfg.a), false, name};
    try {
        check_model(model, output_times(-5.0, 5.0, 11));
    } catch (const Error& e) {
        throw ConfigError("model", e.what());
    }
    return model;
}

std::vector<double> output_times(double t0, double t1, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i)
        out.push_back(i + 1 == count ? t1 : t0 + (t1 - t0) * static_cast<double>(i) / (count - 1));
    return out;
}

RunReport run_config(ExperimentConfig cfg, const RunOptions& opts) {
    if (opts.seed) cfg.seed = *opts.seed;
    RunReport report;
    report.out_dir = opts.out_dir ? *opts.out_dir : std::filesystem::path(cfg.output.dir);
    std::error_code ec;
    std::filesystem::create_directories(report.out_dir, ec);
    if (ec) {
        report.exit_code = kExitNumeric;
        report.operation = "output";
        report.message = "cannot create " + report.out_dir.string() + ": " + ec.message();
        return report;
    }
    try {
        switch (cfg.preset) {
            case Preset::HeatGalerkin: run_galerkin(cfg, report.out_dir, report); break;
            case Preset::EigenMle: run_eigen_mle(cfg, report.out_dir, report); break;
            case Preset::SynthesizeSde: run_synthesize(cfg, report.out_dir, report); break;
            default: run_projected(cfg, report.out_dir, report); break;
        }
    } catch (const ConfigError& e) {
        report.exit_code = kExitValidation;
        report.operation = "validate";
        report.message = e.what();
    } catch (const StageFailure& f) {
        report.exit_code = kExitNumeric;
        report.operation = f.operation;
        report.message = f.message;
    } catch (const std::exception& e) {
        report.exit_code = kExitNumeric;
        report.operation = "output";
        report.message = e.what();
    }
    try {
        write_meta(cfg, report, report.out_dir / "meta.txt");
    } catch (const std::exception& e) {
        if (report.exit_code == kExitOk) {
            report.exit_code = kExitNumeric;
            report.operation = "output";
            report.message = e.what();
        }
    }
    return report;
}

int run_experiment(const std::filesystem::path& config_path, const RunOptions& opts, std::ostream& out,
                   std::ostream& err) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    }
    const RunReport report = run_config(std::move(cfg), opts);
    if (report.exit_code == kExitValidation) {
        err << "validation error: " << report.message << '\n';
    } else if (report.exit_code != kExitOk) {
        err << "numeric failure in " << report.operation << ": " << report.message << '\n';
    } else {
        out << "wrote " << report.out_dir.string() << '\n';
    }
    for (const auto& e : report.events)
        if (e.rfind("guard:", 0) == 0) out << e << '\n';
    return report.exit_code;
}

}  // namespace fpeproj::cli
