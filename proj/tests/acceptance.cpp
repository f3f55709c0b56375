// Acceptance criteria runner: one PASS/FAIL line per criterion, nonzero exit
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fpeproj/cli/config.hpp"
#include "fpeproj/cli/csv.hpp"
#include "fpeproj/cli/runner.hpp"
#include "fpeproj/errors.hpp"
#include "fpeproj/oracle.hpp"
#include "fpeproj/projection.hpp"
#include "fpeproj/sde.hpp"
#include "fpeproj/synth.hpp"
#include "support.hpp"

using namespace fpeproj;
using namespace fpeproj::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

fs::path out_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("fpeproj_acceptance_" + name);
    fs::remove_all(d);
    return d;
}

RunReport run_preset(const std::string& json, const fs::path& dir) {
    return run_config(parse_config(nlohmann::json::parse(json)), {dir, {}});
}

NaturalParams th2(double a, double b) {
    Vector t(2);
    t << a, b;
    return {t};
}

ExpFamily gaussian_family() { return monomial_family(2, BackgroundDensity::lebesgue()); }

GalerkinBasis heat_basis(SmoothField a) {
    GalerkinBasis b;
    b.W = {SmoothField(Polynomial{0.0, 1.0}), SmoothField(Polynomial{-1.0, 0.0, 1.0})};
    b.coeff = std::move(a);
    return b;
}

GridDensity bimodal(const Grid1D& grid) {
    GridDensity p = GridDensity::from_function(
        grid, [](double x) { return 0.5 * normal_pdf(x, -1.0, 0.09) + 0.5 * normal_pdf(x, 1.0, 0.09); });
    p.normalize();
    return p;
}

/// Random parameters with mean in [-1.5, 1.5] and variance in [0.3, 2].
NaturalParams random_gaussian(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mu(-1.5, 1.5), var(0.3, 2.0);
    const double m = mu(rng), v = var(rng);
    return th2(m / v, -0.5 / v);
}

NaturalParams random_hermite4(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector t(4);
    t << 0.5 * u(rng), -0.4 + 0.2 * u(rng), 0.05 * u(rng), -0.06 + 0.04 * u(rng);
    return {t};
}

// 1. Gaussian exactness of the projected OU flow.
Outcome gaussian_exactness() {
    Timer timer;
    const fs::path dir = out_dir("c1");
    const RunReport r = run_preset(R"({"preset":"ou-gaussian"})", dir);
    const double elapsed = timer.seconds();
    if (r.exit_code != 0) return {false, "run failed: " + r.message};
    const CsvTable t = read_csv(dir / "trajectory.csv");
    double theta_err = 0.0, max_res = 0.0, t_end = 0.0;
    for (const auto& row : t.rows) {
        const double tt = row[0];
        const double mu = 0.5 * std::exp(-tt);
        const double P = 1.0 + (0.5 - 1.0) * std::exp(-2.0 * tt);
        theta_err = std::max({theta_err, std::abs(row[1] - mu / P), std::abs(row[2] + 0.5 / P)});
        max_res = std::max(max_res, row[5]);
        t_end = tt;
    }
    const bool pass = theta_err <= 1e-6 && max_res <= 1e-8 && elapsed < 5.0 && t_end == 5.0;
    return {pass, "max|theta-exact|=" + num(theta_err) + " max residual=" + num(max_res) + " runtime=" +
                      num(elapsed) + "s"};
}

// 2. The heat example: symbolic right-hand side and the variance law.
Outcome heat_example() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u1(-1.0, 1.0), u2(-1.0, 0.45);
    const GalerkinBasis b = heat_basis(SmoothField::constant(1.0));
    double rhs_err = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double t1 = u1(rng), t2 = u2(rng);
        const Vector v = galerkin_heat_rhs(b, th2(t1, t2));
        rhs_err = std::max({rhs_err, std::abs(v[0] - 2 * t1 * (2 * t2 - 1)), std::abs(v[1] - (2 * t2 - 1) * (2 * t2 - 1))});
    }
    const fs::path dir = out_dir("c2");
    const RunReport r = run_preset(R"({"preset":"heat-galerkin"})", dir);
    if (r.exit_code != 0) return {false, "run failed: " + r.message};
    double flow_err = 0.0, t_end = 0.0;
    for (const auto& row : read_csv(dir / "trajectory.csv").rows) {
        const double s2 = 1.0 + 2.0 * row[0];
        flow_err = std::max({flow_err, std::abs(row[1]), std::abs(row[2] - (0.5 - 0.5 / s2))});
        t_end = row[0];
    }
    return {rhs_err <= 1e-10 && flow_err <= 1e-6 && t_end == 5.0,
            "max rhs error=" + num(rhs_err) + " max flow error=" + num(flow_err)};
}

// 3. Galerkin equals the Fisher-Rao projection of the divergence-form SDE.
Outcome galerkin_equivalence() {
    double worst = 0.0;
    const std::vector<SmoothField> coeffs{SmoothField::constant(1.0), SmoothField(Polynomial{1.0, 0.0, 0.1})};
    for (const SmoothField& a : coeffs) {
        const GalerkinBasis b = heat_basis(a);
        const ExpFamily fam = b.family();
        const SdeModel sde = divergence_form(a);
        for (double t1 : {-0.6, -0.3, 0.0, 0.3, 0.6})
            for (double t2 : {-0.6, -0.3, 0.0, 0.2, 0.35}) {
                const Vector g = galerkin_heat_rhs(b, th2(t1, t2));
                const Vector p = projected_rhs(fam, sde, {0.0, th2(t1, t2)});
                worst = std::max(worst, (g - p).lpNorm<Eigen::Infinity>());
            }
    }
    return {worst <= 1e-8, "max |galerkin - projected|=" + num(worst) + " over 2 coefficients x 25 points"};
}

// 4. Assumed-density closure equals g times the projected vector field.
Outcome equivalence_theorem() {
    struct Case {
        std::string name;
        ExpFamily fam;
        SdeModel model;
        NaturalParams hint;
        std::function<NaturalParams(std::mt19937_64&)> sample;
    };
    const GalerkinBasis hb = heat_basis(SmoothField::constant(1.0));
    std::vector<Case> cases;
    cases.push_back({"ou-gaussian", gaussian_family(), ornstein_uhlenbeck(1.0, 2.0), th2(0.0, -0.5), random_gaussian});
    cases.push_back({"heat-galerkin", hb.family(), divergence_form(hb.coeff), th2(0.0, 0.0),
                     [](std::mt19937_64& rng) {
                         std::uniform_real_distribution<double> u1(-0.8, 0.8), u2(-0.8, 0.4);
                         return th2(u1(rng), u2(rng));
                     }});
    cases.push_back({"quartic-residual", gaussian_family(), double_well(2.0), th2(0.0, -0.5), random_gaussian});
    Vector h4(4);
    h4 << 0.0, -0.5, 0.0, -0.01;
    cases.push_back({"eigen-mle", hermite_family(4, BackgroundDensity::lebesgue()), ornstein_uhlenbeck(1.0, 2.0), {h4},
                     random_hermite4});
    cases.push_back({"synthesize-sde", gaussian_family(), double_well(2.0), th2(1.0, -1.0), random_gaussian});

    std::mt19937_64 rng(99);
    double worst = 0.0;
    int points = 0;
    for (const Case& c : cases) {
        for (int i = 0; i < 100; ++i) {
            const NaturalParams theta = c.sample(rng);
            const ExpectationParams eta = mean_params(c.fam, theta);
            NaturalParams hint = c.hint;
            Vector ad;
            try {
                ad = assumed_density_rhs(c.fam, c.model, eta, 0.0, hint, 1e-12);
            } catch (const Error& e) {
                std::ostringstream os;
                os << c.name << " at theta=(" << theta.theta.transpose() << "): " << e.what();
                throw std::runtime_error(os.str());
            }
            const Vector gp = fisher_matrix(c.fam, theta).g * projected_rhs(c.fam, c.model, {0.0, theta});
            worst = std::max(worst, (ad - gp).lpNorm<Eigen::Infinity>());
            ++points;
        }
    }
    return {worst <= 1e-9, "max |assumed - g*projected|=" + num(worst) + " over " + std::to_string(points) + " points"};
}

// 5. Eigenfunction statistics give the exact maximum-likelihood flow.
Outcome eigen_mle() {
    Timer timer;
    const ExpFamily fam = hermite_family(4, BackgroundDensity::lebesgue());
    const SdeModel ou = ornstein_uhlenbeck(1.0, 2.0);
    const Vector lambda = eigen_spectrum(fam, ou);
    double lambda_err = 0.0;
    for (int i = 0; i < 4; ++i) lambda_err = std::max(lambda_err, std::abs(lambda[i] - (i + 1.0)));

    const fs::path dir = out_dir("c5");
    const RunReport r = run_preset(R"({"preset":"eigen-mle"})", dir);
    if (r.exit_code != 0) return {false, "run failed: " + r.message};
    double max_eps = 0.0, t_end = 0.0;
    for (const auto& row : read_csv(dir / "oracle.csv").rows) {
        max_eps = std::max(max_eps, row.back());
        t_end = row[0];
    }

    const Grid1D grid{-10.0, 10.0, 2001};
    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(0.1 * k);
    MleOptions mo;
    mo.offset = Vector(4);
    mo.offset << 0.05, -0.05, 0.05, 0.05;
    Vector guess(4);
    guess << 0.0, -0.5, 0.0, -0.01;
    const MleSeries off = mle_error_series(fam, ou, bimodal(grid), times, 1e-4, {guess}, mo);
    double tracking = 0.0;  // worst excess over the allowed band
    for (const MleRow& row : off.rows)
        tracking = std::max(tracking, std::abs(row.eps_norm - row.predicted_norm) - (0.1 * row.predicted_norm + 5e-3));
    const double elapsed = timer.seconds();
    const bool pass = lambda_err == 0.0 && max_eps <= 5e-3 && t_end == 2.0 && tracking <= 0.0 && elapsed < 60.0;
    return {pass, "Lambda error=" + num(lambda_err) + " max eps=" + num(max_eps) +
                      " offset band excess=" + num(tracking) + " runtime=" + num(elapsed) + "s"};
}

// 6. Moment projection is the KL point projection; Pythagorean identity.
Outcome kl_projection() {
    const Grid1D grid{-10.0, 10.0, 2001};
    const GridDensity p = bimodal(grid);
    std::mt19937_64 rng(6);
    double pyth = 0.0;
    double min_gap = 1e300;
    struct Case {
        ExpFamily fam;
        NaturalParams guess;
        std::function<NaturalParams(std::mt19937_64&)> sample;
    };
    Vector h4(4);
    h4 << 0.0, -0.5, 0.0, -0.01;
    const std::vector<Case> cases{{gaussian_family(), th2(0.0, -0.5), random_gaussian},
                                  {hermite_family(4, BackgroundDensity::lebesgue()), {h4}, random_hermite4}};
    for (const Case& c : cases) {
        const auto [hat, eta] = moment_project(c.fam, p, c.guess);
        const double kl_hat = kl_divergence(p, c.fam, hat);
        const GridDensity phat = GridDensity::from_family(grid, c.fam, hat);
        for (int i = 0; i < 100; ++i) {
            const NaturalParams bar = c.sample(rng);
            const double kl_bar = kl_divergence(p, c.fam, bar);
            min_gap = std::min(min_gap, kl_bar - kl_hat);
            pyth = std::max(pyth, std::abs(kl_bar - kl_hat - kl_divergence(phat, c.fam, bar)));
        }
    }
    return {min_gap >= 0.0 && pyth <= 1e-6,
            "min KL(p|random) - KL(p|projection)=" + num(min_gap) + " max Pythagorean defect=" + num(pyth)};
}

// 7. The modified SDE reproduces the projected moments.
Outcome modified_sde() {
    Timer timer;
    const fs::path dir = out_dir("c7");
    const RunReport r = run_preset(R"({"preset":"synthesize-sde"})", dir);
    const double elapsed = timer.seconds();
    if (r.exit_code != 0) return {false, "run failed in " + r.operation + ": " + r.message};
    std::string worst;
    int checks = 0;
    for (const auto& e : r.events)
        if (e.find("@t=") != std::string::npos) {
            ++checks;
            if (e.find(" pass") == std::string::npos) worst = e;
        }
    const bool pass = worst.empty() && checks == 4 && elapsed < 30.0;
    return {pass, std::to_string(checks) + " moment checks within 3 stderr + EM bias, runtime=" + num(elapsed) + "s" +
                      (worst.empty() ? "" : " failing: " + worst)};
}

// 8. Oracle integrity: mass conservation and the analytic OU flow.
Outcome oracle_integrity() {
    const Grid1D grid{-10.0, 10.0, 2001};
    const GridDensity p0 = GridDensity::gaussian(grid, 1.0, 0.25);
    FpeOptions o;
    o.output_times = {0.25, 0.5};
    const FpeResult r = fpe_solve(ornstein_uhlenbeck(1.0, 2.0), p0, 0.0, 1.0, 1e-4, o);
    double err = 0.0;
    for (const FpeSnapshot& s : r.snapshots) {
        const double mean = std::exp(-s.t);
        const double var = 1.0 + (0.25 - 1.0) * std::exp(-2.0 * s.t);
        for (int i = 0; i < grid.m; ++i)
            err = std::max(err, std::abs(s.density.p[static_cast<std::size_t>(i)] - normal_pdf(grid.x(i), mean, var)));
    }
    const FpeResult dw = fpe_solve(double_well(2.0), bimodal(grid), 0.0, 1.0, 1e-4);
    const double drift = std::max(r.mass_drift_rate, dw.mass_drift_rate);
    return {err <= 5e-4 && drift <= 1e-6 && r.snapshots.size() == 4,
            "max L-inf density error=" + num(err) + " mass drift per unit time=" + num(drift)};
}

// 9. Fisher matrix vs Hessian of psi, centering of alpha, residual sign.
Outcome geometry_checks() {
    std::mt19937_64 rng(909);
    double hess_rel = 0.0, centering = 0.0, min_r2 = 1e300;
    struct Case {
        ExpFamily fam;
        std::function<NaturalParams(std::mt19937_64&)> sample;
    };
    const std::vector<Case> fams{
        {gaussian_family(), random_gaussian},
        {hermite_family(4, BackgroundDensity::lebesgue()), random_hermite4},
        {monomial_family(3, BackgroundDensity::generalized(4)),
         [](std::mt19937_64& g) {
             std::uniform_real_distribution<double> u(-0.5, 0.5);
             Vector t(3);
             t << u(g), u(g), u(g);
             return NaturalParams{t};
         }},
    };
    const std::vector<SdeModel> models{ornstein_uhlenbeck(1.0, 2.0), double_well(2.0), heat(2.0),
                                       divergence_form(SmoothField(Polynomial{1.0, 0.0, 0.1}))};
    for (const Case& c : fams) {
        for (int trial = 0; trial < 10; ++trial) {
            const NaturalParams theta = c.sample(rng);
            const Matrix g = fisher_matrix(c.fam, theta).g;
            const int n = c.fam.n();
            std::vector<double> x(theta.theta.data(), theta.theta.data() + n), scale(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) scale[static_cast<std::size_t>(i)] = 2e-3 / std::sqrt(g(i, i));
            const auto h = fpeproj::testing::fd_hessian(
                [&](const std::vector<double>& s) {
                    return log_partition(c.fam, {Eigen::Map<const Vector>(s.data(), n)});
                },
                x, scale);
            Matrix fd(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) fd(i, j) = h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            hess_rel = std::max(hess_rel, (fd - g).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff());
            for (const SdeModel& m : models) {
                centering = std::max(centering, std::abs(alpha_mean(m, c.fam, theta)));
                min_r2 = std::min(min_r2, residual(c.fam, m, {0.0, theta}).r2);
            }
        }
    }
    return {hess_rel <= 1e-4 && centering <= 1e-8 && min_r2 >= -1e-8,
            "Hessian rel error=" + num(hess_rel) + " max|E[alpha]|=" + num(centering) + " min r2=" + num(min_r2)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gaussian exactness of the projected OU flow", gaussian_exactness},
        {"heat example via Galerkin projection", heat_example},
        {"Galerkin equals Fisher-Rao projection", galerkin_equivalence},
        {"assumed density equals projected vector field", equivalence_theorem},
        {"eigenfunction statistics give the MLE flow", eigen_mle},
        {"KL point projection and Pythagorean identity", kl_projection},
        {"modified SDE reproduces projected moments", modified_sde},
        {"grid oracle integrity", oracle_integrity},
        {"Fisher geometry checks", geometry_checks},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("[%s] criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
