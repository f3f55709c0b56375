#include "fpeproj/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fpeproj/errors.hpp"
#include "fpeproj/projection.hpp"

namespace fpeproj {

namespace {

constexpr double kSupportFloor = 1e-300;
constexpr double kSupportMass = 1e-12;

double trapezoid(const Grid1D& grid, const std::vector<double>& v) {
    CompensatedSum s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double w = (i == 0 || i + 1 == v.size()) ? 0.5 : 1.0;
        s.add(w * v[i]);
    }
    return s.value() * grid.h();
}

void require_same_grid(const GridDensity& p, const GridDensity& q) {
    if (p.grid.m != q.grid.m || p.grid.lo != q.grid.lo || p.grid.hi != q.grid.hi)
        fail(ErrorKind::InvalidArgument, "densities live on different grids");
}

// Thomas algorithm; sub/diag/sup are overwritten.
void solve_tridiagonal(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                       std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

void Grid1D::validate() const {
    if (!(hi > lo)) fail(ErrorKind::InvalidArgument, "grid needs hi > lo");
    if (m < 3) fail(ErrorKind::InvalidArgument, "grid needs at least 3 points");
}

std::vector<double> Grid1D::points() const {
    std::vector<double> xs(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) xs[static_cast<std::size_t>(i)] = x(i);
    return xs;
}

double GridDensity::mass() const { return trapezoid(grid, p); }

double GridDensity::expect(const std::function<double(double)>& f) const {
    std::vector<double> v(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) v[i] = f(grid.x(static_cast<int>(i))) * p[i];
    return trapezoid(grid, v);
}

double GridDensity::normalize() {
    std::vector<double> neg(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0) {
            neg[i] = -p[i];
            p[i] = 0.0;
        }
    }
    const double clipped = trapezoid(grid, neg);
    const double total = mass();
    if (!(total > 0.0)) fail(ErrorKind::InvalidArgument, "density has no mass");
    for (double& v : p) v /= total;
    return clipped;
}

GridDensity GridDensity::from_function(const Grid1D& grid, const std::function<double(double)>& density) {
    grid.validate();
    GridDensity g{grid, std::vector<double>(static_cast<std::size_t>(grid.m))};
    for (int i = 0; i < grid.m; ++i) g.p[static_cast<std::size_t>(i)] = density(grid.x(i));
    g.normalize();
    return g;
}

double normal_pdf(double x, double mean, double variance) {
    const double z = x - mean;
    return std::exp(-0.5 * z * z / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

GridDensity GridDensity::gaussian(const Grid1D& grid, double mean, double variance) {
    return from_function(grid, [=](double x) { return normal_pdf(x, mean, variance); });
}

GridDensity GridDensity::from_family(const Grid1D& grid, const ExpFamily& fam, const NaturalParams& theta) {
    grid.validate();
    const std::vector<double> xs = grid.points();
    const std::vector<double> logp = log_density(fam, theta, xs);
    GridDensity g{grid, std::vector<double>(xs.size())};
    for (std::size_t i = 0; i < xs.size(); ++i) g.p[i] = std::exp(logp[i]);
    return g;
}

void GridDensity::write_csv(std::ostream& os) const {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "x,p\n" << std::setprecision(17);
    for (int i = 0; i < grid.m; ++i) os << grid.x(i) << ',' << p[static_cast<std::size_t>(i)] << '\n';
    os.flags(flags);
    os.precision(prec);
}

GridDensity GridDensity::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "x,p") fail(ErrorKind::IoError, "expected header 'x,p'");
    std::vector<double> xs;
    std::vector<double> ps;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) fail(ErrorKind::IoError, "malformed density row: " + line);
        xs.push_back(std::stod(line.substr(0, comma)));
        ps.push_back(std::stod(line.substr(comma + 1)));
    }
    if (xs.size() < 3) fail(ErrorKind::IoError, "density CSV needs at least 3 rows");
    GridDensity g{{xs.front(), xs.back(), static_cast<int>(xs.size())}, std::move(ps)};
    const double h = g.grid.h();
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::abs(xs[i] - g.grid.x(static_cast<int>(i))) > 1e-9 * (1.0 + std::abs(xs[i])) + 1e-6 * h)
            fail(ErrorKind::IoError, "density CSV grid is not uniform");
    return g;
}

FpeResult fpe_solve(const SdeModel& model, const GridDensity& p0, double t0, double t1, double dt,
                    const FpeOptions& opts) {
    p0.grid.validate();
    if (model.time_dependent) fail(ErrorKind::InvalidArgument, "time-dependent models are not supported");
    if (!(dt > 0.0)) fail(ErrorKind::InvalidArgument, "dt must be positive");
    if (!(t1 >= t0)) fail(ErrorKind::InvalidArgument, "t1 must not precede t0");
    if (p0.p.size() != static_cast<std::size_t>(p0.grid.m)) fail(ErrorKind::InvalidArgument, "density size mismatch");
    if (p0.p.front() > 1e-12 || p0.p.back() > 1e-12)
        fail(ErrorKind::InvalidArgument, "initial density is not negligible at the grid boundary");

    const Grid1D& grid = p0.grid;
    const auto m = static_cast<std::size_t>(grid.m);
    const double h = grid.h();
    const long steps = t1 > t0 ? static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9)) : 0;
    const double k = steps > 0 ? (t1 - t0) / static_cast<double>(steps) : 0.0;

    // Row i of the generator: lower * p[i-1] + mid * p[i] + upper * p[i+1].
    std::vector<double> lower(m, 0.0), mid(m, 0.0), upper(m, 0.0);
    for (std::size_t i = 1; i + 1 < m; ++i) {
        const double xm = grid.x(static_cast<int>(i) - 1);
        const double x0 = grid.x(static_cast<int>(i));
        const double xp = grid.x(static_cast<int>(i) + 1);
        lower[i] = model.f.eval(xm) / (2.0 * h) + model.a.eval(xm) / (2.0 * h * h);
        mid[i] = -model.a.eval(x0) / (h * h);
        upper[i] = -model.f.eval(xp) / (2.0 * h) + model.a.eval(xp) / (2.0 * h * h);
    }

    std::vector<long> snap_steps;
    for (double t : opts.output_times) {
        if (t < t0 || t > t1) fail(ErrorKind::InvalidArgument, "snapshot time outside the solve span");
        snap_steps.push_back(k > 0.0 ? std::lround((t - t0) / k) : 0);
    }
    snap_steps.push_back(steps);
    std::sort(snap_steps.begin(), snap_steps.end());
    snap_steps.erase(std::unique(snap_steps.begin(), snap_steps.end()), snap_steps.end());

    FpeResult result;
    GridDensity cur = p0;
    cur.normalize();
    result.snapshots.push_back({t0, cur});
    std::size_t next_snap = 0;
    while (next_snap < snap_steps.size() && snap_steps[next_snap] == 0) ++next_snap;

    std::vector<double> sub(m), diag(m), sup(m), rhs(m);
    double drift = 0.0;
    for (long s = 1; s <= steps; ++s) {
        const double before = cur.mass();
        for (std::size_t i = 0; i < m; ++i) {
            if (i == 0 || i + 1 == m) {
                sub[i] = 0.0;
                sup[i] = 0.0;
                diag[i] = 1.0;
                rhs[i] = 0.0;
                continue;
            }
            sub[i] = -0.5 * k * lower[i];
            diag[i] = 1.0 - 0.5 * k * mid[i];
            sup[i] = -0.5 * k * upper[i];
            rhs[i] = cur.p[i] + 0.5 * k * (lower[i] * cur.p[i - 1] + mid[i] * cur.p[i] + upper[i] * cur.p[i + 1]);
        }
        solve_tridiagonal(sub, diag, sup, rhs);
        cur.p.swap(rhs);

        const double most_negative = *std::min_element(cur.p.begin(), cur.p.end());
        if (most_negative < -1e-8)
            fail(ErrorKind::Instability, "negative density " + std::to_string(most_negative) + " at step " +
                                             std::to_string(s));
        std::vector<double> clipped_part(m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            if (cur.p[i] < 0.0) clipped_part[i] = -cur.p[i];
        result.clipped_mass = std::max(result.clipped_mass, trapezoid(grid, clipped_part));
        drift += std::abs(cur.mass() - before);
        cur.normalize();

        if (next_snap < snap_steps.size() && snap_steps[next_snap] == s) {
            result.snapshots.push_back({t0 + static_cast<double>(s) * k, cur});
            ++next_snap;
        }
    }
    result.mass_drift_rate = t1 > t0 ? drift / (t1 - t0) : 0.0;
    if (result.mass_drift_rate > opts.mass_tolerance)
        fail(ErrorKind::MassLoss, "mass drift " + std::to_string(result.mass_drift_rate) +
                                      " per unit time; widen the grid");
    if (result.mass_drift_rate > 1e-6) {
        std::ostringstream os;
        os << "mass drift " << result.mass_drift_rate << " per unit time renormalized";
        result.log.push_back(os.str());
    }
    if (result.clipped_mass > 1e-10) {
        std::ostringstream os;
        os << "clipped negative mass " << result.clipped_mass;
        result.log.push_back(os.str());
    }
    return result;
}

double kl_divergence(const GridDensity& p, const GridDensity& q) {
    require_same_grid(p, q);
    std::vector<double> v(p.p.size(), 0.0);
    for (std::size_t i = 0; i < p.p.size(); ++i) {
        if (p.p[i] <= 0.0) continue;
        if (q.p[i] <= kSupportFloor) {
            if (p.p[i] > kSupportMass)
                fail(ErrorKind::SupportMismatch, "q vanishes where p has mass at x = " +
                                                     std::to_string(p.grid.x(static_cast<int>(i))));
            continue;
        }
        v[i] = p.p[i] * std::log(p.p[i] / q.p[i]);
    }
    return trapezoid(p.grid, v);
}

double kl_divergence(const GridDensity& p, const ExpFamily& fam, const NaturalParams& theta) {
    const std::vector<double> xs = p.grid.points();
    const std::vector<double> logq = log_density(fam, theta, xs);
    std::vector<double> v(xs.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (p.p[i] > 0.0) v[i] = p.p[i] * (std::log(p.p[i]) - logq[i]);
    return trapezoid(p.grid, v);
}

ExpectationParams grid_moments(const ExpFamily& fam, const GridDensity& p) {
    Vector eta(fam.n());
    for (int i = 0; i < fam.n(); ++i) {
        const SmoothField& c = fam.statistic(i);
        eta[i] = p.expect([&c](double x) { return c.eval(x); });
    }
    return {eta};
}

std::pair<NaturalParams, ExpectationParams> moment_project(const ExpFamily& fam, const GridDensity& p,
                                                           const NaturalParams& theta0, double tol) {
    ExpectationParams eta = grid_moments(fam, p);
    NaturalParams theta = natural_from_mean(fam, eta, theta0, tol);
    return {std::move(theta), std::move(eta)};
}

Vector eigen_spectrum(const ExpFamily& fam, const SdeModel& model) {
    if (!fam.polynomial() || !model.polynomial())
        fail(ErrorKind::NotEigen, "eigen check needs polynomial statistics and coefficients");
    Vector lambda(fam.n());
    for (int i = 0; i < fam.n(); ++i) {
        const Polynomial& c = *fam.statistic(i).polynomial();
        const Polynomial lc = *backward_apply(model, c).polynomial();
        if (c.is_zero()) fail(ErrorKind::NotEigen, "zero statistic");
        const double lead = c.coeff(c.degree());
        const double l = -lc.coeff(c.degree()) / lead;
        if (max_coeff_diff(lc, -l * c) > 1e-12)
            fail(ErrorKind::NotEigen, "statistic " + std::to_string(i + 1) + " is not an eigenfunction of L");
        if (!(l > 0.0)) fail(ErrorKind::NotEigen, "eigenvalue of statistic " + std::to_string(i + 1) + " is not negative");
        lambda[i] = l;
    }
    return lambda;
}

MleSeries mle_error_series(const ExpFamily& fam, const SdeModel& model, const GridDensity& p0,
                           const std::vector<double>& t_grid, double dt, const NaturalParams& theta_guess,
                           const MleOptions& opts) {
    if (t_grid.empty()) fail(ErrorKind::EmptyInput, "empty time grid");
    MleSeries series;
    series.lambda = eigen_spectrum(fam, model);

    const double t0 = t_grid.front();
    const double t1 = t_grid.back();
    FpeOptions fpe_opts;
    fpe_opts.output_times = t_grid;
    const FpeResult truth = fpe_solve(model, p0, t0, t1, dt, fpe_opts);
    series.fpe_mass_drift_rate = truth.mass_drift_rate;

    auto [theta0, eta0] = moment_project(fam, truth.snapshots.front().density, theta_guess);
    series.theta0 = theta0;

    Vector start = eta0.eta;
    if (opts.offset.size() != 0) {
        fam.check_dimension(opts.offset, "offset");
        start += opts.offset;
    }

    auto hint = std::make_shared<NaturalParams>(natural_from_mean(fam, {start}, theta0, 1e-11));
    IvpProblem ivp;
    ivp.rhs = [&fam, &model, hint](double t, const OdeVector& eta) {
        return assumed_density_rhs(fam, model, {eta}, t, *hint);
    };
    ivp.y0 = start;
    ivp.t0 = t0;
    ivp.t1 = t1 > t0 ? t1 : t0 + 1.0;
    const Trajectory proj = t1 > t0 ? integrate_at(ivp, t_grid, opts.ode) : Trajectory{{t0}, {start}, {}};
    if (proj.exit)
        fail(ErrorKind::NoConvergence, "assumed-density flow left the family at t = " + std::to_string(proj.exit->t) +
                                           ": " + proj.exit->reason);

    const Vector eps0 = eta0.eta - start;
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        // Snapshots and trajectory both carry t_grid (deduplicated) in order.
        const double t = t_grid[j];
        auto snap = std::min_element(truth.snapshots.begin(), truth.snapshots.end(),
                                     [t](const FpeSnapshot& a, const FpeSnapshot& b) {
                                         return std::abs(a.t - t) < std::abs(b.t - t);
                                     });
        auto it = std::lower_bound(proj.times.begin(), proj.times.end(), t - 1e-12);
        const std::size_t idx = static_cast<std::size_t>(std::distance(proj.times.begin(), it));
        MleRow row;
        row.t = t;
        row.eta_true = grid_moments(fam, snap->density).eta;
        row.eta_proj = proj.states.at(idx);
        row.eps_norm = (row.eta_true - row.eta_proj).lpNorm<Eigen::Infinity>();
        Vector decayed(fam.n());
        for (int i = 0; i < fam.n(); ++i) decayed[i] = std::exp(-series.lambda[i] * (t - t0)) * eps0[i];
        row.predicted_norm = decayed.lpNorm<Eigen::Infinity>();
        series.max_eps = std::max(series.max_eps, row.eps_norm);
        series.rows.push_back(std::move(row));
    }
    return series;
}

}  // namespace fpeproj
