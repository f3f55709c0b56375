#include "fpeproj/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <thread>

#include "fpeproj/errors.hpp"
#include "fpeproj/projection.hpp"

namespace fpeproj {

namespace {

constexpr double kMaxExponentRange = 700.0;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::vector<double> modified_drift(const SdeModel& base, const ExpFamily& fam, const NaturalParams& theta,
                                   const Grid1D& grid) {
    grid.validate();
    if (base.time_dependent) fail(ErrorKind::InvalidArgument, "time-dependent models are not supported");
    const int n = fam.n();
    const Vector eta = mean_params(fam, theta).eta;
    const Vector velocity = projected_rhs(fam, base, {0.0, theta});
    const SmoothField ell = fam.exponent(theta);

    const auto m = static_cast<std::size_t>(grid.m);
    std::vector<double> ell_grid(m);
    for (std::size_t i = 0; i < m; ++i) ell_grid[i] = ell.eval(grid.x(static_cast<int>(i)));
    const auto peak = static_cast<std::size_t>(std::distance(ell_grid.begin(), std::max_element(ell_grid.begin(), ell_grid.end())));
    const double lmax = ell_grid[peak];
    if (lmax - ell_grid.front() < -std::log(1e-14) || lmax - ell_grid.back() < -std::log(1e-14))
        fail(ErrorKind::InvalidArgument, "grid does not reach the density tails (relative level 1e-14)");
    const double lmin = *std::min_element(ell_grid.begin(), ell_grid.end());
    if (!std::isfinite(lmin) || lmax - lmin > kMaxExponentRange)
        fail(ErrorKind::Overflow, "log-density range on the drift grid exceeds 700");

    std::vector<double> gl_x;
    std::vector<double> gl_w;
    gauss_legendre(4, gl_x, gl_w);
    const double h = grid.h();

    // Cell integral of (c(y) - eta) exp(ell(y) - ref) over [x_j, x_j + h].
    auto cell = [&](std::size_t j, double ref, Vector& acc) {
        const double a = grid.x(static_cast<int>(j));
        for (std::size_t q = 0; q < gl_x.size(); ++q) {
            const double y = a + 0.5 * h * (gl_x[q] + 1.0);
            const double w = 0.5 * h * gl_w[q] * std::exp(ell.eval(y) - ref);
            for (int i = 0; i < n; ++i) acc[i] += w * (fam.statistic(i).eval(y) - eta[i]);
        }
    };

    std::vector<Vector> integral(m, Vector::Zero(n));
    // Left pass: S_j = int_lo^{x_j} (...) exp(ell(y) - ell(x_j)) dy, up to the peak.
    Vector running = Vector::Zero(n);
    for (std::size_t j = 1; j <= peak; ++j) {
        running *= std::exp(ell_grid[j - 1] - ell_grid[j]);
        cell(j - 1, ell_grid[j], running);
        integral[j] = running;
    }
    // Right pass: -int_{x_j}^{hi} (...) exp(ell(y) - ell(x_j)) dy, beyond the peak.
    running.setZero();
    for (std::size_t j = m - 1; j-- > peak;) {
        running *= std::exp(ell_grid[j + 1] - ell_grid[j]);
        cell(j, ell_grid[j], running);
        integral[j] = -running;
    }

    std::vector<double> u(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double x = grid.x(static_cast<int>(j));
        const double a = base.a.eval(x);
        u[j] = 0.5 * base.a.d1(x) + 0.5 * a * ell.d1(x) - velocity.dot(integral[j]);
        if (!std::isfinite(u[j])) fail(ErrorKind::Overflow, "non-finite synthesized drift at x = " + std::to_string(x));
    }
    return u;
}

SynthesizedDrift::SynthesizedDrift(SdeModel base, ExpFamily fam, Trajectory theta_path, Grid1D grid)
    : base_(std::move(base)), fam_(std::move(fam)), path_(std::move(theta_path)), grid_(grid) {
    if (path_.times.empty()) fail(ErrorKind::EmptyInput, "empty parameter trajectory");
    table_.reserve(path_.times.size());
    for (std::size_t j = 0; j < path_.times.size(); ++j)
        table_.push_back(modified_drift(base_, fam_, {path_.states[j]}, grid_));
}

double SynthesizedDrift::operator()(double t, double x) const {
    const double xc = std::clamp(x, grid_.lo, grid_.hi);
    const double s = (xc - grid_.lo) / grid_.h();
    const auto i = std::min(static_cast<std::size_t>(s), static_cast<std::size_t>(grid_.m - 2));
    const double fx = s - static_cast<double>(i);

    auto at = [&](std::size_t k) { return (1.0 - fx) * table_[k][i] + fx * table_[k][i + 1]; };
    const auto& ts = path_.times;
    if (t <= ts.front() || ts.size() == 1) return at(0);
    if (t >= ts.back()) return at(ts.size() - 1);
    const auto hi = static_cast<std::size_t>(std::distance(ts.begin(), std::upper_bound(ts.begin(), ts.end(), t)));
    const std::size_t lo = hi - 1;
    const double ft = (t - ts[lo]) / (ts[hi] - ts[lo]);
    return (1.0 - ft) * at(lo) + ft * at(hi);
}

FamilySampler::FamilySampler(const ExpFamily& fam, const NaturalParams& theta, const Grid1D& grid) {
    const GridDensity d = GridDensity::from_family(grid, fam, theta);
    xs_ = grid.points();
    cdf_.assign(xs_.size(), 0.0);
    for (std::size_t i = 1; i < xs_.size(); ++i) cdf_[i] = cdf_[i - 1] + 0.5 * grid.h() * (d.p[i - 1] + d.p[i]);
    const double total = cdf_.back();
    for (double& c : cdf_) c /= total;
}

double FamilySampler::operator()(std::mt19937_64& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.begin()) return xs_.front();
    if (it == cdf_.end()) return xs_.back();
    const auto i = static_cast<std::size_t>(std::distance(cdf_.begin(), it));
    const double span = cdf_[i] - cdf_[i - 1];
    const double f = span > 0.0 ? (u - cdf_[i - 1]) / span : 0.5;
    return xs_[i - 1] + f * (xs_[i] - xs_[i - 1]);
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(path + 0x632be59bd9b4e019ULL)));
}

unsigned default_worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FPE_PROJECT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) hw = std::min(hw, static_cast<unsigned>(v));
    }
    return hw;
}

PathEnsemble simulate_em(const SynthesizedDrift& drift, const InitialSampler& x0_sampler, std::size_t n_paths,
                         double dt, double t1, std::uint64_t seed, const SimulateOptions& opts) {
    if (n_paths == 0) fail(ErrorKind::EmptyInput, "no paths requested");
    if (!(dt > 0.0)) fail(ErrorKind::InvalidArgument, "dt must be positive");
    const double t0 = drift.theta_path().times.front();
    if (!(t1 >= t0)) fail(ErrorKind::InvalidArgument, "t1 precedes the trajectory start");

    const long steps = t1 > t0 ? static_cast<long>(std::llround((t1 - t0) / dt)) : 0;
    const double k = steps > 0 ? (t1 - t0) / static_cast<double>(steps) : 0.0;

    PathEnsemble ens;
    ens.seed = seed;
    ens.n_paths = n_paths;
    ens.dt = k;
    std::vector<long> record_steps;
    for (double t : opts.record_times) {
        if (t < t0 || t > t1) fail(ErrorKind::InvalidArgument, "record time outside the simulation span");
        record_steps.push_back(k > 0.0 ? std::lround((t - t0) / k) : 0);
    }
    record_steps.push_back(steps);
    std::sort(record_steps.begin(), record_steps.end());
    record_steps.erase(std::unique(record_steps.begin(), record_steps.end()), record_steps.end());
    for (long s : record_steps) ens.record_times.push_back(t0 + static_cast<double>(s) * k);
    ens.recorded.assign(record_steps.size(), std::vector<double>(n_paths));

    const SdeModel& base = drift.base();
    std::atomic<std::size_t> escaped{0};
    auto run_range = [&](std::size_t begin, std::size_t end) {
        std::size_t local_escaped = 0;
        for (std::size_t p = begin; p < end; ++p) {
            std::mt19937_64 rng = path_rng(seed, p);
            std::normal_distribution<double> normal(0.0, 1.0);
            double x = x0_sampler(rng);
            bool out = false;
            std::size_t next = 0;
            if (record_steps[next] == 0) ens.recorded[next++][p] = x;
            const double sqdt = std::sqrt(k);
            for (long s = 1; s <= steps; ++s) {
                const double t = t0 + static_cast<double>(s - 1) * k;
                const double sigma = std::sqrt(std::max(0.0, base.a.eval(x)));
                x += drift(t, x) * k + sigma * sqdt * normal(rng);
                if (!drift.inside(x)) out = true;
                if (next < record_steps.size() && record_steps[next] == s) ens.recorded[next++][p] = x;
            }
            if (out) ++local_escaped;
        }
        escaped += local_escaped;
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(opts.threads ? opts.threads : default_worker_count(),
                                                             static_cast<unsigned>(n_paths)));
    if (workers == 1) {
        run_range(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_paths + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(n_paths, b + chunk);
            if (b < e) pool.emplace_back(run_range, b, e);
        }
        for (auto& th : pool) th.join();
    }
    ens.escaped = escaped.load();
    ens.terminal_values = ens.recorded.back();
    if (static_cast<double>(ens.escaped) > opts.max_escape_fraction * static_cast<double>(n_paths))
        fail(ErrorKind::EscapedGrid, std::to_string(ens.escaped) + " of " + std::to_string(n_paths) +
                                         " paths left the drift grid");
    return ens;
}

MomentReport validate_moments(const std::vector<double>& samples, const ExpFamily& fam, const NaturalParams& theta,
                              const std::vector<double>& em_bias) {
    MomentReport report;
    report.all_pass = true;
    if (samples.size() < 2) report.insufficient_paths = true;
    const Vector target = mean_params(fam, theta).eta;
    const double n = static_cast<double>(samples.size());
    for (int i = 0; i < fam.n(); ++i) {
        const SmoothField& c = fam.statistic(i);
        CompensatedSum s;
        for (double y : samples) s.add(c.eval(y));
        const double mean = samples.empty() ? std::numeric_limits<double>::quiet_NaN() : s.value() / n;
        CompensatedSum v;
        for (double y : samples) {
            const double d = c.eval(y) - mean;
            v.add(d * d);
        }
        MomentCheck chk;
        chk.stat = "c" + std::to_string(i + 1);
        chk.empirical = mean;
        chk.target = target[i];
        chk.stderr_ = samples.size() < 2 ? std::numeric_limits<double>::infinity()
                                         : std::sqrt(v.value() / (n - 1.0) / n);
        chk.bias_budget = static_cast<std::size_t>(i) < em_bias.size() ? em_bias[static_cast<std::size_t>(i)] : 0.0;
        const double diff = std::abs(chk.empirical - chk.target);
        chk.z = std::isfinite(chk.stderr_) && chk.stderr_ > 0.0 ? (chk.empirical - chk.target) / chk.stderr_ : 0.0;
        chk.pass = !report.insufficient_paths && diff <= 3.0 * chk.stderr_ + chk.bias_budget;
        report.all_pass = report.all_pass && chk.pass;
        report.checks.push_back(chk);
    }
    return report;
}

void MomentReport::write_csv(std::ostream& os) const {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "stat,empirical,target,stderr,z\n" << std::setprecision(17);
    for (const MomentCheck& c : checks)
        os << c.stat << ',' << c.empirical << ',' << c.target << ',' << c.stderr_ << ',' << c.z << '\n';
    os.flags(flags);
    os.precision(prec);
}

std::vector<double> ou_em_bias(double k, double sigma2, double mean0, double var0, double T, double dt) {
    const long steps = static_cast<long>(std::llround(T / dt));
    const double h = T / static_cast<double>(std::max(1L, steps));
    double m = mean0;
    double v = var0;
    for (long s = 0; s < steps; ++s) {
        m *= (1.0 - k * h);
        v = (1.0 - k * h) * (1.0 - k * h) * v + sigma2 * h;
    }
    const double me = mean0 * std::exp(-k * T);
    const double ve = sigma2 / (2.0 * k) + (var0 - sigma2 / (2.0 * k)) * std::exp(-2.0 * k * T);
    return {std::abs(m - me), std::abs((v + m * m) - (ve + me * me))};
}

std::vector<double> affine_em_bias(const SynthesizedDrift& drift, double mean0, double var0, double dt, double t1) {
    const SdeModel& base = drift.base();
    if (!base.a.is_polynomial() || base.a.polynomial()->degree() > 0)
        fail(ErrorKind::InvalidArgument, "affine_em_bias needs a constant diffusion");
    const double a = base.a.eval(0.0);
    const Grid1D& grid = drift.grid();
    const double t0 = drift.theta_path().times.front();

    auto coeffs = [&](double t) {
        const double x0 = 0.5 * (grid.lo + grid.hi);
        const double span = 0.25 * (grid.hi - grid.lo);
        const double u0 = drift(t, x0);
        const double slope = (drift(t, x0 + span) - drift(t, x0 - span)) / (2.0 * span);
        return std::pair{u0 - slope * x0, slope};
    };
    for (std::size_t k = 0; k < drift.theta_path().times.size(); ++k) {
        const double t = drift.theta_path().times[k];
        const auto [A, B] = coeffs(t);
        const auto& row = drift.table(k);
        double scale = 1.0;
        for (double u : row) scale = std::max(scale, std::abs(u));
        // The table's end cells carry the truncated-integral boundary effect
        // where the family has no mass; only the inner 80% is checked.
        for (int i = grid.m / 10; i < grid.m - grid.m / 10; i += std::max(1, grid.m / 64)) {
            if (std::abs(row[static_cast<std::size_t>(i)] - (A + B * grid.x(i))) > 1e-6 * scale)
                fail(ErrorKind::InvalidArgument, "synthesized drift is not affine in x");
        }
    }

    const long steps = t1 > t0 ? static_cast<long>(std::llround((t1 - t0) / dt)) : 0;
    const double k = steps > 0 ? (t1 - t0) / static_cast<double>(steps) : 0.0;
    double m = mean0;
    double v = var0;
    for (long s = 0; s < steps; ++s) {
        const auto [A, B] = coeffs(t0 + static_cast<double>(s) * k);
        m = m + (A + B * m) * k;
        v = (1.0 + B * k) * (1.0 + B * k) * v + a * k;
    }

    // Continuous moment equations m' = A + B m, v' = 2 B v + a.
    const int sub = 20;
    const long fine = std::max(1L, steps) * sub;
    const double h = (t1 - t0) / static_cast<double>(fine);
    double mc = mean0;
    double vc = var0;
    auto rhs = [&](double t, double mm, double vv) {
        const auto [A, B] = coeffs(t);
        return std::pair{A + B * mm, 2.0 * B * vv + a};
    };
    for (long s = 0; s < fine && h > 0.0; ++s) {
        const double t = t0 + static_cast<double>(s) * h;
        const auto [k1m, k1v] = rhs(t, mc, vc);
        const auto [k2m, k2v] = rhs(t + 0.5 * h, mc + 0.5 * h * k1m, vc + 0.5 * h * k1v);
        const auto [k3m, k3v] = rhs(t + 0.5 * h, mc + 0.5 * h * k2m, vc + 0.5 * h * k2v);
        const auto [k4m, k4v] = rhs(t + h, mc + h * k3m, vc + h * k3v);
        mc += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
        vc += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    return {std::abs(m - mc), std::abs((v + m * m) - (vc + mc * mc))};
}

}  // namespace fpeproj
