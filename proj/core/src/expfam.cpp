#include "fpeproj/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fpeproj/errors.hpp"

namespace fpeproj {

namespace {

constexpr double kSingularCondition = 1e12;

// exp(exponent) and its half-order companion on the truncated domain, with
// panel doubling until the two normalizations agree.
struct WeightedRule {
    QuadratureRule full;
    QuadratureRule half;
};

std::function<double(double)> exponent_fn(const ExpFamily& fam, const NaturalParams& theta) {
    fam.check_dimension(theta.theta, "theta");
    for (int i = 0; i < theta.theta.size(); ++i)
        if (!std::isfinite(theta.theta[i])) fail(ErrorKind::InfeasibleTheta, "non-finite natural parameter");
    if (fam.polynomial()) {
        Polynomial p = fam.background().log_weight();
        for (int i = 0; i < fam.n(); ++i) p += *fam.statistic(i).polynomial() * theta.theta[i];
        return [p = std::move(p)](double x) { return p(x); };
    }
    return [&fam, th = theta.theta](double x) {
        double e = fam.background().log_weight()(x);
        for (int i = 0; i < fam.n(); ++i) e += th[i] * fam.statistic(i).eval(x);
        return e;
    };
}

}  // namespace

BackgroundDensity BackgroundDensity::lebesgue() { return {BackgroundKind::Lebesgue, 0, Polynomial{}, 0.0}; }

BackgroundDensity BackgroundDensity::gaussian() {
    return {BackgroundKind::GaussianM, 2, Polynomial{0.0, 0.0, -0.5}, 0.5 * std::log(2.0 * std::numbers::pi)};
}

BackgroundDensity BackgroundDensity::generalized(int m) {
    if (m < 4 || m % 2 != 0) fail(ErrorKind::InvalidArgument, "generalized background needs even m >= 4");
    Polynomial w = Polynomial::monomial(m, -1.0 / m);
    QuadratureSpec spec;
    const QuadratureRule rule = build_rule([&w](double x) { return w(x); }, spec);
    const IntegralEstimate z = integrate([&w](double x) { return std::exp(w(x)); }, rule, spec);
    return {BackgroundKind::GeneralizedM, m, std::move(w), std::log(z.value)};
}

std::string BackgroundDensity::name() const {
    switch (kind_) {
        case BackgroundKind::Lebesgue: return "lebesgue";
        case BackgroundKind::GaussianM: return "gaussian";
        case BackgroundKind::GeneralizedM: return "generalized:" + std::to_string(m_);
    }
    return "unknown";
}

ExpFamily::ExpFamily(std::vector<SmoothField> statistics, BackgroundDensity background, QuadratureSpec quad)
    : c_(std::move(statistics)), background_(std::move(background)), quad_(quad) {
    if (c_.empty()) fail(ErrorKind::InvalidArgument, "exponential family needs at least one statistic");
    quad_.validate();
    polynomial_ = std::all_of(c_.begin(), c_.end(), [](const SmoothField& f) { return f.is_polynomial(); });
}

SmoothField ExpFamily::exponent(const NaturalParams& theta) const {
    check_dimension(theta.theta, "theta");
    SmoothField e(background_.log_weight());
    for (int i = 0; i < n(); ++i) e = e + theta.theta[i] * statistic(i);
    return e;
}

void ExpFamily::check_dimension(const Vector& v, const char* what) const {
    if (v.size() != n())
        fail(ErrorKind::InvalidArgument, std::string(what) + " has dimension " + std::to_string(v.size()) +
                                             ", family has " + std::to_string(n()));
}

DensityNodes density_nodes(const ExpFamily& fam, const NaturalParams& theta) {
    const auto expo = exponent_fn(fam, theta);
    const QuadratureSpec& spec = fam.quad();
    Interval domain;
    try {
        domain = truncation_bounds(expo, spec.tail_eps);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::NoDecay) fail(ErrorKind::InfeasibleTheta, e.what());
        throw;
    }

    auto weigh = [&expo](const QuadratureRule& rule, std::vector<double>& prob, double& shift) {
        std::vector<double> ex(rule.nodes.size());
        double emax = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < ex.size(); ++i) {
            ex[i] = expo(rule.nodes[i]);
            emax = std::max(emax, ex[i]);
        }
        if (!std::isfinite(emax)) fail(ErrorKind::QuadratureFailure, "non-finite exponent on the nodes");
        prob.resize(ex.size());
        CompensatedSum z;
        for (std::size_t i = 0; i < ex.size(); ++i) {
            prob[i] = rule.weights[i] * std::exp(ex[i] - emax);
            z.add(prob[i]);
        }
        shift = emax;
        return z.value();
    };

    int panels = spec.panels;
    for (int refinement = 0;; ++refinement) {
        const QuadratureRule full = composite_rule(domain, spec.panel_order, panels);
        const QuadratureRule half = half_order_rule(full);
        DensityNodes out;
        double shift_full = 0.0;
        double shift_half = 0.0;
        const double z_full = weigh(full, out.prob, shift_full);
        const double z_half = weigh(half, out.prob_half, shift_half);
        const double z_half_rescaled = z_half * std::exp(shift_half - shift_full);
        if (std::abs(z_full - z_half_rescaled) <= spec.rel_tol * z_full) {
            for (double& p : out.prob) p /= z_full;
            for (double& p : out.prob_half) p /= z_half;
            out.x = full.nodes;
            out.x_half = half.nodes;
            out.log_partition = std::log(z_full) + shift_full - fam.background().log_norm();
            out.domain = domain;
            return out;
        }
        if (refinement >= spec.max_refinements)
            fail(ErrorKind::QuadratureFailure, "normalization did not converge under panel refinement");
        panels *= 2;
    }
}

double expect(const DensityNodes& nodes, const std::function<double(double)>& f, const QuadratureSpec& spec) {
    CompensatedSum s;
    CompensatedSum a;
    for (std::size_t i = 0; i < nodes.x.size(); ++i) {
        const double v = f(nodes.x[i]);
        if (!std::isfinite(v)) fail(ErrorKind::QuadratureFailure, "non-finite integrand");
        s.add(nodes.prob[i] * v);
        a.add(nodes.prob[i] * std::abs(v));
    }
    CompensatedSum h;
    for (std::size_t i = 0; i < nodes.x_half.size(); ++i) h.add(nodes.prob_half[i] * f(nodes.x_half[i]));
    const double err = std::abs(s.value() - h.value());
    if (err > 1e3 * spec.rel_tol * a.value() + 1e-300)
        fail(ErrorKind::QuadratureFailure, "expectation error estimate " + std::to_string(err) + " too large");
    return s.value();
}

double log_partition(const ExpFamily& fam, const NaturalParams& theta) {
    return density_nodes(fam, theta).log_partition;
}

namespace {

Vector node_means(const ExpFamily& fam, const DensityNodes& nodes) {
    Vector eta(fam.n());
    for (int i = 0; i < fam.n(); ++i) {
        const SmoothField& c = fam.statistic(i);
        CompensatedSum s;
        for (std::size_t k = 0; k < nodes.size(); ++k) s.add(nodes.prob[k] * c.eval(nodes.x[k]));
        eta[i] = s.value();
    }
    return eta;
}

}  // namespace

ExpectationParams mean_params(const ExpFamily& fam, const NaturalParams& theta) {
    return {node_means(fam, density_nodes(fam, theta))};
}

Matrix covariance(const ExpFamily& fam, const DensityNodes& nodes, const Vector& eta) {
    const int n = fam.n();
    std::vector<std::vector<double>> centered(static_cast<std::size_t>(n), std::vector<double>(nodes.size()));
    for (int i = 0; i < n; ++i)
        for (std::size_t k = 0; k < nodes.size(); ++k)
            centered[static_cast<std::size_t>(i)][k] = fam.statistic(i).eval(nodes.x[k]) - eta[i];
    Matrix g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            CompensatedSum s;
            const auto& ci = centered[static_cast<std::size_t>(i)];
            const auto& cj = centered[static_cast<std::size_t>(j)];
            for (std::size_t k = 0; k < nodes.size(); ++k) s.add(nodes.prob[k] * ci[k] * cj[k]);
            g(i, j) = s.value();
            g(j, i) = g(i, j);
        }
    }
    return g;
}

void check_fisher(const Matrix& g) {
    const Eigen::Index n = g.rows();
    Vector scale(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(g(i, i) > 0.0) || !std::isfinite(g(i, i)))
            fail(ErrorKind::SingularFisher, "non-positive Fisher diagonal");
        scale[i] = 1.0 / std::sqrt(g(i, i));
    }
    const Matrix corr = scale.asDiagonal() * g * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(corr, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kSingularCondition)
        fail(ErrorKind::SingularFisher, "scaled Fisher condition number " + std::to_string(hi / lo));
}

Vector solve_fisher(const Matrix& g, const Vector& b) {
    Eigen::LDLT<Matrix> ldlt(g);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        fail(ErrorKind::SingularFisher, "Fisher matrix is not positive definite");
    return ldlt.solve(b);
}

FisherMatrix fisher_matrix(const ExpFamily& fam, const NaturalParams& theta) {
    const DensityNodes nodes = density_nodes(fam, theta);
    Matrix g = covariance(fam, nodes, node_means(fam, nodes));
    check_fisher(g);
    return {std::move(g), theta};
}

namespace {

NaturalParams newton_solve(const ExpFamily& fam, const ExpectationParams& eta, const NaturalParams& theta0,
                           double tol, const NewtonOptions& opts) {
    Vector theta = theta0.theta;
    DensityNodes nodes = density_nodes(fam, {theta});
    Vector current = node_means(fam, nodes);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        const Vector residual = eta.eta - current;
        const double rnorm = residual.lpNorm<Eigen::Infinity>();
        if (rnorm <= tol) return {theta};

        Matrix g = covariance(fam, nodes, current);
        check_fisher(g);
        const Vector delta = solve_fisher(g, residual);
        if (!delta.allFinite())
            fail(ErrorKind::NoConvergence, "Newton direction diverged; target moments look unattainable");
        // Dual objective psi(theta) - theta.eta is convex with the same minimizer.
        const double merit = nodes.log_partition - theta.dot(eta.eta);

        // Damped start for large Newton decrements keeps the first trial
        // inside the region where the quadratic model of psi is meaningful.
        const double decrement = std::sqrt(std::max(0.0, residual.dot(delta)));
        double step = decrement > 1.0 ? 1.0 / (1.0 + decrement) : 1.0;
        bool accepted = false;
        bool saw_feasible = false;
        bool diverged = false;
        bool quadrature_trouble = false;
        for (int h = 0; h < opts.max_halvings; ++h, step *= 0.5) {
            const Vector trial = theta + step * delta;
            if (!trial.allFinite()) {
                diverged = true;
                continue;
            }
            try {
                DensityNodes trial_nodes = density_nodes(fam, {trial});
                saw_feasible = true;
                const Vector trial_mean = node_means(fam, trial_nodes);
                const double trial_rnorm = (eta.eta - trial_mean).lpNorm<Eigen::Infinity>();
                const double trial_merit = trial_nodes.log_partition - trial.dot(eta.eta);
                // Armijo on the convex dual objective gives global convergence;
                // once its decrease is below rounding, the residual decides.
                const double predicted = step * residual.dot(delta);
                const bool armijo = trial_merit <= merit - 1e-4 * predicted;
                const bool flat = predicted <= 1e-12 * (1.0 + std::abs(merit));
                if (armijo || (flat && trial_rnorm < rnorm)) {
                    theta = trial;
                    nodes = std::move(trial_nodes);
                    current = trial_mean;
                    accepted = true;
                    break;
                }
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::QuadratureFailure)
                    quadrature_trouble = true;
                else if (e.kind() != ErrorKind::InfeasibleTheta)
                    throw;
            }
        }
        if (accepted && theta.lpNorm<Eigen::Infinity>() > opts.max_theta)
            fail(ErrorKind::NoConvergence, "natural parameters diverged; target moments look unattainable");
        if (!accepted) {
            if (!saw_feasible && !diverged && !quadrature_trouble) fail(ErrorKind::InfeasibleTheta, "Newton line search left the parameter domain");
            fail(ErrorKind::NoConvergence, "Newton line search stalled at residual " + std::to_string(rnorm));
        }
    }
    fail(ErrorKind::NoConvergence,
         "Newton inversion did not converge in " + std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace

NaturalParams natural_from_mean(const ExpFamily& fam, const ExpectationParams& eta, const NaturalParams& theta0,
                                double tol, const NewtonOptions& opts) {
    fam.check_dimension(eta.eta, "eta");
    for (int i = 0; i < eta.eta.size(); ++i)
        if (!std::isfinite(eta.eta[i])) fail(ErrorKind::InvalidArgument, "non-finite expectation parameter");
    try {
        return newton_solve(fam, eta, theta0, tol, opts);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoConvergence) throw;
    }

    // Continuation along the straight moment path from the start, which stays
    // in the (convex) moment range whenever the target does.
    const Vector eta0 = mean_params(fam, theta0).eta;
    NewtonOptions inner = opts;
    inner.max_iterations = std::min(opts.max_iterations, 30);
    NaturalParams theta = theta0;
    double s = 0.0;
    double ds = 0.25;
    while (s < 1.0) {
        const double next = std::min(1.0, s + ds);
        const ExpectationParams target{(1.0 - next) * eta0 + next * eta.eta};
        try {
            theta = newton_solve(fam, target, theta, next < 1.0 ? std::max(tol, 1e-8) : tol, inner);
            s = next;
            ds = std::min(2.0 * ds, 0.5);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoConvergence && e.kind() != ErrorKind::SingularFisher &&
                e.kind() != ErrorKind::QuadratureFailure)
                throw;
            ds *= 0.25;
            if (ds < 1e-6)
                fail(ErrorKind::NoConvergence, "moment continuation stalled at fraction " + std::to_string(s) +
                                                   "; target moments look unattainable");
        }
    }
    return theta;
}

double log_density(const ExpFamily& fam, const NaturalParams& theta, double x) {
    const double psi = log_partition(fam, theta);
    return fam.exponent(theta).eval(x) - fam.background().log_norm() - psi;
}

std::vector<double> log_density(const ExpFamily& fam, const NaturalParams& theta, std::span<const double> xs) {
    const double psi = log_partition(fam, theta);
    const auto expo = exponent_fn(fam, theta);
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = expo(xs[i]) - fam.background().log_norm() - psi;
    return out;
}

Vector project_onto_tangent(const ExpFamily& fam, const NaturalParams& theta, const SmoothField& field) {
    const DensityNodes nodes = density_nodes(fam, theta);
    const Vector eta = node_means(fam, nodes);
    Matrix g = covariance(fam, nodes, eta);
    check_fisher(g);
    // Condition (F): E[U^2] must be resolved by the quadrature.
    expect(nodes, [&field](double x) { const double u = field.eval(x); return u * u; }, fam.quad());
    const double mean_u = expect(nodes, [&field](double x) { return field.eval(x); }, fam.quad());
    Vector cov(fam.n());
    for (int i = 0; i < fam.n(); ++i) {
        const SmoothField& c = fam.statistic(i);
        CompensatedSum s;
        for (std::size_t k = 0; k < nodes.size(); ++k)
            s.add(nodes.prob[k] * (field.eval(nodes.x[k]) - mean_u) * (c.eval(nodes.x[k]) - eta[i]));
        cov[i] = s.value();
    }
    return solve_fisher(g, cov);
}

ExpFamily monomial_family(int degree, BackgroundDensity background, QuadratureSpec quad) {
    std::vector<SmoothField> c;
    for (int k = 1; k <= degree; ++k) c.emplace_back(Polynomial::monomial(k));
    return ExpFamily(std::move(c), std::move(background), quad);
}

ExpFamily hermite_family(int degree, BackgroundDensity background, QuadratureSpec quad) {
    std::vector<SmoothField> c;
    for (int k = 1; k <= degree; ++k) c.emplace_back(hermite(k));
    return ExpFamily(std::move(c), std::move(background), quad);
}

NaturalParams gaussian_theta(double mean, double variance) {
    if (!(variance > 0.0)) fail(ErrorKind::InvalidArgument, "variance must be positive");
    Vector th(2);
    th << mean / variance, -0.5 / variance;
    return {th};
}

}  // namespace fpeproj
