#include "fpeproj/projection.hpp"

#include <algorithm>
#include <cmath>

#include "fpeproj/errors.hpp"

namespace fpeproj {

namespace {

struct ProjectionParts {
    DensityNodes nodes;
    Vector eta;
    Matrix g;
    Vector elc;
};

ProjectionParts projection_parts(const ExpFamily& fam, const SdeModel& model, const ProjectedState& state) {
    ProjectionParts parts;
    parts.nodes = density_nodes(fam, state.theta);
    parts.eta.resize(fam.n());
    parts.elc.resize(fam.n());
    for (int i = 0; i < fam.n(); ++i) {
        const SmoothField& c = fam.statistic(i);
        const SmoothField lc = backward_apply(model, c, state.t);
        parts.eta[i] = expect(parts.nodes, [&c](double x) { return c.eval(x); }, fam.quad());
        parts.elc[i] = expect(parts.nodes, [&lc](double x) { return lc.eval(x); }, fam.quad());
    }
    parts.g = covariance(fam, parts.nodes, parts.eta);
    check_fisher(parts.g);
    return parts;
}

}  // namespace

double GalerkinBasis::max_background_mean() const {
    const ExpFamily bg({Polynomial{0.0, 1.0}}, background, quad);
    Vector zero = Vector::Zero(1);
    const DensityNodes nodes = density_nodes(bg, {zero});
    double worst = 0.0;
    for (const SmoothField& w : W)
        worst = std::max(worst, std::abs(expect(nodes, [&w](double x) { return w.eval(x); }, quad)));
    return worst;
}

Vector generator_moments(const ExpFamily& fam, const SdeModel& model, const ProjectedState& state) {
    return projection_parts(fam, model, state).elc;
}

Vector projected_rhs(const ExpFamily& fam, const SdeModel& model, const ProjectedState& state) {
    const ProjectionParts parts = projection_parts(fam, model, state);
    return solve_fisher(parts.g, parts.elc);
}

ResidualReport residual(const ExpFamily& fam, const SdeModel& model, const ProjectedState& state) {
    const ProjectionParts parts = projection_parts(fam, model, state);
    const SmoothField alpha = alpha_field(model, fam, state.theta, state.t);
    ResidualReport r;
    r.e_alpha2 = expect(parts.nodes, [&alpha](double x) { const double v = alpha.eval(x); return v * v; }, fam.quad());
    const Vector w = solve_fisher(parts.g, parts.elc);
    r.proj_norm2 = parts.elc.dot(w);
    // Integrating the squared orthogonal part directly keeps r2 >= 0 and avoids
    // the cancellation in e_alpha2 - proj_norm2 when the family is invariant.
    // The half-order check is skipped: for an invariant family the integrand is
    // rounding noise.
    CompensatedSum sum;
    for (std::size_t k = 0; k < parts.nodes.size(); ++k) {
        const double x = parts.nodes.x[k];
        double d = alpha.eval(x);
        for (int i = 0; i < fam.n(); ++i) d -= w[i] * (fam.statistic(i).eval(x) - parts.eta[i]);
        sum.add(parts.nodes.prob[k] * d * d);
    }
    r.r2 = sum.value();
    return r;
}

Vector galerkin_heat_rhs(const GalerkinBasis& basis, const NaturalParams& theta) {
    const ExpFamily fam = basis.family();
    const DensityNodes nodes = density_nodes(fam, theta);
    const SmoothField ell = fam.exponent(theta);
    const int n = fam.n();
    Vector eta(n);
    Vector b(n);
    for (int k = 0; k < n; ++k) {
        const SmoothField& w = basis.W[static_cast<std::size_t>(k)];
        eta[k] = expect(nodes, [&w](double x) { return w.eval(x); }, fam.quad());
        b[k] = -expect(nodes, [&](double x) { return basis.coeff.eval(x) * ell.d1(x) * w.d1(x); }, fam.quad());
    }
    Matrix g = covariance(fam, nodes, eta);
    check_fisher(g);
    return solve_fisher(g, b);
}

Vector assumed_density_rhs(const ExpFamily& fam, const SdeModel& model, const ExpectationParams& eta, double t,
                           NaturalParams& theta_hint, double tol) {
    theta_hint = natural_from_mean(fam, eta, theta_hint, tol);
    return generator_moments(fam, model, {t, theta_hint});
}

InvarianceReport invariance_scan(const ExpFamily& fam, const SdeModel& model,
                                 const std::vector<NaturalParams>& theta_grid, double tol) {
    if (theta_grid.empty()) fail(ErrorKind::EmptyInput, "invariance scan needs at least one parameter point");
    InvarianceReport report;
    report.invariant = true;
    for (const NaturalParams& theta : theta_grid) {
        InvariancePoint pt{theta, false, {}, {}};
        try {
            pt.report = residual(fam, model, {0.0, theta});
            pt.ok = true;
            report.max_r2 = std::max(report.max_r2, pt.report.r2);
            if (pt.report.r2 > tol) report.invariant = false;
        } catch (const Error& e) {
            pt.error = e.what();
            report.invariant = false;
        }
        report.points.push_back(std::move(pt));
    }
    return report;
}

bool feasible(const ExpFamily& fam, const NaturalParams& theta) {
    try {
        density_nodes(fam, theta);
        return true;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InfeasibleTheta || e.kind() == ErrorKind::QuadratureFailure) return false;
        throw;
    }
}

IvpProblem projected_flow(const ExpFamily& fam, const SdeModel& model, const NaturalParams& theta0, double t0,
                          double t1) {
    IvpProblem p;
    p.rhs = [fam, model](double t, const OdeVector& y) { return projected_rhs(fam, model, {t, {y}}); };
    p.guard = [fam](double, const OdeVector& y) { return feasible(fam, {y}); };
    p.y0 = theta0.theta;
    p.t0 = t0;
    p.t1 = t1;
    return p;
}

IvpProblem galerkin_flow(const GalerkinBasis& basis, const NaturalParams& theta0, double t0, double t1) {
    IvpProblem p;
    p.rhs = [basis](double, const OdeVector& y) { return galerkin_heat_rhs(basis, {y}); };
    p.guard = [fam = basis.family()](double, const OdeVector& y) { return feasible(fam, {y}); };
    p.y0 = theta0.theta;
    p.t0 = t0;
    p.t1 = t1;
    return p;
}

}  // namespace fpeproj
