#pragma once

#include <vector>

#include "fpeproj/expfam.hpp"
#include "fpeproj/ode.hpp"
#include "fpeproj/sde.hpp"

namespace fpeproj {

struct ProjectedState {
    double t = 0.0;
    NaturalParams theta;
};

/// Local projection residual: e_alpha2 = proj_norm2 + r2.
struct ResidualReport {
    double r2 = 0.0;
    double e_alpha2 = 0.0;
    double proj_norm2 = 0.0;
};

/// Galerkin basis for the divergence-form equation dp/dt = d/dx(a dp/dx),
/// with the family exp(theta . W - psi) * background.
struct GalerkinBasis {
    std::vector<SmoothField> W;
    SmoothField coeff;
    BackgroundDensity background = BackgroundDensity::gaussian();
    QuadratureSpec quad{};

    ExpFamily family() const { return ExpFamily(W, background, quad); }
    /// Largest |E_background[W_k]|.
    double max_background_mean() const;
};

/// E_theta[L c] for each statistic.
Vector generator_moments(const ExpFamily& fam, const SdeModel& model, const ProjectedState& state);

/// Fisher-Rao projected vector field g^{-1}(theta) E_theta[L c].
Vector projected_rhs(const ExpFamily& fam, const SdeModel& model, const ProjectedState& state);

ResidualReport residual(const ExpFamily& fam, const SdeModel& model, const ProjectedState& state);

/// Weak-form Galerkin right-hand side g^{-1} b with
/// b_k = -E_theta[a * ell' * W_k'], ell the full log-density exponent. For the
/// Gaussian background ell' = U' - x, which gives <a X, W_k'> - <a U', W_k'>.
Vector galerkin_heat_rhs(const GalerkinBasis& basis, const NaturalParams& theta);

/// Moment ODE closed by the family member with the given expectation
/// parameters. `theta_hint` warm-starts the inversion and is updated.
Vector assumed_density_rhs(const ExpFamily& fam, const SdeModel& model, const ExpectationParams& eta, double t,
                           NaturalParams& theta_hint, double tol = 1e-11);

struct InvariancePoint {
    NaturalParams theta;
    bool ok = false;
    ResidualReport report;
    std::string error;
};

struct InvarianceReport {
    bool invariant = false;
    double max_r2 = 0.0;
    std::vector<InvariancePoint> points;
};

/// Numerical check that L* p / p stays tangent to the family over a grid of
/// parameters. Failing points are recorded and make the family non-invariant.
InvarianceReport invariance_scan(const ExpFamily& fam, const SdeModel& model,
                                 const std::vector<NaturalParams>& theta_grid, double tol);

/// Projected parameter flow theta' = g^{-1} E_theta[L c] as an IVP whose guard
/// is numerical feasibility of theta.
IvpProblem projected_flow(const ExpFamily& fam, const SdeModel& model, const NaturalParams& theta0, double t0,
                          double t1);

/// Galerkin flow for the heat-type equation.
IvpProblem galerkin_flow(const GalerkinBasis& basis, const NaturalParams& theta0, double t0, double t1);

bool feasible(const ExpFamily& fam, const NaturalParams& theta);

}  // namespace fpeproj
