#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fpeproj/expfam.hpp"
#include "fpeproj/ode.hpp"
#include "fpeproj/sde.hpp"

namespace fpeproj {

/// Uniform grid with m points on [lo, hi].
struct Grid1D {
    double lo = -10.0;
    double hi = 10.0;
    int m = 2001;

    void validate() const;
    double h() const noexcept { return (hi - lo) / (m - 1); }
    double x(int i) const noexcept { return lo + i * h(); }
    std::vector<double> points() const;
};

struct GridDensity {
    Grid1D grid;
    std::vector<double> p;

    /// Trapezoid integral of p.
    double mass() const;
    /// Trapezoid integral of f(x) p(x).
    double expect(const std::function<double(double)>& f) const;
    /// Clips negatives to zero and rescales to unit mass; returns clipped mass.
    double normalize();

    static GridDensity from_function(const Grid1D& grid, const std::function<double(double)>& density);
    static GridDensity gaussian(const Grid1D& grid, double mean, double variance);
    static GridDensity from_family(const Grid1D& grid, const ExpFamily& fam, const NaturalParams& theta);

    /// CSV with header `x,p`, 17 significant digits.
    void write_csv(std::ostream& os) const;
    static GridDensity read_csv(std::istream& is);
};

double normal_pdf(double x, double mean, double variance);

struct FpeSnapshot {
    double t = 0.0;
    GridDensity density;
};

struct FpeOptions {
    /// Snapshot times in addition to t1; snapped to the nearest time step.
    std::vector<double> output_times;
    double mass_tolerance = 1e-4;  ///< MassLoss above this drift per unit time
};

struct FpeResult {
    std::vector<FpeSnapshot> snapshots;
    double mass_drift_rate = 0.0;  ///< accumulated |mass change| per unit time, before renormalization
    double clipped_mass = 0.0;
    std::vector<std::string> log;
};

/// Crank-Nicolson solve of dp/dt = -(f p)' + (a p)''/2 on the flux form with
/// zero-Dirichlet boundaries. Snapshot at t0 is always included.
FpeResult fpe_solve(const SdeModel& model, const GridDensity& p0, double t0, double t1, double dt,
                    const FpeOptions& opts = {});

double kl_divergence(const GridDensity& p, const GridDensity& q);
double kl_divergence(const GridDensity& p, const ExpFamily& fam, const NaturalParams& theta);

/// Trapezoid E_p[c_i].
ExpectationParams grid_moments(const ExpFamily& fam, const GridDensity& p);

/// Kullback-Leibler (moment-matching) projection of a grid density onto the family.
std::pair<NaturalParams, ExpectationParams> moment_project(const ExpFamily& fam, const GridDensity& p,
                                                           const NaturalParams& theta0, double tol = 1e-11);

/// Eigenvalues lambda_i with L c_i = -lambda_i c_i, checked coefficientwise
/// to 1e-12 in polynomial arithmetic. Throws NotEigen.
Vector eigen_spectrum(const ExpFamily& fam, const SdeModel& model);

struct MleRow {
    double t = 0.0;
    Vector eta_true;
    Vector eta_proj;
    double eps_norm = 0.0;          ///< ||eta_true - eta_proj||_inf
    double predicted_norm = 0.0;    ///< ||exp(-Lambda t) eps(0)||_inf
};

struct MleOptions {
    /// Added to eta_proj(0); zero reproduces the start-on-projection setup.
    Vector offset;
    IntegrateOptions ode{1e-2, 1e-10, 1e-12, false};
};

struct MleSeries {
    Vector lambda;
    NaturalParams theta0;   ///< moment projection of p0
    std::vector<MleRow> rows;
    double max_eps = 0.0;
    double fpe_mass_drift_rate = 0.0;
};

/// Compares grid-moment expectation parameters of the true flow against the
/// assumed-density closure integrated from the moment projection of p0.
MleSeries mle_error_series(const ExpFamily& fam, const SdeModel& model, const GridDensity& p0,
                           const std::vector<double>& t_grid, double dt, const NaturalParams& theta_guess,
                           const MleOptions& opts = {});

}  // namespace fpeproj
