#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fpeproj {

using OdeVector = Eigen::VectorXd;
using OdeRhs = std::function<OdeVector(double, const OdeVector&)>;
using OdeGuard = std::function<bool(double, const OdeVector&)>;

struct IvpProblem {
    OdeRhs rhs;
    OdeVector y0;
    double t0 = 0.0;
    double t1 = 1.0;
    /// Feasibility predicate; empty means always feasible.
    OdeGuard guard;
};

/// Integration stopped because the state left the guard's domain.
struct DomainExit {
    double t = 0.0;
    std::string reason;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<OdeVector> states;
    std::optional<DomainExit> exit;

    std::size_t size() const noexcept { return times.size(); }
    const OdeVector& back() const { return states.back(); }
};

struct IntegrateOptions {
    double h0 = 1e-2;
    double rtol = 1e-8;
    double atol = 1e-10;
    /// Record every accepted step; otherwise only the requested output times.
    bool record_steps = true;
};

/// One classical fourth-order Runge-Kutta step.
OdeVector step_rk4(const OdeRhs& rhs, double t, const OdeVector& y, double h);

/// Adaptive RK4 with step-doubling error control and PI step adaptation.
///
/// A step whose stages throw fpeproj::Error or whose result fails the guard
/// triggers a bisection on the step length; once the failing length is below
/// 1e-10 of the span the integration stops with a DomainExit. Throws
/// StepUnderflow if error control drives h below 1e-14 of the span.
Trajectory integrate(const IvpProblem& problem, const IntegrateOptions& opts);

/// As integrate(), recording states exactly at the given ascending times
/// (which must lie in [t0, t1]; t0 itself is always recorded).
Trajectory integrate_at(const IvpProblem& problem, const std::vector<double>& output_times,
                        const IntegrateOptions& opts);

/// Fixed-step RK4 without error control; used for order checks.
Trajectory integrate_fixed(const IvpProblem& problem, double h);

}  // namespace fpeproj
