#include "fpeproj/ode.hpp"

#include <algorithm>
#include <cmath>

#include "fpeproj/errors.hpp"

namespace fpeproj {

namespace {

constexpr double kExitTolerance = 1e-10;
constexpr double kUnderflow = 1e-14;

void validate(const IvpProblem& p) {
    if (!p.rhs) fail(ErrorKind::InvalidArgument, "IVP needs a right-hand side");
    if (!(p.t1 > p.t0)) fail(ErrorKind::InvalidArgument, "IVP needs t1 > t0");
    if (p.guard && !p.guard(p.t0, p.y0)) fail(ErrorKind::InvalidArgument, "initial state fails the guard");
}

struct StepResult {
    bool ok = false;
    OdeVector y;
    std::string reason;
};

bool admissible(const IvpProblem& p, double t, const OdeVector& y) {
    return y.allFinite() && (!p.guard || p.guard(t, y));
}

// Single RK4 step wrapped so that numeric failures inside the stages count as
// leaving the domain rather than aborting the integration.
StepResult guarded_rk4(const IvpProblem& p, double t, const OdeVector& y, double h) {
    StepResult r;
    try {
        r.y = step_rk4(p.rhs, t, y, h);
    } catch (const Error& e) {
        r.reason = e.what();
        return r;
    }
    if (!admissible(p, t + h, r.y)) {
        r.reason = "guard rejected state";
        return r;
    }
    r.ok = true;
    return r;
}

// Advances from t by at most `h` towards a failing step: bisects the step
// length, returns the longest admissible length found (possibly 0).
double bisect_exit(const IvpProblem& p, double t, const OdeVector& y, double h, double tol, OdeVector& y_out,
                   std::string& reason) {
    double good = 0.0;
    double bad = h;
    y_out = y;
    while (bad - good > tol) {
        const double mid = 0.5 * (good + bad);
        StepResult r = guarded_rk4(p, t, y, mid);
        if (r.ok) {
            good = mid;
            y_out = std::move(r.y);
        } else {
            bad = mid;
            reason = r.reason;
        }
    }
    return good;
}

class Stepper {
public:
    Stepper(const IvpProblem& p, const IntegrateOptions& o) : p_(p), o_(o) {
        if (!(o.h0 > 0.0)) fail(ErrorKind::InvalidArgument, "h0 must be positive");
        span_ = p.t1 - p.t0;
        h_ = std::min(o.h0, span_);
    }

    // Integrates from (t, y) to t_end. Returns false on domain exit.
    bool advance(double& t, OdeVector& y, double t_end, Trajectory& out) {
        while (t < t_end) {
            const bool last = h_ >= t_end - t;
            const double h = last ? t_end - t : h_;
            StepResult full = guarded_rk4(p_, t, y, h);
            StepResult half1 = full.ok ? guarded_rk4(p_, t, y, 0.5 * h) : StepResult{};
            StepResult half2 = half1.ok ? guarded_rk4(p_, t + 0.5 * h, half1.y, 0.5 * h) : StepResult{};
            if (!full.ok || !half1.ok || !half2.ok) {
                std::string reason = !full.ok ? full.reason : (!half1.ok ? half1.reason : half2.reason);
                OdeVector y_exit;
                const double tol = kExitTolerance * span_;
                const double good = bisect_exit(p_, t, y, h, tol, y_exit, reason);
                if (good > 0.0) {
                    t += good;
                    y = y_exit;
                    if (o_.record_steps) push(out, t, y);
                }
                out.exit = DomainExit{t, reason};
                return false;
            }
            // Richardson: two half steps are more accurate by 2^4.
            const OdeVector diff = half2.y - full.y;
            double err = 0.0;
            for (Eigen::Index i = 0; i < diff.size(); ++i) {
                const double scale = o_.atol + o_.rtol * std::max(std::abs(y[i]), std::abs(half2.y[i]));
                err = std::max(err, std::abs(diff[i]) / 15.0 / scale);
            }
            if (err <= 1.0) {
                t = last ? t_end : t + h;
                y = half2.y + diff / 15.0;
                if (o_.record_steps) push(out, t, y);
                // PI controller on the error ratio.
                double factor = err > 0.0 ? 0.9 * std::pow(err, -0.7 / 5.0) * std::pow(prev_err_, 0.4 / 5.0) : 5.0;
                factor = std::clamp(factor, 0.2, 5.0);
                prev_err_ = std::max(err, 1e-4);
                if (!last) h_ = h * factor;
            } else {
                const double factor = std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
                h_ = h * factor;
            }
            if (h_ < kUnderflow * span_)
                fail(ErrorKind::StepUnderflow, "step size underflow at t = " + std::to_string(t));
        }
        return true;
    }

    static void push(Trajectory& out, double t, const OdeVector& y) {
        if (!out.times.empty() && t <= out.times.back()) return;
        out.times.push_back(t);
        out.states.push_back(y);
    }

private:
    const IvpProblem& p_;
    IntegrateOptions o_;
    double span_ = 1.0;
    double h_ = 0.0;
    double prev_err_ = 1.0;
};

}  // namespace

OdeVector step_rk4(const OdeRhs& rhs, double t, const OdeVector& y, double h) {
    if (!(h > 0.0)) fail(ErrorKind::InvalidArgument, "RK4 step needs h > 0");
    const OdeVector k1 = rhs(t, y);
    const OdeVector k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
    const OdeVector k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
    const OdeVector k4 = rhs(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate(const IvpProblem& problem, const IntegrateOptions& opts) {
    IntegrateOptions o = opts;
    o.record_steps = true;
    return integrate_at(problem, {problem.t1}, o);
}

Trajectory integrate_at(const IvpProblem& problem, const std::vector<double>& output_times,
                        const IntegrateOptions& opts) {
    validate(problem);
    for (std::size_t i = 0; i < output_times.size(); ++i) {
        if (output_times[i] < problem.t0 || output_times[i] > problem.t1)
            fail(ErrorKind::InvalidArgument, "output time outside the integration span");
        if (i > 0 && output_times[i] < output_times[i - 1])
            fail(ErrorKind::InvalidArgument, "output times must be ascending");
    }
    Trajectory out;
    Stepper stepper(problem, opts);
    double t = problem.t0;
    OdeVector y = problem.y0;
    Stepper::push(out, t, y);
    for (double target : output_times) {
        if (target <= t) continue;
        if (!stepper.advance(t, y, target, out)) return out;
        Stepper::push(out, t, y);
    }
    return out;
}

Trajectory integrate_fixed(const IvpProblem& problem, double h) {
    validate(problem);
    if (!(h > 0.0)) fail(ErrorKind::InvalidArgument, "fixed step must be positive");
    Trajectory out;
    double t = problem.t0;
    OdeVector y = problem.y0;
    Stepper::push(out, t, y);
    const auto steps = static_cast<long>(std::ceil((problem.t1 - problem.t0) / h - 1e-9));
    for (long s = 0; s < steps; ++s) {
        const double hs = std::min(h, problem.t1 - t);
        y = step_rk4(problem.rhs, t, y, hs);
        t = s + 1 == steps ? problem.t1 : t + hs;
        Stepper::push(out, t, y);
    }
    return out;
}

}  // namespace fpeproj
