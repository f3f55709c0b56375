#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "fpeproj/field.hpp"

namespace fpeproj {

/// Neumaier compensated accumulator. Summation order is the caller's order.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct QuadratureSpec {
    int panel_order = 32;      ///< Gauss-Legendre points per panel
    int panels = 16;
    double tail_eps = 1e-14;   ///< relative integrand level at the truncation bounds
    int max_refinements = 6;   ///< panel doublings allowed by integrate()
    double rel_tol = 1e-11;    ///< err_est budget relative to the integral of |f|

    void validate() const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const noexcept { return hi - lo; }
};

/// Composite Gauss-Legendre rule on a finite interval.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    Interval domain;
    int panel_order = 0;
    int panels = 0;
};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending nodes.
void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights);

QuadratureRule composite_rule(Interval domain, int panel_order, int panels);

/// Same panels as `rule`, half the points per panel (at least 1).
QuadratureRule half_order_rule(const QuadratureRule& rule);

/// Truncation bounds for exp(exponent): both endpoints sit at or below
/// max-exponent + ln(tail_eps). Throws NoDecay if |x| <= 1e3 is not enough.
Interval truncation_bounds(const std::function<double(double)>& exponent, double tail_eps);

/// Truncated composite rule for integrals weighted by exp(exponent).
QuadratureRule build_rule(const std::function<double(double)>& exponent, const QuadratureSpec& spec);
QuadratureRule build_rule(const SmoothField& exponent, const QuadratureSpec& spec);

struct IntegralEstimate {
    double value = 0.0;
    double err_est = 0.0;
};

/// Integrates f over the rule's domain with half-order error estimate; doubles
/// the panel count up to spec.max_refinements times. Throws QuadratureFailure.
IntegralEstimate integrate(const std::function<double(double)>& f, const QuadratureRule& rule,
                           const QuadratureSpec& spec = {});
IntegralEstimate integrate(const SmoothField& f, const QuadratureRule& rule, const QuadratureSpec& spec = {});

/// Weighted sum over node-wise values, ascending node order, compensated.
/// No error estimate is possible from a single set of node values.
double integrate_values(std::span<const double> values, const QuadratureRule& rule);

}  // namespace fpeproj
