#include "fpeproj/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "fpeproj/errors.hpp"

namespace fpeproj {

namespace {

constexpr double kScanLimit = 1e3;
constexpr int kScanPoints = 4001;

struct GlTable {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GlTable compute_gauss_legendre(int order) {
    GlTable t;
    t.nodes.resize(static_cast<std::size_t>(order));
    t.weights.resize(static_cast<std::size_t>(order));
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) p0 = 1.0;
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= order; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = order == 1 ? 1.0 : order * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(order - 1 - i);
        t.nodes[lo] = -x;
        t.nodes[hi] = x;
        t.weights[lo] = w;
        t.weights[hi] = w;
    }
    if (order % 2 == 1) t.nodes[static_cast<std::size_t>(order / 2)] = 0.0;
    if (order == 1) t.weights[0] = 2.0;
    return t;
}

const GlTable& gl_table(int order) {
    static std::mutex mutex;
    static std::map<int, GlTable> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_gauss_legendre(order)).first;
    return it->second;
}

double safe_eval(const std::function<double(double)>& f, double x) {
    const double v = f(x);
    if (std::isnan(v)) return -std::numeric_limits<double>::infinity();
    return v;
}

// Locate the crossing of `threshold` between an inside point and an outside point.
double bisect_crossing(const std::function<double(double)>& exponent, double inside, double outside,
                       double threshold) {
    for (int it = 0; it < 200 && std::abs(outside - inside) > 1e-12 * (1.0 + std::abs(outside)); ++it) {
        const double mid = 0.5 * (inside + outside);
        if (safe_eval(exponent, mid) > threshold)
            inside = mid;
        else
            outside = mid;
    }
    return outside;
}

}  // namespace

void QuadratureSpec::validate() const {
    if (panel_order < 2) fail(ErrorKind::InvalidArgument, "panel_order must be >= 2");
    if (panels < 1) fail(ErrorKind::InvalidArgument, "panels must be >= 1");
    if (!(tail_eps > 0.0 && tail_eps <= 1e-6)) fail(ErrorKind::InvalidArgument, "tail_eps must lie in (0, 1e-6]");
    if (max_refinements < 0) fail(ErrorKind::InvalidArgument, "max_refinements must be >= 0");
    if (!(rel_tol > 0.0)) fail(ErrorKind::InvalidArgument, "rel_tol must be positive");
}

void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 1) fail(ErrorKind::InvalidArgument, "Gauss-Legendre order must be >= 1");
    const GlTable& t = gl_table(order);
    nodes = t.nodes;
    weights = t.weights;
}

QuadratureRule composite_rule(Interval domain, int panel_order, int panels) {
    if (!(domain.hi > domain.lo)) fail(ErrorKind::InvalidArgument, "empty quadrature domain");
    if (panel_order < 1 || panels < 1) fail(ErrorKind::InvalidArgument, "bad composite rule shape");
    const GlTable& t = gl_table(panel_order);
    QuadratureRule rule;
    rule.domain = domain;
    rule.panel_order = panel_order;
    rule.panels = panels;
    rule.nodes.reserve(static_cast<std::size_t>(panel_order * panels));
    rule.weights.reserve(static_cast<std::size_t>(panel_order * panels));
    const double width = domain.width() / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = domain.lo + p * width;
        const double mid = a + 0.5 * width;
        for (int k = 0; k < panel_order; ++k) {
            rule.nodes.push_back(mid + 0.5 * width * t.nodes[static_cast<std::size_t>(k)]);
            rule.weights.push_back(0.5 * width * t.weights[static_cast<std::size_t>(k)]);
        }
    }
    return rule;
}

QuadratureRule half_order_rule(const QuadratureRule& rule) {
    return composite_rule(rule.domain, std::max(1, rule.panel_order / 2), rule.panels);
}

Interval truncation_bounds(const std::function<double(double)>& exponent, double tail_eps) {
    // sinh-spaced scan: fine near the origin, reaching |x| = kScanLimit.
    const double umax = std::asinh(kScanLimit);
    std::vector<double> xs(kScanPoints);
    std::vector<double> es(kScanPoints);
    double emax = -std::numeric_limits<double>::infinity();
    std::size_t imax = 0;
    for (int j = 0; j < kScanPoints; ++j) {
        const double u = -umax + 2.0 * umax * j / (kScanPoints - 1);
        const auto idx = static_cast<std::size_t>(j);
        xs[idx] = std::sinh(u);
        es[idx] = safe_eval(exponent, xs[idx]);
        if (es[idx] == std::numeric_limits<double>::infinity())
            fail(ErrorKind::NoDecay, "exponent is +inf at x = " + std::to_string(xs[idx]));
        if (es[idx] > emax) {
            emax = es[idx];
            imax = idx;
        }
    }
    if (!std::isfinite(emax)) fail(ErrorKind::NoDecay, "exponent is -inf everywhere on the scan");
    const double threshold = emax + std::log(tail_eps);

    std::size_t right = imax;
    for (std::size_t j = xs.size(); j-- > imax;) {
        if (es[j] > threshold) {
            right = j;
            break;
        }
    }
    std::size_t left = imax;
    for (std::size_t j = 0; j <= imax; ++j) {
        if (es[j] > threshold) {
            left = j;
            break;
        }
    }
    if (right + 1 >= xs.size() || left == 0)
        fail(ErrorKind::NoDecay, "integrand does not decay within |x| <= 1e3");

    Interval d;
    d.hi = bisect_crossing(exponent, xs[right], xs[right + 1], threshold);
    d.lo = bisect_crossing(exponent, xs[left], xs[left - 1], threshold);
    return d;
}

QuadratureRule build_rule(const std::function<double(double)>& exponent, const QuadratureSpec& spec) {
    spec.validate();
    return composite_rule(truncation_bounds(exponent, spec.tail_eps), spec.panel_order, spec.panels);
}

QuadratureRule build_rule(const SmoothField& exponent, const QuadratureSpec& spec) {
    return build_rule([&exponent](double x) { return exponent.eval(x); }, spec);
}

double integrate_values(std::span<const double> values, const QuadratureRule& rule) {
    if (values.size() != rule.nodes.size())
        fail(ErrorKind::InvalidArgument, "node-value count does not match the rule");
    CompensatedSum s;
    for (std::size_t i = 0; i < values.size(); ++i) s.add(rule.weights[i] * values[i]);
    return s.value();
}

IntegralEstimate integrate(const std::function<double(double)>& f, const QuadratureRule& rule,
                           const QuadratureSpec& spec) {
    auto apply = [&f](const QuadratureRule& r, double& abs_mass) {
        CompensatedSum s;
        CompensatedSum a;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            const double v = f(r.nodes[i]);
            if (!std::isfinite(v)) fail(ErrorKind::QuadratureFailure, "non-finite integrand at a node");
            s.add(r.weights[i] * v);
            a.add(r.weights[i] * std::abs(v));
        }
        abs_mass = a.value();
        return s.value();
    };

    QuadratureRule current = rule;
    for (int refinement = 0;; ++refinement) {
        double abs_mass = 0.0;
        double ignored = 0.0;
        const double full = apply(current, abs_mass);
        const double half = apply(half_order_rule(current), ignored);
        const IntegralEstimate est{full, std::abs(full - half)};
        if (est.err_est <= spec.rel_tol * abs_mass + 1e-300) return est;
        if (refinement >= spec.max_refinements)
            fail(ErrorKind::QuadratureFailure,
                 "error estimate " + std::to_string(est.err_est) + " above tolerance after refinement");
        current = composite_rule(current.domain, current.panel_order, current.panels * 2);
    }
}

IntegralEstimate integrate(const SmoothField& f, const QuadratureRule& rule, const QuadratureSpec& spec) {
    return integrate([&f](double x) { return f.eval(x); }, rule, spec);
}

}  // namespace fpeproj
