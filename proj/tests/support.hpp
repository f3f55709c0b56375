#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's quadrature, so agreement is a genuine cross-check.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace fpeproj::testing {

/// Composite Simpson on [lo, hi] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n = 20000) {
    if (n % 2) ++n;
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

inline double gauss_pdf(double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Natural parameters of N(mean, var) for c = (x, x^2).
inline std::vector<double> gaussian_natural(double mean, double var) { return {mean / var, -0.5 / var}; }

/// Random Gaussian-family parameters with mean in [-1.5, 1.5], variance in [0.3, 2].
inline std::vector<double> random_gaussian_theta(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mu(-1.5, 1.5);
    std::uniform_real_distribution<double> var(0.3, 2.0);
    return gaussian_natural(mu(rng), var(rng));
}

/// Central-difference Hessian of f with per-coordinate steps scale[i], one
/// Richardson extrapolation level (error O(h^4)).
inline std::vector<std::vector<double>> fd_hessian(const std::function<double(const std::vector<double>&)>& f,
                                                   const std::vector<double>& x, const std::vector<double>& scale) {
    const std::size_t n = x.size();
    auto central = [&](std::size_t i, std::size_t j, double k) {
        const double hi = k * scale[i], hj = k * scale[j];
        auto at = [&](double si, double sj) {
            std::vector<double> y = x;
            y[i] += si * hi;
            y[j] += sj * hj;
            return f(y);
        };
        return (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
    };
    std::vector<std::vector<double>> h(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) h[i][j] = (4.0 * central(i, j, 0.5) - central(i, j, 1.0)) / 3.0;
    return h;
}

}  // namespace fpeproj::testing
