#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fpeproj/errors.hpp"
#include "fpeproj/field.hpp"
#include "fpeproj/quadrature.hpp"

namespace fpeproj {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class BackgroundKind { Lebesgue, GaussianM, GeneralizedM };

/// Reference measure of an exponential family. The stored log_weight is the
/// unnormalized exponent; log_norm is ln of its integral (0 for Lebesgue).
class BackgroundDensity {
public:
    static BackgroundDensity lebesgue();
    /// Standard normal density M.
    static BackgroundDensity gaussian();
    /// M_{1,m}(x) proportional to exp(-x^m / m), m even and >= 4.
    static BackgroundDensity generalized(int m);

    BackgroundKind kind() const noexcept { return kind_; }
    int order() const noexcept { return m_; }
    const Polynomial& log_weight() const noexcept { return log_weight_; }
    double log_norm() const noexcept { return log_norm_; }
    std::string name() const;

    /// Normalized log-density of the background (Lebesgue: 0).
    double log_density(double x) const { return log_weight_(x) - log_norm_; }

private:
    BackgroundDensity(BackgroundKind kind, int m, Polynomial log_weight, double log_norm)
        : kind_(kind), m_(m), log_weight_(std::move(log_weight)), log_norm_(log_norm) {}

    BackgroundKind kind_;
    int m_;
    Polynomial log_weight_;
    double log_norm_;
};

struct NaturalParams {
    Vector theta;
};

struct ExpectationParams {
    Vector eta;
};

struct FisherMatrix {
    Matrix g;
    NaturalParams theta_at;
};

/// Exponential family p(x; theta) = exp(theta . c(x) - psi(theta)) * background(x).
class ExpFamily {
public:
    ExpFamily(std::vector<SmoothField> statistics, BackgroundDensity background, QuadratureSpec quad = {});

    int n() const noexcept { return static_cast<int>(c_.size()); }
    const std::vector<SmoothField>& statistics() const noexcept { return c_; }
    const SmoothField& statistic(int i) const { return c_.at(static_cast<std::size_t>(i)); }
    const BackgroundDensity& background() const noexcept { return background_; }
    const QuadratureSpec& quad() const noexcept { return quad_; }

    /// True when every statistic is a polynomial.
    bool polynomial() const noexcept { return polynomial_; }

    /// Unnormalized log-density exponent theta . c(x) + log_weight(x).
    SmoothField exponent(const NaturalParams& theta) const;

    void check_dimension(const Vector& v, const char* what) const;

private:
    std::vector<SmoothField> c_;
    BackgroundDensity background_;
    QuadratureSpec quad_;
    bool polynomial_ = true;
};

/// Quadrature nodes carrying the normalized density p_theta as probabilities.
///
/// The half-order companion set shares panels with the main set and provides
/// error estimates for arbitrary expectations.
struct DensityNodes {
    std::vector<double> x;
    std::vector<double> prob;
    std::vector<double> x_half;
    std::vector<double> prob_half;
    double log_partition = 0.0;
    Interval domain;

    std::size_t size() const noexcept { return x.size(); }
};

DensityNodes density_nodes(const ExpFamily& fam, const NaturalParams& theta);

/// E_theta[f] over the nodes; throws QuadratureFailure when the half-order
/// estimate disagrees beyond quad().rel_tol relative to E|f|.
double expect(const DensityNodes& nodes, const std::function<double(double)>& f, const QuadratureSpec& spec);

double log_partition(const ExpFamily& fam, const NaturalParams& theta);
ExpectationParams mean_params(const ExpFamily& fam, const NaturalParams& theta);
FisherMatrix fisher_matrix(const ExpFamily& fam, const NaturalParams& theta);

/// Fisher matrix straight from precomputed nodes; does not run the
/// singularity check.
Matrix covariance(const ExpFamily& fam, const DensityNodes& nodes, const Vector& eta);

/// Throws SingularFisher when the Jacobi-scaled condition number exceeds 1e12.
void check_fisher(const Matrix& g);

/// Solves g x = b for symmetric positive definite g.
Vector solve_fisher(const Matrix& g, const Vector& b);

struct NewtonOptions {
    double tol = 1e-10;
    int max_iterations = 100;
    int max_halvings = 40;
    double max_theta = 1e8;  ///< larger |theta| is treated as divergence
};

/// Newton inversion of the gradient map theta -> E_theta[c].
NaturalParams natural_from_mean(const ExpFamily& fam, const ExpectationParams& eta, const NaturalParams& theta0,
                                double tol, const NewtonOptions& opts = {});

double log_density(const ExpFamily& fam, const NaturalParams& theta, double x);

/// Log-density at many points sharing a single log-partition evaluation.
std::vector<double> log_density(const ExpFamily& fam, const NaturalParams& theta, std::span<const double> xs);

/// Coefficients w = g^{-1} Cov_theta(U, c); the projected field is w . (c - eta).
Vector project_onto_tangent(const ExpFamily& fam, const NaturalParams& theta, const SmoothField& field);

/// Families used throughout the presets and tests.
ExpFamily monomial_family(int degree, BackgroundDensity background, QuadratureSpec quad = {});
ExpFamily hermite_family(int degree, BackgroundDensity background, QuadratureSpec quad = {});

/// Gaussian (mean, variance) for c = (x, x^2) with a Lebesgue background.
NaturalParams gaussian_theta(double mean, double variance);

}  // namespace fpeproj
