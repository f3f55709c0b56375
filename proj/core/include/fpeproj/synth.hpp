#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "fpeproj/expfam.hpp"
#include "fpeproj/ode.hpp"
#include "fpeproj/oracle.hpp"
#include "fpeproj/sde.hpp"

namespace fpeproj {

/// Drift u*(x) of the diffusion dY = u*(Y) dt + sqrt(a(Y)) dW whose marginal
/// follows the projected density p(.; theta) at parameter theta:
///
///   u*(x) = a'(x)/2 + a(x) ell'(x)/2 - v . I(x),   v = g^{-1} E_theta[L c],
///   I(x)  = int_{lo}^{x} (c(y) - eta) exp(ell(y) - ell(x)) dy,
///
/// with ell the full log-density exponent. Left of the mode the integral runs
/// from the grid's lower bound; right of it the equivalent tail form
/// -int_x^{hi} is used so that every accumulated factor exp(ell(y) - ell(x))
/// stays bounded. Each grid cell is integrated with 4-point Gauss-Legendre.
std::vector<double> modified_drift(const SdeModel& base, const ExpFamily& fam, const NaturalParams& theta,
                                   const Grid1D& grid);

/// u*(x) tabulated on a grid at the times of a parameter trajectory.
class SynthesizedDrift {
public:
    SynthesizedDrift(SdeModel base, ExpFamily fam, Trajectory theta_path, Grid1D grid);

    const SdeModel& base() const noexcept { return base_; }
    const ExpFamily& family() const noexcept { return fam_; }
    const Trajectory& theta_path() const noexcept { return path_; }
    const Grid1D& grid() const noexcept { return grid_; }
    const std::vector<double>& table(std::size_t time_index) const { return table_.at(time_index); }

    /// Bilinear interpolation in (t, x); x is clamped to the grid.
    double operator()(double t, double x) const;
    bool inside(double x) const noexcept { return x >= grid_.lo && x <= grid_.hi; }

private:
    SdeModel base_;
    ExpFamily fam_;
    Trajectory path_;
    Grid1D grid_;
    std::vector<std::vector<double>> table_;
};

/// Inverse-CDF sampler for a family member, tabulated on a grid.
class FamilySampler {
public:
    FamilySampler(const ExpFamily& fam, const NaturalParams& theta, const Grid1D& grid);
    double operator()(std::mt19937_64& rng) const;

private:
    std::vector<double> xs_;
    std::vector<double> cdf_;
};

using InitialSampler = std::function<double(std::mt19937_64&)>;

struct PathEnsemble {
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    double dt = 0.0;
    std::vector<double> terminal_values;
    /// Values at each requested record time (last entry equals terminal_values).
    std::vector<double> record_times;
    std::vector<std::vector<double>> recorded;
    std::size_t escaped = 0;
};

/// Per-path generator: stream key mixes the seed and the path index.
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path);

/// Worker count from FPE_PROJECT_THREADS, else hardware concurrency.
unsigned default_worker_count();

struct SimulateOptions {
    std::vector<double> record_times;  ///< absolute times; t1 always recorded
    unsigned threads = 0;              ///< 0: default_worker_count()
    double max_escape_fraction = 1e-3;
};

/// Euler-Maruyama for the synthesized diffusion from the trajectory's first
/// time to t1. Throws EscapedGrid when too many paths leave the table grid.
PathEnsemble simulate_em(const SynthesizedDrift& drift, const InitialSampler& x0_sampler, std::size_t n_paths,
                         double dt, double t1, std::uint64_t seed, const SimulateOptions& opts = {});

struct MomentCheck {
    std::string stat;
    double empirical = 0.0;
    double target = 0.0;
    double stderr_ = 0.0;
    double z = 0.0;
    double bias_budget = 0.0;
    bool pass = false;
};

struct MomentReport {
    std::vector<MomentCheck> checks;
    bool all_pass = false;
    bool insufficient_paths = false;

    /// CSV `stat,empirical,target,stderr,z`.
    void write_csv(std::ostream& os) const;
};

/// |mean(c_i(Y)) - E_theta[c_i]| <= 3 stderr + em_bias_i for each statistic.
MomentReport validate_moments(const std::vector<double>& samples, const ExpFamily& fam, const NaturalParams& theta,
                              const std::vector<double>& em_bias = {});

/// |E_EM - E_exact| of (x, x^2) at time T for the Ornstein-Uhlenbeck process
/// dX = -k X dt + sqrt(sigma2) dW started from N(mean0, var0), using the
/// exact Euler-Maruyama moment recursions.
std::vector<double> ou_em_bias(double k, double sigma2, double mean0, double var0, double T, double dt);

/// |E_EM - E_exact| of (x, x^2) at t1 for a synthesized drift that is affine
/// in x with constant squared diffusion, started from (mean0, var0). The
/// Euler-Maruyama moment recursion on the simulation step is compared with a
/// fine RK4 solve of the continuous moment equations of the same drift, so the
/// result isolates time discretization. Throws InvalidArgument when the drift
/// table is not affine or a(x) is not constant.
std::vector<double> affine_em_bias(const SynthesizedDrift& drift, double mean0, double var0, double dt, double t1);

}  // namespace fpeproj
