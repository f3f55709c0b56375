#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fpeproj/errors.hpp"
#include "fpeproj/oracle.hpp"
#include "fpeproj/sde.hpp"
#include "support.hpp"

using namespace fpeproj;
namespace ft = fpeproj::testing;

namespace {

NaturalParams th(double a, double b) {
    Vector t(2);
    t << a, b;
    return {t};
}

const ExpFamily& gauss() {
    static const ExpFamily fam = monomial_family(2, BackgroundDensity::lebesgue());
    return fam;
}

}  // namespace

TEST(BackwardApply, OuHermiteEigenfunctions) {
    const SdeModel ou = ornstein_uhlenbeck(1.0, 2.0);
    const SmoothField l2 = backward_apply(ou, SmoothField(Polynomial{-1.0, 0.0, 1.0}));
    ASSERT_TRUE(l2.is_polynomial());
    EXPECT_LT(max_coeff_diff(*l2.polynomial(), Polynomial{2.0, 0.0, -2.0}), 1e-15);
    const SmoothField l1 = backward_apply(ou, SmoothField(Polynomial{0.0, 1.0}));
    EXPECT_LT(max_coeff_diff(*l1.polynomial(), Polynomial{0.0, -1.0}), 1e-15);
}

TEST(BackwardApply, AnnihilatesConstants) {
    for (const SdeModel& m : {ornstein_uhlenbeck(0.7, 1.3), double_well(2.0), heat(3.0)}) {
        const SmoothField l = backward_apply(m, SmoothField::constant(5.0));
        for (double x : {-2.0, 0.1, 3.0}) EXPECT_EQ(l.eval(x), 0.0);
    }
}

TEST(BackwardApply, GenericFieldsMatchFormula) {
    SdeModel m{SmoothField([](double x) { return std::sin(x); }, [](double x) { return std::cos(x); },
                           [](double x) { return -std::sin(x); }),
               SmoothField(Polynomial{1.0, 0.0, 0.5}), false, "sine"};
    const SmoothField phi(Polynomial{0.0, 0.0, 0.0, 1.0});
    const SmoothField l = backward_apply(m, phi);
    for (double x : {-1.0, 0.5, 2.0})
        EXPECT_NEAR(l.eval(x), std::sin(x) * 3 * x * x + 0.5 * (1 + 0.5 * x * x) * 6 * x, 1e-12);
}

TEST(AlphaField, OuStationaryIsZero) {
    const SmoothField a = alpha_field(ornstein_uhlenbeck(1.0, 2.0), gauss(), th(0.0, -0.5));
    ASSERT_TRUE(a.is_polynomial());
    EXPECT_TRUE(a.polynomial()->is_zero() || a.polynomial()->coeffs().size() <= 3);
    for (double x : {-3.0, 0.0, 1.5}) EXPECT_NEAR(a.eval(x), 0.0, 1e-14);
}

TEST(AlphaField, HeatAtStandardNormal) {
    const SmoothField a = alpha_field(heat(2.0), gauss(), th(0.0, -0.5));
    for (double x : {-2.0, 0.0, 1.3}) EXPECT_NEAR(a.eval(x), x * x - 1.0, 1e-14);
}

TEST(AlphaField, MatchesGridForwardOperator) {
    // alpha = L* p / p with L* p = -(f p)' + (a p)''/2 by finite differences.
    const SdeModel dw = double_well(2.0);
    const NaturalParams t = th(0.4, -0.6);
    const SmoothField a = alpha_field(dw, gauss(), t);
    auto p = [&](double x) { return std::exp(log_density(gauss(), t, x)); };
    const double h = 1e-3;
    for (double x : {-1.0, 0.0, 0.8, 1.7}) {
        auto fp = [&](double y) { return dw.f.eval(y) * p(y); };
        auto ap = [&](double y) { return dw.a.eval(y) * p(y); };
        const double lstar = -(fp(x + h) - fp(x - h)) / (2 * h) + 0.5 * (ap(x + h) - 2 * ap(x) + ap(x - h)) / (h * h);
        EXPECT_NEAR(a.eval(x), lstar / p(x), 1e-5 * (1.0 + std::abs(a.eval(x))));
    }
}

TEST(AlphaField, PolynomialClosureDegree) {
    // f degree 3, a constant, c degree 2: ell' degree 1, so f ell' has degree 4.
    const SmoothField a = alpha_field(double_well(2.0), gauss(), th(0.0, -0.5));
    ASSERT_TRUE(a.is_polynomial());
    EXPECT_EQ(a.polynomial()->degree(), 4);
    EXPECT_LT(max_coeff_diff(*a.polynomial(), Polynomial{-2.0, 0.0, 5.0, 0.0, -1.0}), 1e-13);
}

TEST(AlphaField, CenteredOnRandomParameters) {
    std::mt19937_64 rng(17);
    const std::vector<SdeModel> models{ornstein_uhlenbeck(1.0, 2.0), double_well(2.0), heat(2.0),
                                       divergence_form(SmoothField(Polynomial{1.0, 0.0, 0.1}))};
    for (const SdeModel& m : models) {
        for (int i = 0; i < 10; ++i) {
            const auto t = ft::random_gaussian_theta(rng);
            EXPECT_NEAR(alpha_mean(m, gauss(), th(t[0], t[1])), 0.0, 1e-8) << m.name;
        }
    }
    const ExpFamily gen = monomial_family(3, BackgroundDensity::generalized(6));
    Vector t(3);
    t << 0.3, -0.2, 0.1;
    EXPECT_NEAR(alpha_mean(double_well(1.0), gen, {t}), 0.0, 1e-8);
}

TEST(OperatorDuality, GridIntegrationByParts) {
    const Grid1D grid{-10.0, 10.0, 4001};
    const GridDensity p = GridDensity::gaussian(grid, 0.3, 0.6);
    const SdeModel dw = double_well(2.0);
    const SmoothField phi(Polynomial{0.0, 1.0, 0.5, -0.2});
    const SmoothField lphi = backward_apply(dw, phi);
    // Forward operator on the grid by central differences.
    const int m = grid.m;
    const double h = grid.h();
    std::vector<double> fp(m), ap(m);
    for (int i = 0; i < m; ++i) {
        fp[static_cast<std::size_t>(i)] = dw.f.eval(grid.x(i)) * p.p[static_cast<std::size_t>(i)];
        ap[static_cast<std::size_t>(i)] = dw.a.eval(grid.x(i)) * p.p[static_cast<std::size_t>(i)];
    }
    double lhs = 0.0, rhs = 0.0;
    for (int i = 1; i + 1 < m; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double lstar = -(fp[k + 1] - fp[k - 1]) / (2 * h) + 0.5 * (ap[k + 1] - 2 * ap[k] + ap[k - 1]) / (h * h);
        lhs += phi.eval(grid.x(i)) * lstar * h;
        rhs += lphi.eval(grid.x(i)) * p.p[k] * h;
    }
    EXPECT_NEAR(lhs, rhs, 1e-5 * (1.0 + std::abs(rhs)));
}

TEST(CheckModel, RejectsNegativeDiffusionAndTimeDependence) {
    const std::vector<double> probes{-2.0, 0.0, 2.0};
    EXPECT_NO_THROW(check_model(double_well(2.0), probes));
    SdeModel neg{SmoothField(Polynomial{}), SmoothField(Polynomial{1.0, 0.0, -1.0}), false, "neg"};
    EXPECT_THROW(check_model(neg, probes), Error);
    SdeModel td = ornstein_uhlenbeck(1.0, 1.0);
    td.time_dependent = true;
    EXPECT_THROW(check_model(td, probes), Error);
}

TEST(DivergenceForm, DriftIsDerivativeAndDiffusionDoubled) {
    const SdeModel m = divergence_form(SmoothField(Polynomial{1.0, 0.0, 0.1}));
    EXPECT_NEAR(m.f.eval(2.0), 0.4, 1e-15);
    EXPECT_NEAR(m.a.eval(2.0), 2.8, 1e-15);
}
