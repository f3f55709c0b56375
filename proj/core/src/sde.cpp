#include "fpeproj/sde.hpp"

#include <algorithm>
#include <cmath>

#include "fpeproj/errors.hpp"

namespace fpeproj {

namespace {

void reject_time_dependent(const SdeModel& model) {
    if (model.time_dependent)
        fail(ErrorKind::InvalidArgument, "time-dependent model '" + model.name + "' is not supported");
}

}  // namespace

SdeModel ornstein_uhlenbeck(double k, double sigma2) {
    return {Polynomial{0.0, -k}, Polynomial::constant(sigma2), false, "ou"};
}

SdeModel heat(double a) { return {Polynomial{}, Polynomial::constant(a), false, "heat"}; }

SdeModel double_well(double a) { return {Polynomial{0.0, 1.0, 0.0, -1.0}, Polynomial::constant(a), false, "double-well"}; }

SdeModel divergence_form(const SmoothField& a) { return {a.derivative(), 2.0 * a, false, "divergence-form"}; }

void check_model(const SdeModel& model, const std::vector<double>& probes) {
    reject_time_dependent(model);
    for (double x : probes)
        if (model.a.eval(x) < 0.0)
            fail(ErrorKind::InvalidArgument, "squared diffusion is negative at x = " + std::to_string(x));
    if (derivative_consistency(model.f, probes) > 1e-6)
        fail(ErrorKind::InvalidArgument, "drift derivatives disagree with finite differences");
    if (derivative_consistency(model.a, probes) > 1e-6)
        fail(ErrorKind::InvalidArgument, "diffusion derivatives disagree with finite differences");
}

SmoothField backward_apply(const SdeModel& model, const SmoothField& phi, double /*t*/) {
    reject_time_dependent(model);
    if (model.polynomial() && phi.is_polynomial()) {
        const Polynomial& p = *phi.polynomial();
        return SmoothField(*model.f.polynomial() * p.derivative() + 0.5 * (*model.a.polynomial() * p.derivative().derivative()));
    }
    // Generic fields: L phi needs phi''' and f', a' for its own derivatives.
    const SmoothField dphi = phi.derivative();
    const SmoothField d2phi = dphi.derivative();
    return model.f * dphi + 0.5 * (model.a * d2phi);
}

SmoothField alpha_field(const SdeModel& model, const ExpFamily& fam, const NaturalParams& theta, double /*t*/) {
    reject_time_dependent(model);
    const SmoothField ell = fam.exponent(theta);
    if (model.polynomial() && ell.is_polynomial()) {
        const Polynomial& l = *ell.polynomial();
        const Polynomial& f = *model.f.polynomial();
        const Polynomial& a = *model.a.polynomial();
        const Polynomial dl = l.derivative();
        const Polynomial d2l = dl.derivative();
        return SmoothField(-(f * dl + f.derivative()) +
                           0.5 * (a * d2l + a * dl * dl + 2.0 * (a.derivative() * dl) + a.derivative().derivative()));
    }
    const SdeModel m = model;
    return SmoothField::from_value([m, ell](double x) {
        const double dl = ell.d1(x);
        return -(m.f.eval(x) * dl + m.f.d1(x)) +
               0.5 * (m.a.eval(x) * ell.d2(x) + m.a.eval(x) * dl * dl + 2.0 * m.a.d1(x) * dl + m.a.d2(x));
    });
}

double alpha_mean(const SdeModel& model, const ExpFamily& fam, const NaturalParams& theta, double t) {
    const SmoothField alpha = alpha_field(model, fam, theta, t);
    const DensityNodes nodes = density_nodes(fam, theta);
    return expect(nodes, [&alpha](double x) { return alpha.eval(x); }, fam.quad());
}

}  // namespace fpeproj
