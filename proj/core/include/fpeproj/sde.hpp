#pragma once

#include <string>

#include "fpeproj/expfam.hpp"
#include "fpeproj/field.hpp"

namespace fpeproj {

/// Scalar Ito diffusion dX = f(X) dt + sqrt(a(X)) dW.
///
/// `a` is the squared diffusion coefficient. Only autonomous models are
/// evaluated; `time_dependent` marks models that callers must reject.
struct SdeModel {
    SmoothField f;
    SmoothField a;
    bool time_dependent = false;
    std::string name;

    bool polynomial() const noexcept { return f.is_polynomial() && a.is_polynomial(); }
};

/// f = -k x, a = sigma2.
SdeModel ornstein_uhlenbeck(double k, double sigma2);
/// f = 0, a = constant.
SdeModel heat(double a);
/// f = x - x^3, a = constant.
SdeModel double_well(double a);
/// Divergence-form diffusion d/dx(a dp/dx): drift a'(x), squared diffusion 2 a(x).
SdeModel divergence_form(const SmoothField& a);

/// Rejects time-dependent models and checks a(x) >= 0 and derivative
/// consistency on the probe points. Throws InvalidArgument.
void check_model(const SdeModel& model, const std::vector<double>& probes);

/// Backward generator L phi = f phi' + a phi'' / 2.
SmoothField backward_apply(const SdeModel& model, const SmoothField& phi, double t = 0.0);

/// Score-space Fokker-Planck field alpha = L* p / p for p = p(.; theta).
SmoothField alpha_field(const SdeModel& model, const ExpFamily& fam, const NaturalParams& theta, double t = 0.0);

/// E_theta[alpha]; zero up to quadrature error for any feasible theta.
double alpha_mean(const SdeModel& model, const ExpFamily& fam, const NaturalParams& theta, double t = 0.0);

}  // namespace fpeproj
