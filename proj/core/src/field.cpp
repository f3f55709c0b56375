#include "fpeproj/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fpeproj/errors.hpp"

namespace fpeproj {

Polynomial::Polynomial(std::initializer_list<double> coeffs) : coeffs_(coeffs) { trim(); }

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

Polynomial Polynomial::constant(double value) { return Polynomial(std::vector<double>{value}); }

Polynomial Polynomial::monomial(int power, double scale) {
    if (power < 0) fail(ErrorKind::InvalidArgument, "negative monomial power");
    std::vector<double> c(static_cast<std::size_t>(power) + 1, 0.0);
    c.back() = scale;
    return Polynomial(std::move(c));
}

void Polynomial::trim() {
    while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

double Polynomial::coeff(int power) const noexcept {
    if (power < 0 || power >= static_cast<int>(coeffs_.size())) return 0.0;
    return coeffs_[static_cast<std::size_t>(power)];
}

double Polynomial::operator()(double x) const noexcept {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() <= 1) return {};
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
    return Polynomial(std::move(d));
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
    if (other.coeffs_.size() > coeffs_.size()) coeffs_.resize(other.coeffs_.size(), 0.0);
    for (std::size_t k = 0; k < other.coeffs_.size(); ++k) coeffs_[k] += other.coeffs_[k];
    trim();
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
    if (other.coeffs_.size() > coeffs_.size()) coeffs_.resize(other.coeffs_.size(), 0.0);
    for (std::size_t k = 0; k < other.coeffs_.size(); ++k) coeffs_[k] -= other.coeffs_[k];
    trim();
    return *this;
}

Polynomial& Polynomial::operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    trim();
    return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<double> out(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Polynomial(std::move(out));
}

double max_coeff_diff(const Polynomial& a, const Polynomial& b) {
    const std::size_t n = std::max(a.coeffs_.size(), b.coeffs_.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        worst = std::max(worst, std::abs(a.coeff(static_cast<int>(k)) - b.coeff(static_cast<int>(k))));
    return worst;
}

std::string Polynomial::to_string() const {
    if (coeffs_.empty()) return "0";
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
        if (coeffs_[k] == 0.0) continue;
        if (!first) os << " + ";
        os << coeffs_[k];
        if (k >= 1) os << "*x";
        if (k >= 2) os << "^" << k;
        first = false;
    }
    return os.str();
}

Polynomial hermite(int k) {
    if (k < 0) fail(ErrorKind::InvalidArgument, "negative Hermite index");
    // He_{k+1} = x He_k - k He_{k-1}
    Polynomial prev = Polynomial::constant(1.0);
    if (k == 0) return prev;
    Polynomial cur{0.0, 1.0};
    const Polynomial x{0.0, 1.0};
    for (int j = 1; j < k; ++j) {
        Polynomial next = x * cur - static_cast<double>(j) * prev;
        prev = std::move(cur);
        cur = std::move(next);
    }
    return cur;
}

SmoothField::SmoothField(Polynomial p)
    : poly_(std::move(p)), dpoly_(poly_->derivative()), d2poly_(dpoly_.derivative()) {}

SmoothField::SmoothField(Fn value, Fn d1, Fn d2)
    : value_(std::move(value)), d1_(std::move(d1)), d2_(std::move(d2)) {
    if (!value_ || !d1_ || !d2_) fail(ErrorKind::InvalidArgument, "SmoothField needs all three callables");
}

double SmoothField::eval(double x) const { return poly_ ? (*poly_)(x) : value_(x); }
double SmoothField::d1(double x) const { return poly_ ? dpoly_(x) : d1_(x); }
double SmoothField::d2(double x) const { return poly_ ? d2poly_(x) : d2_(x); }

namespace {

double fd_step(double x) { return 1e-4 * std::max(1.0, std::abs(x)); }

}  // namespace

SmoothField SmoothField::from_value(Fn value) {
    if (!value) fail(ErrorKind::InvalidArgument, "SmoothField needs a value callable");
    auto d1 = [value](double x) {
        const double h = fd_step(x);
        return (value(x + h) - value(x - h)) / (2.0 * h);
    };
    auto d2 = [value](double x) {
        const double h = fd_step(x);
        return (value(x + h) - 2.0 * value(x) + value(x - h)) / (h * h);
    };
    return SmoothField(value, d1, d2);
}

SmoothField SmoothField::derivative() const {
    if (poly_) return SmoothField(dpoly_);
    auto d3 = [d2 = d2_](double x) {
        const double h = fd_step(x);
        return (d2(x + h) - d2(x - h)) / (2.0 * h);
    };
    return SmoothField(d1_, d2_, d3);
}

SmoothField operator+(const SmoothField& a, const SmoothField& b) {
    if (a.poly_ && b.poly_) return SmoothField(*a.poly_ + *b.poly_);
    return SmoothField([a, b](double x) { return a.eval(x) + b.eval(x); },
                       [a, b](double x) { return a.d1(x) + b.d1(x); },
                       [a, b](double x) { return a.d2(x) + b.d2(x); });
}

SmoothField operator-(const SmoothField& a, const SmoothField& b) { return a + (-1.0) * b; }

SmoothField operator*(const SmoothField& a, const SmoothField& b) {
    if (a.poly_ && b.poly_) return SmoothField(*a.poly_ * *b.poly_);
    return SmoothField([a, b](double x) { return a.eval(x) * b.eval(x); },
                       [a, b](double x) { return a.d1(x) * b.eval(x) + a.eval(x) * b.d1(x); },
                       [a, b](double x) {
                           return a.d2(x) * b.eval(x) + 2.0 * a.d1(x) * b.d1(x) + a.eval(x) * b.d2(x);
                       });
}

SmoothField operator*(double s, const SmoothField& a) {
    if (a.poly_) return SmoothField(*a.poly_ * s);
    return SmoothField([a, s](double x) { return s * a.eval(x); }, [a, s](double x) { return s * a.d1(x); },
                       [a, s](double x) { return s * a.d2(x); });
}

double derivative_consistency(const SmoothField& field, const std::vector<double>& probes, double step) {
    double worst = 0.0;
    for (double x : probes) {
        const double fd1 = (field.eval(x + step) - field.eval(x - step)) / (2.0 * step);
        const double fd2 = (field.d1(x + step) - field.d1(x - step)) / (2.0 * step);
        const double e1 = std::abs(fd1 - field.d1(x)) / std::max(1.0, std::abs(field.d1(x)));
        const double e2 = std::abs(fd2 - field.d2(x)) / std::max(1.0, std::abs(field.d2(x)));
        worst = std::max({worst, e1, e2});
    }
    return worst;
}

}  // namespace fpeproj
