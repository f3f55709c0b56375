#pragma once

#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace fpeproj {

/// Real polynomial in one variable, stored by ascending power.
///
/// Trailing zero coefficients are trimmed so that degree() is exact; the
/// zero polynomial has an empty coefficient vector and degree -1.
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> coeffs);
    explicit Polynomial(std::vector<double> coeffs);

    static Polynomial constant(double value);
    static Polynomial monomial(int power, double scale = 1.0);

    int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const noexcept { return coeffs_.empty(); }
    double coeff(int power) const noexcept;
    const std::vector<double>& coeffs() const noexcept { return coeffs_; }

    double operator()(double x) const noexcept;
    Polynomial derivative() const;

    Polynomial& operator+=(const Polynomial& other);
    Polynomial& operator-=(const Polynomial& other);
    Polynomial& operator*=(double s);

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
    friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(Polynomial a) { return a *= -1.0; }

    /// Largest absolute coefficient difference; used for exact-identity checks.
    friend double max_coeff_diff(const Polynomial& a, const Polynomial& b);

    std::string to_string() const;

private:
    void trim();
    std::vector<double> coeffs_;
};

/// Probabilists' Hermite polynomial He_k.
Polynomial hermite(int k);

/// Scalar field with its first two derivatives.
///
/// Either backed by a Polynomial (exact derivatives, closed under the ring
/// operations) or by three user callables for value, first and second
/// derivative. Arithmetic between two polynomial fields stays polynomial.
class SmoothField {
public:
    using Fn = std::function<double(double)>;

    SmoothField() : SmoothField(Polynomial{}) {}
    SmoothField(Polynomial p);  // NOLINT: implicit by intent
    SmoothField(Fn value, Fn d1, Fn d2);

    static SmoothField constant(double value) { return SmoothField(Polynomial::constant(value)); }
    /// Generic field whose derivatives come from central differences of `value`.
    static SmoothField from_value(Fn value);

    double eval(double x) const;
    double d1(double x) const;
    double d2(double x) const;
    double operator()(double x) const { return eval(x); }

    bool is_polynomial() const noexcept { return poly_.has_value(); }
    const std::optional<Polynomial>& polynomial() const noexcept { return poly_; }

    /// Field for the first derivative. For generic fields the third derivative
    /// is a central difference of d2.
    SmoothField derivative() const;

    friend SmoothField operator+(const SmoothField& a, const SmoothField& b);
    friend SmoothField operator-(const SmoothField& a, const SmoothField& b);
    friend SmoothField operator*(const SmoothField& a, const SmoothField& b);
    friend SmoothField operator*(double s, const SmoothField& a);

private:
    std::optional<Polynomial> poly_;
    Polynomial dpoly_;
    Polynomial d2poly_;
    Fn value_;
    Fn d1_;
    Fn d2_;
};

/// Worst relative mismatch between analytic derivatives and central
/// differences at the given probe points (d1 vs eval, d2 vs d1).
double derivative_consistency(const SmoothField& field, const std::vector<double>& probes,
                              double step = 1e-4);

}  // namespace fpeproj
