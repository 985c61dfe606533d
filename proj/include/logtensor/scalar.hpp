#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "logtensor/rational.hpp"

namespace logtensor {

using Cpx = std::complex<double>;

// Element of Q(i).
struct GaussRat {
    Rational re, im;

    GaussRat() = default;
    GaussRat(Rational r) : re(std::move(r)) {}
    GaussRat(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

    bool is_zero() const { return re.is_zero() && im.is_zero(); }
    bool is_rational() const { return im.is_zero(); }

    GaussRat operator-() const { return {-re, -im}; }
    friend GaussRat operator+(const GaussRat& a, const GaussRat& b) { return {a.re + b.re, a.im + b.im}; }
    friend GaussRat operator-(const GaussRat& a, const GaussRat& b) { return {a.re - b.re, a.im - b.im}; }
    friend GaussRat operator*(const GaussRat& a, const GaussRat& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    GaussRat inverse() const;
    friend bool operator==(const GaussRat& a, const GaussRat& b) { return a.re == b.re && a.im == b.im; }
    Cpx to_cpx() const { return {re.to_double(), im.to_double()}; }
    std::string str() const;
};

// Coefficient scalar with two layers:
//   exact   -- polynomial in the formal constant zeta := i*pi with Q(i)
//              coefficients (zeta is transcendental, so no reduction is ever
//              needed and equality is structural);
//   complex -- one double-precision complex number, used once data leaves the
//              exact world (irrational branch logs, non-half-integer phases).
// The layers never mix implicitly: arithmetic across layers throws
// MixedScalarLayers, and to_cpx() is the explicit bridge.
class Scalar {
  public:
    Scalar() : exact_(true) {}
    Scalar(const Rational& r) : exact_(true) { if (!r.is_zero()) c_ = {GaussRat(r)}; }
    Scalar(long n) : Scalar(Rational(n)) {}
    Scalar(int n) : Scalar(Rational(n)) {}
    explicit Scalar(const GaussRat& g) : exact_(true) { if (!g.is_zero()) c_ = {g}; }
    static Scalar complex(Cpx z) { Scalar s; s.exact_ = false; s.z_ = z; return s; }
    // The formal constant zeta = i*pi.
    static Scalar zeta() { Scalar s; s.c_ = {GaussRat(Rational(0)), GaussRat(Rational(1))}; return s; }
    static Scalar i_unit() { return Scalar(GaussRat(Rational(0), Rational(1))); }

    bool is_exact() const { return exact_; }
    bool is_zero() const { return exact_ ? c_.empty() : z_ == Cpx(0.0, 0.0); }
    bool is_rational() const {
        return exact_ && (c_.empty() || (c_.size() == 1 && c_[0].is_rational()));
    }
    // Requires is_rational().
    Rational rat() const;
    int zeta_degree() const { return exact_ ? static_cast<int>(c_.size()) - 1 : -1; }
    // Coefficient of zeta^j in the exact layer (zero when out of range).
    const GaussRat& zeta_coef(int j) const;
    // Raw complex-layer value; requires !is_exact().
    Cpx cpx_value() const;

    Cpx to_cpx() const;                  // explicit promotion (evaluates zeta = i*pi)
    double abs() const { return std::abs(to_cpx()); }

    Scalar operator-() const;
    Scalar& operator+=(const Scalar& o);
    Scalar& operator-=(const Scalar& o) { return *this += -o; }
    Scalar& operator*=(const Scalar& o);
    friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
    friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
    friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }

    // Division by an invertible *constant* scalar (zeta-degree 0 in the exact
    // layer); anything else is a domain error.
    Scalar& operator/=(const Scalar& o);
    friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }

    // Structural equality (exact layer) / bitwise (complex layer).
    friend bool operator==(const Scalar& a, const Scalar& b);
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

    // |a-b| <= tol * max(1, |b|) after promoting both to the complex layer.
    static bool approx_equal(const Scalar& a, const Scalar& b, double tol);

    std::string str() const;

  private:
    void trim();
    bool exact_ = true;
    std::vector<GaussRat> c_;  // exact: coefficient of zeta^j at index j; empty = 0
    Cpx z_{0.0, 0.0};          // complex layer value
};

// exp(i*pi*n) for rational n when it lands in Q(i), i.e. n a multiple of 1/2.
std::optional<GaussRat> gauss_exp_i_pi(const Rational& n);

// exp(i*pi*n) in whichever layer can represent it exactly, else complex.
Scalar phase_exp_i_pi(const Rational& n);

// z^e for rational z and integer-or-rational exponent: exact when e is an
// integer (or z == 0/1), complex double otherwise.
Scalar scalar_pow(const Rational& z, const Rational& e);

// Layer-promoting arithmetic: exact when both operands are exact, otherwise
// both sides are demoted to complex doubles.  Unlike operator*/operator+,
// these never throw MixedScalarLayers; use them where a computation is
// allowed to leave the exact layer (numeric branch points, complex z).
Scalar mul_mixed(const Scalar& a, const Scalar& b);
Scalar add_mixed(const Scalar& a, const Scalar& b);

} // namespace logtensor
