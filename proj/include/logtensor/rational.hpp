#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <string>

#include "logtensor/errors.hpp"

namespace logtensor {

// Exact arbitrary-precision rational.  Thin value wrapper around GMP's
// mpq_class: always canonicalized, totally ordered, hashable via string form.
class Rational {
  public:
    Rational() : v_(0) {}
    Rational(long n) : v_(n) {}
    Rational(int n) : v_(n) {}
    Rational(long num, long den);
    explicit Rational(const mpq_class& v) : v_(v) { v_.canonicalize(); }

    // Parses "p", "-p/q" or "p/q"; throws ParseError on anything else.
    static Rational parse(const std::string& text);

    std::string str() const;
    double to_double() const { return v_.get_d(); }

    bool is_zero() const { return sgn(v_) == 0; }
    bool is_integer() const { return v_.get_den() == 1; }
    // Valid only when is_integer() and the value fits a long.
    long to_long() const;
    long num_long() const;
    long den_long() const;

    int sign() const { return sgn(v_); }
    Rational abs() const { return Rational(mpq_class(::abs(v_))); }

    Rational operator-() const { return Rational(mpq_class(-v_)); }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
    Rational& operator/=(const Rational& o);

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r);

  private:
    mpq_class v_;
};

// n-th power with integer exponent (e >= 0, or e < 0 with nonzero base).
Rational pow(const Rational& base, long e);

// Generalized binomial coefficient binom(n, k) for rational n, integer k >= 0.
Rational binomial(const Rational& n, long k);

Rational factorial(long n);

// Largest integer <= q and smallest integer >= q.
long floor_long(const Rational& q);
long ceil_long(const Rational& q);

// Fractional part in [0,1): q - floor(q).  Used for exponent cosets mod 1.
Rational frac_mod1(const Rational& q);

} // namespace logtensor
