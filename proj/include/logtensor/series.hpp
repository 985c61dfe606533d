#pragma once

#include <functional>
#include <optional>
#include <variant>

#include "logtensor/linalg.hpp"
#include "logtensor/policy.hpp"

namespace logtensor {

// Series coefficient: a scalar or a module vector.  Vectors form a module
// over scalars; two vectors can be added but never multiplied.
class Coef {
  public:
    Coef() : v_(Scalar()) {}
    Coef(Scalar s) : v_(std::move(s)) {}
    Coef(const Rational& r) : v_(Scalar(r)) {}
    Coef(Vec v) : v_(std::move(v)) {}

    bool is_scalar() const { return std::holds_alternative<Scalar>(v_); }
    bool is_vector() const { return std::holds_alternative<Vec>(v_); }
    const Scalar& scalar() const;
    const Vec& vec() const;

    bool is_zero() const;
    Coef operator-() const;
    Coef& operator+=(const Coef& o);
    friend Coef operator+(Coef a, const Coef& b) { return a += b; }
    friend Coef operator*(const Coef& a, const Coef& b);
    Coef scaled(const Scalar& s) const;

    friend bool operator==(const Coef& a, const Coef& b) { return a.v_ == b.v_; }
    static bool approx_equal(const Coef& a, const Coef& b, double tol);
    double max_abs() const;

    std::string str() const;

  private:
    std::variant<Scalar, Vec> v_;
};

// Sparse formal series in finitely many variables and their log companions,
// with an explicit truncation policy.  All operations are pure.
class Series {
  public:
    Series() = default;
    explicit Series(Policy pol) : pol_(std::move(pol)) {}

    static Series constant(const Coef& c, Policy pol);
    static Series term(const Monomial& m, const Coef& c, Policy pol);  // strict

    const Policy& policy() const { return pol_; }
    const std::map<Monomial, Coef>& terms() const { return t_; }
    bool is_zero() const { return t_.empty(); }
    std::size_t size() const { return t_.size(); }
    Coef coeff(const Monomial& m) const;

    // Accumulate a term, silently discarding monomials the policy truncates
    // away (structural violations still throw via Policy::admits).
    void accum(const Monomial& m, const Coef& c);
    // Strict insert: refuses monomials the policy does not admit.
    void set_term(const Monomial& m, const Coef& c);

    Series operator-() const;
    friend Series operator+(const Series& a, const Series& b);
    friend Series operator-(const Series& a, const Series& b);
    friend Series operator*(const Series& a, const Series& b);  // Cauchy product
    Series scaled(const Scalar& s) const;

    // d/dx; the stored coefficient of x^n (log x)^m in the result is
    // (n+1) w_{n+1,m} + (m+1) w_{n+1,m+1}.
    Series derive(VarId x) const;
    // Euler operator x d/dx (window-neutral, exponents do not shift).
    Series x_ddx(VarId x) const;

    // f(x+y): every x^n (log x)^m becomes x^n (1+y/x)^n (log x + L(y/x))^m
    // with L the formal logarithm of 1+u, truncated to total y-order <= order.
    Series subst_shift(VarId x, VarId y, int order) const;
    // f(x e^y): x^n e^{ny} (log x + y)^m, truncated to y-order <= order.
    Series subst_dilate(VarId x, VarId y, int order) const;
    // f(xy): x^n y^n (log x + log y)^m, exact.
    Series subst_scale(VarId x, VarId y) const;
    // f(x*(1+g)) for a series g every power chain of which terminates under
    // the ambient policy; used for rational-argument conjugations.
    Series subst_multiply(VarId x, const Series& g) const;

    // Coefficient of x^{-1}; x must be log-free in this series.
    Series residue(VarId x) const;
    // Coefficient of x^e (log x)^d as a series without x.
    Series coefficient_slice(VarId x, const Rational& e, int d) const;
    // Largest log degree in x among stored terms (0 if none).
    int max_log_deg(VarId x) const;
    // Exponent support in x (sorted, distinct).
    std::vector<Rational> exponents(VarId x) const;

    // Explicit layer promotion: every exact coefficient becomes complex.
    Series promoted_complex() const;
    Series mapped(const std::function<Coef(const Monomial&, const Coef&)>& fn) const;
    // Re-filter terms under a (typically narrower) policy.
    Series restricted(const Policy& pol) const;

    static bool approx_equal(const Series& a, const Series& b, double tol);
    std::string str() const;

  private:
    Policy pol_;
    std::map<Monomial, Coef> t_;
};

// Sum_{j<=order} (y^j / j!) T^j f with T = p(x) d/dx.  p must be a finite
// log-free Laurent polynomial in x alone.
Series exp_diff_op(const Series& f, const Series& p, VarId x, VarId y, int order);

// One multiplicative occurrence inside a binomial or delta kernel:
// coeff * var^var_exp, or a plain scalar when var is absent.
struct ExpSlot {
    std::optional<VarId> var;
    Rational var_exp{1};
    Scalar coeff{Rational(1)};

    static ExpSlot of_var(VarId x) { return {x, Rational(1), Scalar(Rational(1))}; }
    static ExpSlot of_var_pow(VarId x, const Rational& e) { return {x, e, Scalar(Rational(1))}; }
    static ExpSlot of_var_neg(VarId x) { return {x, Rational(1), Scalar(Rational(-1))}; }
    static ExpSlot of_const(const Scalar& s) { return {std::nullopt, Rational(1), s}; }
    ExpSlot negated() const { return {var, var_exp, -coeff}; }
};

// (a + b)^r expanded in nonnegative integral powers of the b slot, keeping
// b-powers i <= order, truncated to the policy.
Series binom_expand(const ExpSlot& a, const ExpSlot& b, const Rational& r, int order, Policy pol);

// w^{-1} delta((a+b)/w) = sum_h w^{-h-1} (a+b)^h with (a+b)^h expanded in
// nonnegative powers of b; the h range is cut by w's window, b-powers by
// `order` and the policy.
Series delta_kernel(const ExpSlot& a, const ExpSlot& b, VarId w, int order, Policy pol);

// Plain delta(x) truncated to the window of x.
Series delta_plain(VarId x, Policy pol);

struct OdeResult {
    bool member = false;
    int minimal_m = 0;    // valid when member
    Monomial witness;     // first surviving monomial when not member
};

// Does (x d/dx - a)^m annihilate f?  Returns the minimal such power (and
// certifies the lemma's nonzero top log coefficient) or a witness monomial.
OdeResult ode_membership(const Series& f, const Rational& a, int m, VarId x);

} // namespace logtensor
