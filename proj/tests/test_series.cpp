#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "logtensor/comb.hpp"
#include "logtensor/errors.hpp"
#include "logtensor/series.hpp"

using namespace logtensor;

namespace {

const VarId X = VarId::of("x");
const VarId Y = VarId::of("y");

Policy xpol(long lo = -6, long hi = 6) {
    return Policy().with(X, VarPolicy::window(Rational(lo), Rational(hi)));
}

Series xterm(const Rational& e, int logd, const Rational& c, Policy pol) {
    Monomial m = Monomial::power(X, e);
    m.set_log_deg(X, logd);
    return Series::term(m, Coef(c), std::move(pol));
}

Coef coeff_at(const Series& s, const Rational& xe, int xl, const Rational& ye = Rational(0)) {
    Monomial m = Monomial::power(X, xe);
    m.set_log_deg(X, xl);
    m.set_exp(Y, ye);
    return s.coeff(m);
}

// Deterministic small series generator used by the property checks.
Series random_series(std::mt19937& rng, const Policy& pol, int maxterms = 8) {
    std::uniform_int_distribution<int> nterms(1, maxterms);
    std::uniform_int_distribution<int> num(-8, 8);
    std::uniform_int_distribution<int> den(1, 6);
    std::uniform_int_distribution<int> logd(0, 3);
    std::uniform_int_distribution<int> expnum(-4, 4);
    Series s(pol);
    int n = nterms(rng);
    for (int t = 0; t < n; ++t) {
        Monomial m = Monomial::power(X, Rational(expnum(rng), den(rng)));
        m.set_log_deg(X, logd(rng));
        s.accum(m, Coef(Rational(num(rng), den(rng))));
    }
    return s;
}

} // namespace

TEST_CASE("ring operations") {
    Policy p = xpol();
    Series f = xterm(Rational(1, 2), 0, Rational(1), p) + xterm(Rational(1), 0, Rational(1), p);
    Series g = xterm(Rational(-1, 2), 0, Rational(1), p);
    Series fg = f * g;
    CHECK(fg.size() == 2);
    CHECK(coeff_at(fg, Rational(0), 0).scalar() == Scalar(Rational(1)));
    CHECK(coeff_at(fg, Rational(1, 2), 0).scalar() == Scalar(Rational(1)));

    CHECK((xterm(Rational(1, 2), 0, Rational(1), p) -
           xterm(Rational(1, 2), 0, Rational(1), p)).is_zero());

    Series lg = xterm(Rational(0), 1, Rational(1), p);
    Series lg2 = lg * lg;
    CHECK(lg2.size() == 1);
    CHECK(coeff_at(lg2, Rational(0), 2).scalar() == Scalar(Rational(1)));

    Policy q = xpol(-3, 3);
    CHECK_THROWS_AS(f + Series(q), IncompatiblePolicies);
}

TEST_CASE("window truncation in products") {
    Policy p = xpol(-2, 2);
    Series f = xterm(Rational(2), 0, Rational(1), p);
    Series g = xterm(Rational(1), 0, Rational(1), p);
    CHECK((f * g).is_zero());  // x^3 falls outside the window
}

TEST_CASE("log-degree cap is a loud failure") {
    Policy p = Policy().with(X, VarPolicy::window(Rational(-2), Rational(2), 3));
    Series l2 = xterm(Rational(0), 2, Rational(1), p);
    CHECK_THROWS_AS(l2 * l2, PolicyOverflow);
    CHECK_THROWS_AS(Series::term(Monomial::power(VarId::of("undeclared_var"), Rational(1)),
                                 Coef(Rational(1)), p),
                    PolicyOverflow);
}

TEST_CASE("derivative") {
    Policy p = xpol();
    // d/dx (x^{1/2} log x) = (1/2) x^{-1/2} log x + x^{-1/2}
    Series f = xterm(Rational(1, 2), 1, Rational(1), p);
    Series df = f.derive(X);
    CHECK(df.size() == 2);
    CHECK(coeff_at(df, Rational(-1, 2), 1).scalar() == Scalar(Rational(1, 2)));
    CHECK(coeff_at(df, Rational(-1, 2), 0).scalar() == Scalar(Rational(1)));

    // d/dx (log x)^2 = 2 x^{-1} log x
    Series l2 = xterm(Rational(0), 2, Rational(1), p);
    Series dl2 = l2.derive(X);
    CHECK(dl2.size() == 1);
    CHECK(coeff_at(dl2, Rational(-1), 1).scalar() == Scalar(Rational(2)));

    CHECK(Series::constant(Coef(Rational(5)), p).derive(X).is_zero());

    // Euler operator does not move exponents.
    Series e = f.x_ddx(X);
    CHECK(coeff_at(e, Rational(1, 2), 1).scalar() == Scalar(Rational(1, 2)));
    CHECK(coeff_at(e, Rational(1, 2), 0).scalar() == Scalar(Rational(1)));
}

TEST_CASE("derivative is a derivation (seeded property)") {
    std::mt19937 rng(20260815);
    Policy p = xpol(-20, 20);
    for (int trial = 0; trial < 25; ++trial) {
        Series f = random_series(rng, p);
        Series g = random_series(rng, p);
        Series lhs = (f * g).derive(X);
        Series rhs = f.derive(X) * g + f * g.derive(X);
        CAPTURE(trial);
        CHECK((lhs - rhs).is_zero());
    }
}

TEST_CASE("shift substitution") {
    Policy p = xpol();
    Series lg = xterm(Rational(0), 1, Rational(1), p);
    Series sh = lg.subst_shift(X, Y, 2);
    // log(x+y) = log x + y/x - y^2/(2x^2) + ...
    CHECK(sh.size() == 3);
    CHECK(coeff_at(sh, Rational(0), 1).scalar() == Scalar(Rational(1)));
    CHECK(coeff_at(sh, Rational(-1), 0, Rational(1)).scalar() == Scalar(Rational(1)));
    CHECK(coeff_at(sh, Rational(-2), 0, Rational(2)).scalar() == Scalar(Rational(-1, 2)));

    // (x+y)^2 is exact at order 2
    Series sq = xterm(Rational(2), 0, Rational(1), p).subst_shift(X, Y, 2);
    CHECK(sq.size() == 3);
    CHECK(coeff_at(sq, Rational(2), 0).scalar() == Scalar(Rational(1)));
    CHECK(coeff_at(sq, Rational(1), 0, Rational(1)).scalar() == Scalar(Rational(2)));
    CHECK(coeff_at(sq, Rational(0), 0, Rational(2)).scalar() == Scalar(Rational(1)));

    // (x+y)^{1/2} to first order
    Series rt = xterm(Rational(1, 2), 0, Rational(1), p).subst_shift(X, Y, 1);
    CHECK(rt.size() == 2);
    CHECK(coeff_at(rt, Rational(1, 2), 0).scalar() == Scalar(Rational(1)));
    CHECK(coeff_at(rt, Rational(-1, 2), 0, Rational(1)).scalar() == Scalar(Rational(1, 2)));

    // Terms whose shifted exponents leave the window are dropped, while the
    // ones inside survive: window [0,4] keeps the whole binomial of x^3.
    Policy narrow = xpol(0, 4);
    Series cube = xterm(Rational(3), 0, Rational(1), narrow).subst_shift(X, Y, 3);
    CHECK(coeff_at(cube, Rational(0), 0, Rational(3)).scalar() == Scalar(Rational(1)));
    CHECK(coeff_at(cube, Rational(1), 0, Rational(2)).scalar() == Scalar(Rational(3)));
}

TEST_CASE("dilation substitution") {
    Policy p = xpol();
    Series lg = xterm(Rational(0), 1, Rational(1), p);
    Series dl = lg.subst_dilate(X, Y, 5);
    CHECK(dl.size() == 2);  // log x + y, exactly
    CHECK(coeff_at(dl, Rational(0), 1).scalar() == Scalar(Rational(1)));
    CHECK(coeff_at(dl, Rational(0), 0, Rational(1)).scalar() == Scalar(Rational(1)));

    Series cube = xterm(Rational(3), 0, Rational(1), p).subst_dilate(X, Y, 2);
    CHECK(cube.size() == 3);
    CHECK(coeff_at(cube, Rational(3), 0).scalar() == Scalar(Rational(1)));
    CHECK(coeff_at(cube, Rational(3), 0, Rational(1)).scalar() == Scalar(Rational(3)));
    CHECK(coeff_at(cube, Rational(3), 0, Rational(2)).scalar() == Scalar(Rational(9, 2)));

    // x log x -> x log x + y (x log x + x) at order 1
    Series f = xterm(Rational(1), 1, Rational(1), p).subst_dilate(X, Y, 1);
    CHECK(f.size() == 3);
    CHECK(coeff_at(f, Rational(1), 1).scalar() == Scalar(Rational(1)));
    CHECK(coeff_at(f, Rational(1), 1, Rational(1)).scalar() == Scalar(Rational(1)));
    CHECK(coeff_at(f, Rational(1), 0, Rational(1)).scalar() == Scalar(Rational(1)));
}

TEST_CASE("scale substitution") {
    Policy p = xpol();
    Series lg = xterm(Rational(0), 1, Rational(1), p);
    Series sc = lg.subst_scale(X, Y);
    CHECK(sc.size() == 2);  // log x + log y
    Monomial ly = Monomial::log_power(Y, 1);
    CHECK(sc.coeff(ly).scalar() == Scalar(Rational(1)));
    CHECK(sc.coeff(Monomial::log_power(X, 1)).scalar() == Scalar(Rational(1)));

    Series rt = xterm(Rational(1, 2), 0, Rational(1), p).subst_scale(X, Y);
    Monomial m = Monomial::power(X, Rational(1, 2));
    m.set_exp(Y, Rational(1, 2));
    CHECK(rt.size() == 1);
    CHECK(rt.coeff(m).scalar() == Scalar(Rational(1)));

    // x log x -> xy (log x + log y)
    Series f = xterm(Rational(1), 1, Rational(1), p).subst_scale(X, Y);
    CHECK(f.size() == 2);
    Monomial m1 = Monomial::power(X, Rational(1));
    m1.set_exp(Y, Rational(1));
    m1.set_log_deg(X, 1);
    CHECK(f.coeff(m1).scalar() == Scalar(Rational(1)));
}

TEST_CASE("exponential differential operators match the substitutions") {
    Policy p = xpol();
    Series one = Series::constant(Coef(Rational(1)), p);
    Series xx = xterm(Rational(1), 0, Rational(1), p);

    Series lg = xterm(Rational(0), 1, Rational(1), p);
    Series viaop = exp_diff_op(lg, one, X, Y, 2);
    CHECK((viaop - lg.subst_shift(X, Y, 2)).is_zero());

    Series viadil = exp_diff_op(lg, xx, X, Y, 5);
    CHECK((viadil - lg.subst_dilate(X, Y, 5)).is_zero());

    // Mixed test series exercise both exponent and log handling.
    Series f = xterm(Rational(1, 2), 1, Rational(3), p) + xterm(Rational(-2), 2, Rational(1, 3), p);
    for (int order : {1, 3, 6, 8}) {
        CAPTURE(order);
        CHECK((exp_diff_op(f, one, X, Y, order) - f.subst_shift(X, Y, order)).is_zero());
        CHECK((exp_diff_op(f, xx, X, Y, order) - f.subst_dilate(X, Y, order)).is_zero());
    }
}

TEST_CASE("shift/dilate agree with operators on seeded random series") {
    std::mt19937 rng(727);
    Policy p = xpol(-10, 10);
    Series one = Series::constant(Coef(Rational(1)), p);
    Series xx = xterm(Rational(1), 0, Rational(1), p);
    for (int trial = 0; trial < 10; ++trial) {
        Series f = random_series(rng, p, 5);
        CAPTURE(trial);
        CHECK((exp_diff_op(f, one, X, Y, 4) - f.subst_shift(X, Y, 4)).is_zero());
        CHECK((exp_diff_op(f, xx, X, Y, 4) - f.subst_dilate(X, Y, 4)).is_zero());
    }
}

TEST_CASE("operator exponential is multiplicative") {
    std::mt19937 rng(11);
    Policy p = xpol(-10, 10);
    Series gen = xterm(Rational(1), 0, Rational(1), p);  // T = x d/dx
    for (int trial = 0; trial < 6; ++trial) {
        Series f = random_series(rng, p, 4);
        Series g = random_series(rng, p, 4);
        Series lhs = exp_diff_op(f * g, gen, X, Y, 5);
        Series rhs = exp_diff_op(f, gen, X, Y, 5) * exp_diff_op(g, gen, X, Y, 5);
        CAPTURE(trial);
        CHECK(Series::approx_equal(lhs, rhs, 0.0));
        CHECK((lhs - rhs).is_zero());
    }
}

TEST_CASE("formal log inverts the truncated exponential") {
    const int K = 6;
    VarId T = VarId::of("t");
    Policy p = Policy().with(T, VarPolicy::expansion(K));
    // E = e^t - 1 truncated at order K
    Series e1(p);
    for (int k = 1; k <= K; ++k) {
        e1.accum(Monomial::power(T, Rational(k)), Coef(Rational(1) / factorial(k)));
    }
    Series lg(p);
    Series pw = Series::constant(Coef(Rational(1)), p);
    for (int i = 1; i <= K; ++i) {
        pw = pw * e1;
        lg = lg + pw.scaled(Scalar(Rational((i % 2) ? 1 : -1, i)));
    }
    Series t = Series::term(Monomial::power(T, Rational(1)), Coef(Rational(1)), p);
    CHECK((lg - t).is_zero());
}

TEST_CASE("shift coefficients reproduce the composition sums") {
    Policy p = xpol(-10, 10);
    Series one = Series::constant(Coef(Rational(1)), p);
    for (long j = 1; j <= 3; ++j) {
        Series f = xterm(Rational(0), static_cast<int>(j), Rational(1), p);
        Series sh = exp_diff_op(f, one, X, Y, 8);
        for (long k = j; k <= 8; ++k) {
            Monomial m = Monomial::power(X, Rational(-k));
            m.set_exp(Y, Rational(k));
            Rational expect = rhs_compositions(k, j);
            if ((k - j) % 2 == 1) expect = -expect;
            CAPTURE(j);
            CAPTURE(k);
            CHECK(sh.coeff(m).scalar() == Scalar(expect));
        }
    }
}

TEST_CASE("binomial expansion oracles") {
    VarId X1 = VarId::of("x1");
    VarId X2 = VarId::of("x2");
    Policy p = Policy()
                   .with(X1, VarPolicy::window(Rational(-8), Rational(8)))
                   .with(X2, VarPolicy::expansion(8));

    // (x1 - x2)^{1/2}, powers of x2 up to 2
    Series r = binom_expand(ExpSlot::of_var(X1), ExpSlot::of_var_neg(X2), Rational(1, 2), 2, p);
    CHECK(r.size() == 3);
    Monomial m0 = Monomial::power(X1, Rational(1, 2));
    CHECK(r.coeff(m0).scalar() == Scalar(Rational(1)));
    Monomial m1 = Monomial::power(X1, Rational(-1, 2));
    m1.set_exp(X2, Rational(1));
    CHECK(r.coeff(m1).scalar() == Scalar(Rational(-1, 2)));
    Monomial m2 = Monomial::power(X1, Rational(-3, 2));
    m2.set_exp(X2, Rational(2));
    CHECK(r.coeff(m2).scalar() == Scalar(Rational(-1, 8)));

    // (x1 - x2)^{-1}: geometric prefix
    Series geo = binom_expand(ExpSlot::of_var(X1), ExpSlot::of_var_neg(X2), Rational(-1), 2, p);
    Monomial g0 = Monomial::power(X1, Rational(-1));
    CHECK(geo.coeff(g0).scalar() == Scalar(Rational(1)));
    Monomial g1 = Monomial::power(X1, Rational(-2));
    g1.set_exp(X2, Rational(1));
    CHECK(geo.coeff(g1).scalar() == Scalar(Rational(1)));
    Monomial g2 = Monomial::power(X1, Rational(-3));
    g2.set_exp(X2, Rational(2));
    CHECK(geo.coeff(g2).scalar() == Scalar(Rational(1)));
}

TEST_CASE("delta kernels") {
    VarId X0 = VarId::of("x0");
    Policy p = Policy().with(X0, VarPolicy::window(Rational(-2), Rational(2)));
    Series d = delta_plain(X0, p);
    CHECK(d.size() == 5);
    for (long n = -2; n <= 2; ++n) {
        CHECK(d.coeff(Monomial::power(X0, Rational(n))).scalar() == Scalar(Rational(1)));
    }
    CHECK(d.residue(X0).size() == 1);
    CHECK(d.residue(X0).coeff(Monomial()).scalar() == Scalar(Rational(1)));

    Policy tight = Policy().with(X0, VarPolicy::window(Rational(1, 3), Rational(2, 3)));
    CHECK_THROWS_AS(delta_plain(X0, tight), WindowEmpty);

    // x0^{-1} delta((x1 - x2)/x0): coefficient of x0^{-1} is the expansion of 1
    VarId X1 = VarId::of("x1");
    VarId X2 = VarId::of("x2");
    Policy pk = Policy()
                    .with(X0, VarPolicy::window(Rational(-3), Rational(3)))
                    .with(X1, VarPolicy::window(Rational(-8), Rational(8)))
                    .with(X2, VarPolicy::expansion(6));
    Series ker = delta_kernel(ExpSlot::of_var(X1), ExpSlot::of_var_neg(X2), X0, 6, pk);
    Series res = ker.residue(X0);
    CHECK(res.size() == 1);
    CHECK(res.coeff(Monomial()).scalar() == Scalar(Rational(1)));
}

TEST_CASE("residues") {
    Policy p = xpol();
    Policy py = Policy()
                    .with(X, VarPolicy::window(Rational(-6), Rational(6)))
                    .with(Y, VarPolicy::expansion(4));
    Monomial m = Monomial::power(X, Rational(-1));
    m.set_exp(Y, Rational(1));
    Series f = Series::term(m, Coef(Rational(3)), py) +
               Series::term(Monomial::power(X, Rational(2)), Coef(Rational(1)), py);
    Series r = f.residue(X);
    CHECK(r.size() == 1);
    CHECK(r.coeff(Monomial::power(Y, Rational(1))).scalar() == Scalar(Rational(3)));
    CHECK_FALSE(r.policy().declares(X));

    Series bad = xterm(Rational(-1), 1, Rational(1), p);
    CHECK_THROWS_AS(bad.residue(X), LogDegreePresent);
}

TEST_CASE("euler-operator annihilation") {
    Policy p = xpol();
    // x^{1/2} (3 + 5 log x): annihilated by (x d/dx - 1/2)^2, not by one power
    Series f = xterm(Rational(1, 2), 0, Rational(3), p) + xterm(Rational(1, 2), 1, Rational(5), p);
    OdeResult r = ode_membership(f, Rational(1, 2), 4, X);
    CHECK(r.member);
    CHECK(r.minimal_m == 2);

    OdeResult r1 = ode_membership(xterm(Rational(1, 2), 0, Rational(1), p), Rational(1, 2), 1, X);
    CHECK(r1.member);
    CHECK(r1.minimal_m == 1);

    OdeResult bad = ode_membership(xterm(Rational(1, 3), 0, Rational(1), p), Rational(1, 2), 3, X);
    CHECK_FALSE(bad.member);
    CHECK(bad.witness == Monomial::power(X, Rational(1, 3)));

    // membership is consistent with direct application of the operator
    Series g = f;
    for (int i = 0; i < r.minimal_m; ++i) g = g.x_ddx(X) - g.scaled(Scalar(Rational(1, 2)));
    CHECK(g.is_zero());

    CHECK(ode_membership(Series(p), Rational(1), 1, X).member);
}

TEST_CASE("multiplicative substitution") {
    // f(x (1 - yx)) with y nilpotent by expansion order
    Policy p = Policy()
                   .with(X, VarPolicy::window(Rational(-9), Rational(9)))
                   .with(Y, VarPolicy::expansion(3));
    Monomial yx = Monomial::power(Y, Rational(1));
    yx.set_exp(X, Rational(1));
    Series g = Series::term(yx, Coef(Rational(-1)), p);

    // x^{-1} (1-yx)^{-1} = x^{-1} + y + y^2 x + y^3 x^2
    Series f = Series::term(Monomial::power(X, Rational(-1)), Coef(Rational(1)), p);
    Series s = f.subst_multiply(X, g);
    CHECK(s.size() == 4);
    CHECK(s.coeff(Monomial::power(Y, Rational(1))).scalar() == Scalar(Rational(1)));
    Monomial y3x2 = Monomial::power(Y, Rational(3));
    y3x2.set_exp(X, Rational(2));
    CHECK(s.coeff(y3x2).scalar() == Scalar(Rational(1)));

    // log x -> log x + log(1-yx) = log x - yx - (yx)^2/2 - (yx)^3/3
    Series lg = Series::term(Monomial::log_power(X, 1), Coef(Rational(1)), p);
    Series sl = lg.subst_multiply(X, g);
    CHECK(sl.coeff(Monomial::log_power(X, 1)).scalar() == Scalar(Rational(1)));
    CHECK(sl.coeff(yx).scalar() == Scalar(Rational(-1)));
    Monomial y2x2 = Monomial::power(Y, Rational(2));
    y2x2.set_exp(X, Rational(2));
    CHECK(sl.coeff(y2x2).scalar() == Scalar(Rational(-1, 2)));

    // a perturbation with no expansion degree is refused
    Series bad = Series::term(Monomial::power(X, Rational(1)), Coef(Rational(1)), p);
    CHECK_THROWS_AS(f.subst_multiply(X, bad), PolicyOverflow);
}

TEST_CASE("coefficient slices and support") {
    Policy p = xpol();
    Series f = xterm(Rational(1, 2), 2, Rational(7), p) + xterm(Rational(-1), 0, Rational(2), p);
    Series sl = f.coefficient_slice(X, Rational(1, 2), 2);
    CHECK(sl.size() == 1);
    CHECK(sl.coeff(Monomial()).scalar() == Scalar(Rational(7)));
    CHECK(f.max_log_deg(X) == 2);
    auto es = f.exponents(X);
    REQUIRE(es.size() == 2);
    CHECK(es[0] == Rational(-1));
    CHECK(es[1] == Rational(1, 2));
}
