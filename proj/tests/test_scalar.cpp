#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "logtensor/errors.hpp"
#include "logtensor/scalar.hpp"

using namespace logtensor;

TEST_CASE("gaussian rationals") {
    GaussRat i(Rational(0), Rational(1));
    CHECK(i * i == GaussRat(Rational(-1)));
    GaussRat z(Rational(3), Rational(4));
    GaussRat w = z * z.inverse();
    CHECK(w == GaussRat(Rational(1)));
    CHECK(GaussRat(Rational(2), Rational(-1)).str() == "2-1i");
}

TEST_CASE("exact layer arithmetic") {
    Scalar one(Rational(1));
    Scalar i = Scalar::i_unit();
    CHECK(i * i == Scalar(Rational(-1)));
    CHECK((one + i) * (one - i) == Scalar(Rational(2)));

    Scalar z = Scalar::zeta();
    Scalar p = (one + z) * (one - z);  // 1 - zeta^2
    CHECK(p.zeta_degree() == 2);
    CHECK(p.zeta_coef(0) == GaussRat(Rational(1)));
    CHECK(p.zeta_coef(1) == GaussRat(Rational(0)));
    CHECK(p.zeta_coef(2) == GaussRat(Rational(-1)));
    CHECK(p != Scalar(Rational(1)));

    // zeta evaluates to i*pi.
    const double pi = std::acos(-1.0);
    CHECK(std::abs(z.to_cpx() - Cpx(0.0, pi)) < 1e-15);
    CHECK(std::abs(p.to_cpx() - Cpx(1.0 + pi * pi, 0.0)) < 1e-12);
}

TEST_CASE("division by invertible constants") {
    Scalar a(Rational(3, 4));
    CHECK(a / Scalar(Rational(1, 2)) == Scalar(Rational(3, 2)));
    Scalar i = Scalar::i_unit();
    CHECK(a / i == a * Scalar(GaussRat(Rational(0), Rational(-1))));
    CHECK_THROWS_AS(a / Scalar::zeta(), CalcError);
    CHECK_THROWS_AS(a / Scalar(Rational(0)), CalcError);
}

TEST_CASE("layers never mix implicitly") {
    Scalar e(Rational(2));
    Scalar c = Scalar::complex(Cpx(2.0, 0.0));
    CHECK_THROWS_AS(e + c, MixedScalarLayers);
    CHECK_THROWS_AS(e * c, MixedScalarLayers);
    // ... except across a zero, which carries no layer information.
    CHECK((Scalar(Rational(0)) + c) == c);
    CHECK((c + Scalar(Rational(0))) == c);
    CHECK((Scalar(Rational(0)) * c).is_zero());
    CHECK(Scalar::complex(Cpx(0.0, 0.0)).is_zero());
}

TEST_CASE("approximate comparison promotes explicitly") {
    Scalar e(Rational(1));
    CHECK(Scalar::approx_equal(e, Scalar(Rational(1)), 0.0));
    CHECK_FALSE(Scalar::approx_equal(e, Scalar(Rational(2)), 10.0));  // exact stays exact
    CHECK(Scalar::approx_equal(Scalar::complex(Cpx(1.0 + 1e-12, 0.0)), e, 1e-10));
    CHECK_FALSE(Scalar::approx_equal(Scalar::complex(Cpx(1.1, 0.0)), e, 1e-10));
}

TEST_CASE("half-integer phases stay exact") {
    CHECK(phase_exp_i_pi(Rational(0)) == Scalar(Rational(1)));
    CHECK(phase_exp_i_pi(Rational(1)) == Scalar(Rational(-1)));
    CHECK(phase_exp_i_pi(Rational(1, 2)) == Scalar::i_unit());
    CHECK(phase_exp_i_pi(Rational(3, 2)) == -Scalar::i_unit());
    CHECK(phase_exp_i_pi(Rational(2)) == Scalar(Rational(1)));
    CHECK(phase_exp_i_pi(Rational(-1, 2)) == -Scalar::i_unit());

    Scalar third = phase_exp_i_pi(Rational(1, 3));
    CHECK_FALSE(third.is_exact());
    const double pi = std::acos(-1.0);
    CHECK(std::abs(third.to_cpx() - std::exp(Cpx(0.0, pi / 3.0))) < 1e-15);
}

TEST_CASE("rational powers") {
    CHECK(scalar_pow(Rational(2), Rational(3)) == Scalar(Rational(8)));
    CHECK(scalar_pow(Rational(2), Rational(-2)) == Scalar(Rational(1, 4)));
    CHECK(scalar_pow(Rational(0), Rational(5)) == Scalar(Rational(0)));
    CHECK(scalar_pow(Rational(1), Rational(7, 5)) == Scalar(Rational(1)));

    Scalar r = scalar_pow(Rational(4), Rational(1, 2));
    CHECK_FALSE(r.is_exact());
    CHECK(std::abs(r.to_cpx() - Cpx(2.0, 0.0)) < 1e-14);

    CHECK_THROWS_AS(scalar_pow(Rational(-2), Rational(1, 2)), CalcError);
    CHECK_THROWS_AS(scalar_pow(Rational(0), Rational(-1)), CalcError);
}
