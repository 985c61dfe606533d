#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logtensor/module.hpp"
#include "logtensor/module_io.hpp"
#include "logtensor/series.hpp"

using namespace logtensor;

namespace {

Rational R(long n) { return Rational(n); }
Rational R(long n, long d) { return Rational(n, d); }

// Two-dimensional Jordan block at weight 3/2: L(0) w = 3/2 w,
// L(0) u = w + 3/2 u.
GradedModule jordan2() {
    GradedModule m("J2", {{"w", R(3, 2), {}}, {"u", R(3, 2), {}}}, R(3, 2), R(3, 2), R(0));
    Mat l0(2, 2);
    l0.at(0, 0) = Scalar(R(3, 2));
    l0.at(1, 1) = Scalar(R(3, 2));
    l0.at(0, 1) = Scalar(R(1));
    m.set_l(0, l0);
    return m;
}

// Rank-one free-boson flavoured module on {v0, v1 = a(-1)v0}, weights 0 and
// 1, window [0, 1].  a(-1) sends v0 to v1 (v1's image leaves the window, so
// that column is zero); a(1) sends v1 to v0; a(0) and a(2) vanish.
GradedModule boson2() {
    GradedModule m("B2", {{"v0", R(0), {}}, {"v1", R(1), {}}}, R(0), R(1), R(1));
    Mat l0(2, 2);
    l0.at(1, 1) = Scalar(R(1));
    m.set_l(0, l0);
    m.add_generator("a", {R(1), {}, {}, false});
    Mat am1(2, 2);
    am1.at(1, 0) = Scalar(R(1));
    m.set_mode("a", R(-1), am1);
    Mat a1(2, 2);
    a1.at(0, 1) = Scalar(R(1));
    m.set_mode("a", R(1), a1);
    m.set_mode("a", R(0), Mat(2, 2));
    m.set_mode("a", R(2), Mat(2, 2));
    return m;
}

Series scalar_term(const Monomial& mo, const Policy& pol) {
    return Series::term(mo, Coef(Scalar(R(1))), pol);
}

} // namespace

TEST_CASE("completion elements project per weight") {
    CompletionElement c;
    c[R(1, 2)] = Vec::unit(3);
    CHECK(project(c, R(1, 2)) == Vec::unit(3));
    CHECK(project(c, R(2)).is_zero());
}

TEST_CASE("basis bookkeeping and weight spaces") {
    GradedModule m = boson2();
    CHECK(m.dim() == 2);
    CHECK(m.index_of("v1") == 1);
    CHECK(m.index_of("nope") == -1);
    CHECK(m.weight_of(1) == R(1));
    CHECK(m.weight_space(R(0)) == std::vector<int>{0});
    CHECK(m.weights() == std::vector<Rational>{R(0), R(1)});
    CHECK(m.mode_shift("a", R(-1)) == R(1));
    CHECK(m.mode_shift("a", R(1)) == R(-1));

    CHECK(*m.homogeneous_weight(Vec::unit(0)) == R(0));
    CHECK(!m.homogeneous_weight(Vec()));
    CHECK_THROWS_AS(m.homogeneous_weight(Vec::unit(0) + Vec::unit(1)), NotHomogeneous);

    CHECK_THROWS_AS(GradedModule("bad", {{"x", R(0), {}}, {"x", R(1), {}}}, R(0), R(1), R(0)),
                    ValidationError);
    CHECK_THROWS_AS(GradedModule("bad", {{"x", R(0), {}}}, R(1), R(0), R(0)), ValidationError);
}

TEST_CASE("validate accepts the sample modules") {
    CHECK_NOTHROW(jordan2().validate());
    CHECK_NOTHROW(boson2().validate());
}

TEST_CASE("validate rejects weight and label shift violations") {
    GradedModule m = boson2();
    Mat bad(2, 2);
    bad.at(1, 0) = Scalar(R(1));  // weight 0 -> weight 1 under a(0) (shift 0)
    m.set_mode("a", R(0), bad);
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("violates the weight shift"),
                         ValidationError);

    GradedModule g("LB", {{"e", R(1, 2), {1}}, {"f", R(1, 2), {-1}}}, R(1, 2), R(1, 2), R(0));
    Mat l0(2, 2);
    l0.at(0, 0) = Scalar(R(1, 2));
    l0.at(1, 1) = Scalar(R(1, 2));
    g.set_l(0, l0);
    g.add_generator("g", {R(1), {2}, {}, false});
    Mat ok(2, 2);
    ok.at(0, 1) = Scalar(R(1));  // [-1] + [2] = [1]: allowed
    g.set_mode("g", R(0), ok);
    CHECK_NOTHROW(g.validate());
    Mat off(2, 2);
    off.at(0, 0) = Scalar(R(1));  // [1] + [2] != [1]
    g.set_mode("g", R(0), off);
    CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("group-label shift"), ValidationError);
}

TEST_CASE("split_l0 separates semisimple and nilpotent parts") {
    GradedModule m = jordan2();
    auto [s, n] = m.split_l0();
    CHECK(s.at(0, 0) == Scalar(R(3, 2)));
    CHECK(s.at(0, 1) == Scalar(R(0)));
    CHECK(n.at(0, 1) == Scalar(R(1)));
    CHECK((n * n).is_zero());

    GradedModule b = boson2();
    auto [sb, nb] = b.split_l0();
    CHECK(nb.is_zero());
    CHECK(sb == b.l(0));
}

TEST_CASE("split_l0 rejects non-nilpotent and non-commuting data") {
    GradedModule m("NN", {{"x", R(0), {}}, {"y", R(0), {}}}, R(0), R(0), R(0));
    Mat l0(2, 2);
    l0.at(0, 1) = Scalar(R(1));
    l0.at(1, 0) = Scalar(R(1));
    m.set_l(0, l0);
    CHECK_THROWS_AS(m.split_l0(), NotNilpotent);

    // Jordan block at weight 0 plus a mode that maps across the block in a
    // way the nilpotent part does not commute with.
    GradedModule c("CF", {{"x", R(0), {}}, {"y", R(0), {}}, {"z", R(1), {}}}, R(0), R(1), R(0));
    Mat cl0(3, 3);
    cl0.at(0, 1) = Scalar(R(1));
    cl0.at(2, 2) = Scalar(R(1));
    c.set_l(0, cl0);
    c.add_generator("g", {R(1), {}, {}, false});
    Mat g0(3, 3);
    g0.at(1, 0) = Scalar(R(1));  // weight shift 0, but [N, g0] != 0
    c.set_mode("g", R(0), g0);
    CHECK_THROWS_WITH_AS(c.split_l0(), doctest::Contains("g_{0}"), CommutationFailure);
}

TEST_CASE("power_l0 produces the Jordan logarithm") {
    GradedModule m = jordan2();
    VarId x = VarId::of("x");
    Policy pol = Policy().with(x, VarPolicy::window(R(-2), R(2), 4));

    // Eigenvector: plain power, no logs.
    Series sw = m.power_l0(Vec::unit(0), +1, x, pol);
    CHECK(sw.size() == 1);
    CHECK(sw.max_log_deg(x) == 0);
    CHECK(sw.coeff(Monomial::power(x, R(3, 2))).vec() == Vec::unit(0));

    // Jordan partner: x^{3/2} (u + w log x).
    Series su = m.power_l0(Vec::unit(1), +1, x, pol);
    CHECK(su.size() == 2);
    CHECK(su.coeff(Monomial::power(x, R(3, 2))).vec() == Vec::unit(1));
    Monomial logm = Monomial::power(x, R(3, 2));
    logm.set_log_deg(x, 1);
    CHECK(su.coeff(logm).vec() == Vec::unit(0));

    // Negative sign flips the sign of the log coefficient.
    Series sd = m.power_l0(Vec::unit(1), -1, x, pol);
    Monomial logd = Monomial::power(x, R(-3, 2));
    logd.set_log_deg(x, 1);
    CHECK(sd.coeff(logd).vec() == -Vec::unit(0));

    CHECK(m.power_l0(Vec(), +1, x, pol).is_zero());
    CHECK_THROWS_AS(boson2().power_l0(Vec::unit(0) + Vec::unit(1), +1, x, pol), NotHomogeneous);
    CHECK_THROWS_AS(m.power_l0(Vec::unit(0), 2, x, pol), ValidationError);
}

TEST_CASE("x^{L(0)} then x^{-L(0)} is the identity") {
    GradedModule m = jordan2();
    VarId x = VarId::of("x");
    Policy pol = Policy().with(x, VarPolicy::window(R(-2), R(2), 4));
    for (int idx = 0; idx < 2; ++idx) {
        Series fwd = m.power_l0(Vec::unit(idx), +1, x, pol);
        Series out(pol);
        for (const auto& [mo, co] : fwd.terms()) {
            out = out + m.power_l0(co.vec(), -1, x, pol) * scalar_term(mo, pol);
        }
        Series want = Series::term(Monomial(), Coef(Vec::unit(idx)), pol);
        CHECK(Series::approx_equal(out, want, 0.0));
    }
}

TEST_CASE("derivative of x^{L(0)} transports L(0)") {
    GradedModule m = jordan2();
    VarId x = VarId::of("x");
    Policy pol = Policy().with(x, VarPolicy::window(R(-3), R(3), 4));
    for (int sign : {+1, -1}) {
        Series f = m.power_l0(Vec::unit(1), sign, x, pol);
        Vec l0u = m.l(0).apply(Vec::unit(1));
        Series transported = m.power_l0(l0u, sign, x, pol) * scalar_term(Monomial::power(x, R(-1)), pol);
        if (sign < 0) transported = -transported;
        CHECK(Series::approx_equal(f.derive(x), transported, 0.0));
    }
}

TEST_CASE("opposite modes follow the weight-one sign rule") {
    GradedModule m = boson2();
    CHECK(m.opposite_mode("a", R(1)) == m.mode("a", R(-1)).scaled(Scalar(R(-1))));
    CHECK(m.opposite_mode("a", R(-1)) == m.mode("a", R(1)).scaled(Scalar(R(-1))));
    CHECK(m.opposite_mode("a", R(0)) == m.mode("a", R(0)).scaled(Scalar(R(-1))));
    // Missing mode in the chain is reported, not fabricated.
    CHECK_THROWS_WITH_AS(m.opposite_mode("a", R(3)), doctest::Contains("not stored"),
                         ValidationError);
}

TEST_CASE("opposite modes walk the L(1) chain") {
    GradedModule m = boson2();
    // b is a second copy of the a-action whose L(1) image is 2a.
    m.add_generator("b", {R(1), {}, {{R(2), "a"}}, false});
    m.set_mode("b", R(-1), m.mode("a", R(-1)));
    m.set_mode("b", R(1), m.mode("a", R(1)));
    // a(-2) maps everything out of the window: the zero matrix.
    m.set_mode("a", R(-2), Mat(2, 2));
    m.validate();

    // b^o_n = -b_{-n} - 2 a_{-n-1}; at n = 1 the tail is a(-2) = 0.
    Mat want = m.mode("b", R(-1)).scaled(Scalar(R(-1)));
    CHECK(m.opposite_mode("b", R(1)) == want);
    // At n = -1 the tail a(0) = 0 is stored, so the chain still resolves.
    CHECK(m.opposite_mode("b", R(-1)) == m.mode("b", R(1)).scaled(Scalar(R(-1))));
    // Without a(-2) the n = 1 chain cannot be evaluated.
    GradedModule m2 = boson2();
    m2.add_generator("b", {R(1), {}, {{R(2), "a"}}, false});
    m2.set_mode("b", R(-1), m2.mode("a", R(-1)));
    CHECK_THROWS_WITH_AS(m2.opposite_mode("b", R(1)), doctest::Contains("a_{-2}"),
                         ValidationError);
}

TEST_CASE("contragredient transposes and double-dual returns") {
    GradedModule m = boson2();
    GradedModule d = m.contragredient();
    CHECK(d.name() == "B2'");
    CHECK(d.at(0).name == "v0'");
    CHECK(d.weight_of(1) == R(1));
    CHECK(d.l(0) == m.l(0).transposed());
    CHECK(d.l(-1) == m.l(1).transposed());
    CHECK(d.l(1) == m.l(-1).transposed());
    // a'(n) = (a^o_n)^T = (-a_{-n})^T.
    CHECK(d.mode("a", R(1)) == m.mode("a", R(-1)).transposed().scaled(Scalar(R(-1))));
    CHECK(d.mode("a", R(-1)) == m.mode("a", R(1)).transposed().scaled(Scalar(R(-1))));
    CHECK_NOTHROW(d.validate());

    GradedModule dd = d.contragredient();
    CHECK(dd.at(0).name == "v0''");
    for (const Rational& n : {R(-1), R(0), R(1), R(2)}) {
        CHECK(dd.mode("a", n) == m.mode("a", n));
    }
    CHECK(dd.l(-1) == m.l(-1));
    CHECK(dd.l(1) == m.l(1));
}

TEST_CASE("contragredient negates group labels") {
    GradedModule g("LB", {{"e", R(1, 2), {1}}, {"f", R(1, 2), {-1}}}, R(1, 2), R(1, 2), R(0));
    Mat l0(2, 2);
    l0.at(0, 0) = Scalar(R(1, 2));
    l0.at(1, 1) = Scalar(R(1, 2));
    g.set_l(0, l0);
    GradedModule d = g.contragredient();
    CHECK(d.at(0).label == std::vector<long>{-1});
    CHECK(d.at(1).label == std::vector<long>{1});
}

TEST_CASE("jordan block dualizes to the transposed block") {
    GradedModule m = jordan2();
    GradedModule d = m.contragredient();
    CHECK(d.l(0) == m.l(0).transposed());
    auto [s, n] = d.split_l0();
    CHECK(n.at(1, 0) == Scalar(R(1)));
    CHECK(n.at(0, 1) == Scalar(R(0)));
    (void)s;
}

TEST_CASE("strong grading reports dimensions and window escapes") {
    GradedModule m = boson2();
    GradingReport rep = m.strong_grading_check();
    CHECK(rep.pass);
    CHECK(rep.dims.at(R(0)) == 1);
    CHECK(rep.dims.at(R(1)) == 1);

    GradedModule bad("E", {{"x", R(0), {}}, {"y", R(5), {}}}, R(0), R(1), R(0));
    GradingReport rb = bad.strong_grading_check();
    CHECK(!rb.pass);
    REQUIRE(rb.violations.size() == 1);
    CHECK(rb.violations[0].find("'y'") != std::string::npos);
    CHECK(rb.violations[0].find("outside the window") != std::string::npos);
}

TEST_CASE("quotient dimensions count cokernels per weight") {
    GradedModule m = boson2();
    auto full = m.quotient_dims({});
    CHECK(full.at(R(0)) == 1);
    CHECK(full.at(R(1)) == 1);

    auto q = m.quotient_dims({m.mode("a", R(-1))});
    CHECK(q.at(R(0)) == 1);  // nothing lands at weight zero
    CHECK(q.at(R(1)) == 0);  // v1 = a(-1) v0 is hit

    Mat mixed(2, 2);
    mixed.at(0, 0) = Scalar(R(1));
    mixed.at(1, 0) = Scalar(R(1));
    CHECK_THROWS_WITH_AS(m.quotient_dims({mixed}), doctest::Contains("mixes target weights"),
                         ValidationError);
}

TEST_CASE("the L(0) commutator of a stored mode matches its weight shift") {
    // [L(0), v_n] = (wt v - n - 1) v_n as matrices, including on Jordan data.
    GradedModule c("JB", {{"x", R(0), {}}, {"y", R(0), {}}, {"zx", R(1), {}}, {"zy", R(1), {}}},
                   R(0), R(1), R(0));
    Mat l0(4, 4);
    l0.at(0, 1) = Scalar(R(1));
    l0.at(2, 2) = Scalar(R(1));
    l0.at(3, 3) = Scalar(R(1));
    l0.at(2, 3) = Scalar(R(1));
    c.set_l(0, l0);
    c.add_generator("g", {R(1), {}, {}, false});
    Mat gm(4, 4);  // g_{-1}: sends the block (x, y) to the block (zx, zy)
    gm.at(2, 0) = Scalar(R(1));
    gm.at(3, 1) = Scalar(R(1));
    c.set_mode("g", R(-1), gm);
    c.validate();

    Mat lhs = c.l(0) * gm - gm * c.l(0);
    Mat rhs = gm.scaled(Scalar(c.mode_shift("g", R(-1))));
    CHECK(lhs == rhs);
}

TEST_CASE("module json round trips and validates") {
    GradedModule m = boson2();
    std::string text = module_to_json_string(m);
    GradedModule back = module_from_json_string(text);
    CHECK(back.name() == "B2");
    CHECK(back.dim() == 2);
    CHECK(back.central_charge() == R(1));
    CHECK(back.mode("a", R(-1)) == m.mode("a", R(-1)));
    CHECK(back.l(0) == m.l(0));
    CHECK(back.generator("a").weight == R(1));
    CHECK(module_to_json_string(back) == text);
}

TEST_CASE("module loader refuses malformed and invalid data") {
    CHECK_THROWS_WITH_AS(module_from_json_string("{}"), doctest::Contains("missing field 'basis'"),
                         ValidationError);
    CHECK_THROWS_AS(module_from_json_string("not json"), ParseError);

    std::string base = R"({"name":"M","central_charge":"0",
        "window":{"lo":"0","hi":"1"},
        "basis":[{"name":"v0","weight":"0"},{"name":"v1","weight":"1"}],
        "l_ops":{"l0":[[1,1,"1"]]}})";
    CHECK_NOTHROW(module_from_json_string(base));

    // Basis vector outside the declared window.
    CHECK_THROWS_WITH_AS(
        module_from_json_string(R"({"name":"M","central_charge":"0",
            "window":{"lo":"0","hi":"1"},
            "basis":[{"name":"far","weight":"7"}]})"),
        doctest::Contains("outside the window"), ValidationError);

    // Mode for an undeclared generator.
    CHECK_THROWS_WITH_AS(
        module_from_json_string(R"({"name":"M","central_charge":"0",
            "window":{"lo":"0","hi":"1"},
            "basis":[{"name":"v0","weight":"0"}],
            "modes":[{"gen":"a","n":"-1","entries":[]}]})"),
        doctest::Contains("modes[0].gen"), ValidationError);

    // Triplet index outside the basis.
    CHECK_THROWS_WITH_AS(
        module_from_json_string(R"({"name":"M","central_charge":"0",
            "window":{"lo":"0","hi":"1"},
            "basis":[{"name":"v0","weight":"0"}],
            "l_ops":{"l0":[[0,3,"1"]]}})"),
        doctest::Contains("l_ops.l0[0]"), ValidationError);

    // Structurally valid JSON whose matrix violates the weight grading.
    CHECK_THROWS_WITH_AS(
        module_from_json_string(R"({"name":"M","central_charge":"0",
            "window":{"lo":"0","hi":"1"},
            "basis":[{"name":"v0","weight":"0"},{"name":"v1","weight":"1"}],
            "l_ops":{"l0":[[1,0,"1"]]}})"),
        doctest::Contains("violates the weight shift"), ValidationError);

    // Bad rational payload inside a triplet.
    CHECK_THROWS_WITH_AS(
        module_from_json_string(R"({"name":"M","central_charge":"0",
            "window":{"lo":"0","hi":"1"},
            "basis":[{"name":"v0","weight":"0"}],
            "l_ops":{"l0":[[0,0,"1.5"]]}})"),
        doctest::Contains("l_ops.l0[0][2]"), ValidationError);

    // Unknown generator inside an L(1) image.
    CHECK_THROWS_WITH_AS(
        module_from_json_string(R"({"name":"M","central_charge":"0",
            "window":{"lo":"0","hi":"1"},
            "basis":[{"name":"v0","weight":"0"}],
            "generators":{"a":{"weight":"1","l1":[["1","ghost"]]}}})"),
        doctest::Contains("unknown generator 'ghost'"), ValidationError);
}
