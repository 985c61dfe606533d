#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logtensor/errors.hpp"
#include "logtensor/linalg.hpp"

using namespace logtensor;

namespace {
Scalar q(long n, long d = 1) { return Scalar(Rational(n, d)); }
} // namespace

TEST_CASE("sparse vectors") {
    Vec v = Vec::unit(3);
    CHECK(v.at(3) == q(1));
    CHECK(v.at(0).is_zero());
    v.set(0, q(2));
    Vec w = v.scaled(q(1, 2));
    CHECK(w.at(0) == q(1));
    CHECK(w.at(3) == q(1, 2));
    w -= v.scaled(q(1, 2));
    CHECK(w.is_zero());
    CHECK((v + (-v)).is_zero());
    CHECK(v.max_abs() == doctest::Approx(2.0));
}

TEST_CASE("matrix product and apply") {
    Mat a(2, 2);
    a.at(0, 0) = q(1);
    a.at(0, 1) = q(2);
    a.at(1, 0) = q(3);
    a.at(1, 1) = q(4);
    Mat b = a * Mat::identity(2);
    CHECK(b == a);

    Vec x;
    x.set(0, q(1));
    x.set(1, q(1, 2));
    Vec y = a.apply(x);
    CHECK(y.at(0) == q(2));
    CHECK(y.at(1) == q(5));

    CHECK(a.transposed().at(0, 1) == q(3));
}

TEST_CASE("rank and kernel") {
    Mat m(2, 2);
    m.at(0, 0) = q(1);
    m.at(0, 1) = q(2);
    m.at(1, 0) = q(2);
    m.at(1, 1) = q(4);
    CHECK(m.rank() == 1);
    auto ker = m.kernel();
    REQUIRE(ker.size() == 1);
    // kernel vector proportional to (-2, 1)
    const auto& k = ker[0];
    CHECK(k[0] * q(1) == k[1] * q(-2));

    CHECK(Mat::identity(3).rank() == 3);
    CHECK(Mat::identity(3).kernel().empty());

    Mat z(2, 3);
    CHECK(z.rank() == 0);
    CHECK(z.kernel().size() == 3);
}

TEST_CASE("incremental row span") {
    RowSpan span(3);
    CHECK(span.add({q(1), q(2), q(0)}));
    CHECK(span.add({q(0), q(1), q(1)}));
    CHECK_FALSE(span.add({q(1), q(3), q(1)}));  // sum of the first two
    CHECK(span.size() == 2);
    CHECK(span.contains({q(2), q(5), q(1)}));
    CHECK_FALSE(span.contains({q(0), q(0), q(1)}));
    CHECK(span.add({q(0), q(0), q(7)}));
    CHECK(span.size() == 3);
    CHECK(span.contains({q(5), q(-1), q(13, 7)}));
}

TEST_CASE("exact elimination refuses non-invertible pivots") {
    Mat m(1, 1);
    m.at(0, 0) = Scalar::zeta();
    CHECK_THROWS_AS(m.rank(), CalcError);
}
