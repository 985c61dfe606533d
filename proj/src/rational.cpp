#include "logtensor/rational.hpp"

#include <cctype>
#include <ostream>

namespace logtensor {

Rational::Rational(long num, long den) : v_(num, den) {
    if (den == 0) throw CalcError("rational with zero denominator");
    v_.canonicalize();
}

Rational& Rational::operator/=(const Rational& o) {
    if (o.is_zero()) throw CalcError("rational division by zero");
    v_ /= o.v_;
    return *this;
}

Rational Rational::parse(const std::string& text) {
    // mpq_class accepts forms like "12", "-3/4"; validate shape first so a
    // stray token gives a clear error instead of GMP aborting.
    std::size_t i = 0;
    auto digits = [&](std::size_t from) {
        std::size_t j = from;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        return j;
    };
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
    std::size_t after_num = digits(i);
    if (after_num == i) throw ParseError("malformed rational literal: '" + text + "'");
    i = after_num;
    if (i < text.size()) {
        if (text[i] != '/') throw ParseError("malformed rational literal: '" + text + "'");
        std::size_t after_den = digits(i + 1);
        if (after_den == i + 1 || after_den != text.size())
            throw ParseError("malformed rational literal: '" + text + "'");
    }
    mpq_class v;
    v.set_str(text, 10);
    if (v.get_den() == 0) throw ParseError("zero denominator in rational literal: '" + text + "'");
    v.canonicalize();
    return Rational(v);
}

std::string Rational::str() const { return v_.get_str(); }

long Rational::to_long() const {
    if (!is_integer()) throw CalcError("rational " + str() + " is not an integer");
    if (!v_.get_num().fits_slong_p()) throw CalcError("integer overflow in to_long");
    return v_.get_num().get_si();
}

long Rational::num_long() const {
    if (!v_.get_num().fits_slong_p()) throw CalcError("numerator overflow");
    return v_.get_num().get_si();
}

long Rational::den_long() const {
    if (!v_.get_den().fits_slong_p()) throw CalcError("denominator overflow");
    return v_.get_den().get_si();
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

Rational pow(const Rational& base, long e) {
    if (e == 0) return Rational(1);
    if (base.is_zero() && e < 0) throw CalcError("negative power of zero");
    Rational b = e < 0 ? Rational(1) / base : base;
    long n = e < 0 ? -e : e;
    Rational acc(1);
    while (n > 0) {
        if (n & 1) acc *= b;
        b *= b;
        n >>= 1;
    }
    return acc;
}

Rational binomial(const Rational& n, long k) {
    if (k < 0) return Rational(0);
    Rational acc(1);
    for (long i = 0; i < k; ++i) acc *= (n - Rational(i)) / Rational(i + 1);
    return acc;
}

Rational factorial(long n) {
    if (n < 0) throw CalcError("factorial of negative integer");
    Rational acc(1);
    for (long i = 2; i <= n; ++i) acc *= Rational(i);
    return acc;
}

long floor_long(const Rational& q) {
    mpz_class z;
    mpq_class v(q.str());
    mpz_fdiv_q(z.get_mpz_t(), v.get_num().get_mpz_t(), v.get_den().get_mpz_t());
    if (!z.fits_slong_p()) throw CalcError("floor overflow");
    return z.get_si();
}

long ceil_long(const Rational& q) { return -floor_long(-q); }

Rational frac_mod1(const Rational& q) { return q - Rational(floor_long(q)); }

} // namespace logtensor
