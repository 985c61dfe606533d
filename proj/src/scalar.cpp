#include "logtensor/scalar.hpp"

#include <cmath>
#include <sstream>

namespace logtensor {

GaussRat GaussRat::inverse() const {
    Rational n = re * re + im * im;
    if (n.is_zero()) throw CalcError("division by zero Gaussian rational");
    return {re / n, -im / n};
}

std::string GaussRat::str() const {
    if (im.is_zero()) return re.str();
    std::ostringstream os;
    if (!re.is_zero()) os << re.str() << (im.sign() >= 0 ? "+" : "");
    os << im.str() << "i";
    return os.str();
}

Rational Scalar::rat() const {
    if (!is_rational()) throw MixedScalarLayers("scalar is not a plain rational: " + str());
    return c_.empty() ? Rational(0) : c_[0].re;
}

const GaussRat& Scalar::zeta_coef(int j) const {
    static const GaussRat zero;
    if (!exact_) throw MixedScalarLayers("complex-layer scalar has no zeta coefficients");
    if (j < 0 || j >= static_cast<int>(c_.size())) return zero;
    return c_[static_cast<std::size_t>(j)];
}

Cpx Scalar::cpx_value() const {
    if (exact_) throw MixedScalarLayers("exact-layer scalar read as complex");
    return z_;
}

Cpx Scalar::to_cpx() const {
    if (!exact_) return z_;
    static const double pi = std::acos(-1.0);
    Cpx zeta(0.0, pi);
    Cpx acc(0.0, 0.0);
    for (std::size_t j = c_.size(); j-- > 0;) acc = acc * zeta + c_[j].to_cpx();
    return acc;
}

void Scalar::trim() {
    while (!c_.empty() && c_.back().is_zero()) c_.pop_back();
}

Scalar Scalar::operator-() const {
    Scalar r = *this;
    if (r.exact_) {
        for (auto& g : r.c_) g = -g;
    } else {
        r.z_ = -r.z_;
    }
    return r;
}

Scalar& Scalar::operator+=(const Scalar& o) {
    if (exact_ != o.exact_) {
        // Adding an exact zero to a complex value (or vice versa) is harmless
        // and common in generic code; genuine cross-layer arithmetic is not.
        if (o.is_zero()) return *this;
        if (is_zero()) { *this = o; return *this; }
        throw MixedScalarLayers("cannot add exact and complex scalars implicitly");
    }
    if (exact_) {
        if (c_.size() < o.c_.size()) c_.resize(o.c_.size());
        for (std::size_t j = 0; j < o.c_.size(); ++j) c_[j] = c_[j] + o.c_[j];
        trim();
    } else {
        z_ += o.z_;
    }
    return *this;
}

Scalar& Scalar::operator*=(const Scalar& o) {
    if (exact_ != o.exact_) {
        if (is_zero() || o.is_zero()) { *this = Scalar(); return *this; }
        throw MixedScalarLayers("cannot multiply exact and complex scalars implicitly");
    }
    if (exact_) {
        if (c_.empty() || o.c_.empty()) { c_.clear(); return *this; }
        std::vector<GaussRat> out(c_.size() + o.c_.size() - 1);
        for (std::size_t a = 0; a < c_.size(); ++a)
            for (std::size_t b = 0; b < o.c_.size(); ++b) out[a + b] = out[a + b] + c_[a] * o.c_[b];
        c_ = std::move(out);
        trim();
    } else {
        z_ *= o.z_;
    }
    return *this;
}

Scalar& Scalar::operator/=(const Scalar& o) {
    if (o.is_zero()) throw CalcError("scalar division by zero");
    if (exact_ != o.exact_) throw MixedScalarLayers("cannot divide across scalar layers");
    if (exact_) {
        if (o.c_.size() > 1)
            throw CalcError("division by a zeta-dependent scalar is not defined");
        GaussRat inv = o.c_[0].inverse();
        for (auto& g : c_) g = g * inv;
    } else {
        z_ /= o.z_;
    }
    return *this;
}

bool operator==(const Scalar& a, const Scalar& b) {
    if (a.exact_ != b.exact_) {
        return a.is_zero() && b.is_zero();
    }
    return a.exact_ ? a.c_ == b.c_ : a.z_ == b.z_;
}

bool Scalar::approx_equal(const Scalar& a, const Scalar& b, double tol) {
    if (a.exact_ && b.exact_) return a == b;
    Cpx za = a.to_cpx(), zb = b.to_cpx();
    double scale = std::max(1.0, std::abs(zb));
    return std::abs(za - zb) <= tol * scale;
}

std::string Scalar::str() const {
    std::ostringstream os;
    if (!exact_) {
        os << "(" << z_.real() << (z_.imag() >= 0 ? "+" : "") << z_.imag() << "j)";
        return os.str();
    }
    if (c_.empty()) return "0";
    bool first = true;
    for (std::size_t j = 0; j < c_.size(); ++j) {
        if (c_[j].is_zero()) continue;
        if (!first) os << " + ";
        first = false;
        os << "(" << c_[j].str() << ")";
        if (j == 1) os << "*zeta";
        if (j > 1) os << "*zeta^" << j;
    }
    return os.str();
}

std::optional<GaussRat> gauss_exp_i_pi(const Rational& n) {
    Rational two_n = n * Rational(2);
    if (!two_n.is_integer()) return std::nullopt;
    long m = two_n.to_long();  // exp(i*pi*m/2) cycles with period 4
    switch (((m % 4) + 4) % 4) {
        case 0: return GaussRat(Rational(1));
        case 1: return GaussRat(Rational(0), Rational(1));
        case 2: return GaussRat(Rational(-1));
        default: return GaussRat(Rational(0), Rational(-1));
    }
}

Scalar phase_exp_i_pi(const Rational& n) {
    if (auto g = gauss_exp_i_pi(n)) return Scalar(*g);
    static const double pi = std::acos(-1.0);
    return Scalar::complex(std::exp(Cpx(0.0, pi * n.to_double())));
}

Scalar mul_mixed(const Scalar& a, const Scalar& b) {
    if (a.is_zero() || b.is_zero()) return Scalar();
    if (a.is_exact() == b.is_exact()) return a * b;
    return Scalar::complex(a.to_cpx() * b.to_cpx());
}

Scalar add_mixed(const Scalar& a, const Scalar& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.is_exact() == b.is_exact()) return a + b;
    return Scalar::complex(a.to_cpx() + b.to_cpx());
}

Scalar scalar_pow(const Rational& z, const Rational& e) {
    if (e.is_zero()) return Scalar(Rational(1));
    if (z.is_zero()) {
        if (e.sign() < 0) throw CalcError("negative power of zero");
        return Scalar(Rational(0));
    }
    if (e.is_integer()) return Scalar(pow(z, e.to_long()));
    if (z == Rational(1)) return Scalar(Rational(1));
    if (z.sign() < 0) throw CalcError("rational power of a negative base needs a branch choice");
    return Scalar::complex(std::pow(z.to_double(), e.to_double()));
}

} // namespace logtensor
