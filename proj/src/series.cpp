#include "logtensor/series.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <sstream>

#include "logtensor/errors.hpp"

namespace logtensor {

// ---------------------------------------------------------------------------
// VarId

namespace {

struct VarTable {
    std::mutex mu;
    std::deque<std::string> names;              // stable element addresses
    std::map<std::string, std::uint32_t> index;
};

VarTable& var_table() {
    static VarTable t;
    return t;
}

} // namespace

VarId VarId::of(const std::string& name) {
    if (name.empty()) throw ValidationError("variable name must be nonempty");
    VarTable& t = var_table();
    std::lock_guard<std::mutex> lk(t.mu);
    auto it = t.index.find(name);
    if (it != t.index.end()) return VarId(it->second);
    auto id = static_cast<std::uint32_t>(t.names.size());
    t.names.push_back(name);
    t.index.emplace(name, id);
    return VarId(id);
}

const std::string& VarId::name() const { return var_table().names[id_]; }

bool operator<(VarId a, VarId b) {
    if (a.id_ == b.id_) return false;
    return a.name() < b.name();
}

// ---------------------------------------------------------------------------
// Monomial

Monomial Monomial::power(VarId x, const Rational& e) {
    Monomial m;
    m.set_exp(x, e);
    return m;
}

Monomial Monomial::log_power(VarId x, int degree) {
    Monomial m;
    m.set_log_deg(x, degree);
    return m;
}

const Rational& Monomial::exp(VarId x) const {
    static const Rational zero;
    auto it = exp_.find(x);
    return it == exp_.end() ? zero : it->second;
}

int Monomial::log_deg(VarId x) const {
    auto it = log_.find(x);
    return it == log_.end() ? 0 : it->second;
}

void Monomial::set_exp(VarId x, const Rational& e) {
    if (e.is_zero()) {
        exp_.erase(x);
    } else {
        exp_[x] = e;
    }
}

void Monomial::set_log_deg(VarId x, int d) {
    if (d < 0) throw ValidationError("negative log degree on '" + x.name() + "'");
    if (d == 0) {
        log_.erase(x);
    } else {
        log_[x] = d;
    }
}

Monomial Monomial::times(const Monomial& o) const {
    Monomial r = *this;
    for (const auto& [x, e] : o.exp_) r.set_exp(x, r.exp(x) + e);
    for (const auto& [x, d] : o.log_) r.set_log_deg(x, r.log_deg(x) + d);
    return r;
}

bool operator<(const Monomial& a, const Monomial& b) {
    if (a.exp_ != b.exp_) {
        return std::lexicographical_compare(
            a.exp_.begin(), a.exp_.end(), b.exp_.begin(), b.exp_.end(),
            [](const auto& p, const auto& q) {
                if (p.first != q.first) return p.first < q.first;
                return p.second < q.second;
            });
    }
    return std::lexicographical_compare(
        a.log_.begin(), a.log_.end(), b.log_.begin(), b.log_.end(),
        [](const auto& p, const auto& q) {
            if (p.first != q.first) return p.first < q.first;
            return p.second < q.second;
        });
}

std::string Monomial::str() const {
    if (is_constant()) return "1";
    std::ostringstream os;
    bool first = true;
    // Interleave by variable so x and log(x) print together.
    std::map<VarId, std::pair<Rational, int>> merged;
    for (const auto& [x, e] : exp_) merged[x].first = e;
    for (const auto& [x, d] : log_) merged[x].second = d;
    for (const auto& [x, p] : merged) {
        const auto& [e, d] = p;
        if (!e.is_zero()) {
            if (!first) os << " * ";
            first = false;
            os << x.name();
            if (e != Rational(1)) os << "^(" << e.str() << ")";
        }
        if (d > 0) {
            if (!first) os << " * ";
            first = false;
            os << "log(" << x.name() << ")";
            if (d > 1) os << "^" << d;
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Policy

VarPolicy VarPolicy::window(const Rational& lo, const Rational& hi, int max_log) {
    if (hi < lo) throw ValidationError("empty exponent window");
    VarPolicy vp;
    vp.kind = Kind::window;
    vp.lo = lo;
    vp.hi = hi;
    vp.max_log = max_log;
    return vp;
}

VarPolicy VarPolicy::expansion(int order, int max_log) {
    if (order < 0) throw ValidationError("negative expansion order");
    VarPolicy vp;
    vp.kind = Kind::expansion;
    vp.order = order;
    vp.max_log = max_log;
    return vp;
}

Policy& Policy::with(VarId x, VarPolicy vp) {
    vars_[x] = std::move(vp);
    return *this;
}

const VarPolicy& Policy::at(VarId x) const {
    auto it = vars_.find(x);
    if (it == vars_.end()) throw PolicyOverflow("variable '" + x.name() + "' has no truncation policy");
    return it->second;
}

Policy Policy::merged(const Policy& a, const Policy& b) {
    Policy r = a;
    for (const auto& [x, vp] : b.vars_) {
        auto it = r.vars_.find(x);
        if (it == r.vars_.end()) {
            r.vars_.emplace(x, vp);
        } else if (!(it->second == vp)) {
            throw IncompatiblePolicies("variable '" + x.name() +
                                       "' is declared with different truncation policies");
        }
    }
    return r;
}

Policy Policy::without(VarId x) const {
    Policy r = *this;
    r.vars_.erase(x);
    return r;
}

bool Policy::admits(const Monomial& m) const {
    for (const auto& [x, e] : m.exps()) {
        const VarPolicy& vp = at(x);  // throws for undeclared variables
        if (vp.kind == VarPolicy::Kind::expansion) {
            if (e.sign() < 0 || !e.is_integer()) {
                throw PolicyOverflow("expansion variable '" + x.name() +
                                     "' raised to non-admissible power " + e.str());
            }
            if (e > Rational(vp.order)) return false;
        } else {
            if (e < vp.lo || vp.hi < e) return false;
        }
    }
    for (const auto& [x, d] : m.log_degs()) {
        const VarPolicy& vp = at(x);
        if (d > vp.max_log) {
            throw PolicyOverflow("log degree " + std::to_string(d) + " in '" + x.name() +
                                 "' exceeds the cap " + std::to_string(vp.max_log));
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Coef

const Scalar& Coef::scalar() const {
    if (!is_scalar()) throw CalcError("coefficient is a module vector, not a scalar");
    return std::get<Scalar>(v_);
}

const Vec& Coef::vec() const {
    if (!is_vector()) throw CalcError("coefficient is a scalar, not a module vector");
    return std::get<Vec>(v_);
}

bool Coef::is_zero() const {
    return is_scalar() ? scalar().is_zero() : vec().is_zero();
}

Coef Coef::operator-() const {
    return is_scalar() ? Coef(-scalar()) : Coef(-vec());
}

Coef& Coef::operator+=(const Coef& o) {
    if (o.is_zero()) return *this;
    if (is_zero()) {
        v_ = o.v_;
        return *this;
    }
    if (is_scalar() != o.is_scalar()) {
        throw CalcError("cannot add a scalar coefficient to a module-vector coefficient");
    }
    if (is_scalar()) {
        v_ = scalar() + o.scalar();
    } else {
        v_ = vec() + o.vec();
    }
    return *this;
}

Coef operator*(const Coef& a, const Coef& b) {
    if (a.is_scalar() && b.is_scalar()) return Coef(a.scalar() * b.scalar());
    if (a.is_scalar()) return Coef(b.vec().scaled(a.scalar()));
    if (b.is_scalar()) return Coef(a.vec().scaled(b.scalar()));
    throw CalcError("cannot multiply two module-vector coefficients");
}

Coef Coef::scaled(const Scalar& s) const {
    return is_scalar() ? Coef(scalar() * s) : Coef(vec().scaled(s));
}

bool Coef::approx_equal(const Coef& a, const Coef& b, double tol) {
    if (a.is_zero() && b.is_zero()) return true;
    if (a.is_scalar() != b.is_scalar()) return false;
    if (a.is_scalar()) return Scalar::approx_equal(a.scalar(), b.scalar(), tol);
    return Vec::approx_equal(a.vec(), b.vec(), tol);
}

double Coef::max_abs() const { return is_scalar() ? scalar().abs() : vec().max_abs(); }

std::string Coef::str() const { return is_scalar() ? scalar().str() : vec().str(); }

// ---------------------------------------------------------------------------
// Series

Series Series::constant(const Coef& c, Policy pol) {
    Series s(std::move(pol));
    s.accum(Monomial(), c);
    return s;
}

Series Series::term(const Monomial& m, const Coef& c, Policy pol) {
    Series s(std::move(pol));
    s.set_term(m, c);
    return s;
}

Coef Series::coeff(const Monomial& m) const {
    auto it = t_.find(m);
    return it == t_.end() ? Coef() : it->second;
}

void Series::accum(const Monomial& m, const Coef& c) {
    if (c.is_zero()) return;
    if (!pol_.admits(m)) return;
    auto it = t_.find(m);
    if (it == t_.end()) {
        t_.emplace(m, c);
        return;
    }
    it->second += c;
    if (it->second.is_zero()) t_.erase(it);
}

void Series::set_term(const Monomial& m, const Coef& c) {
    if (!pol_.admits(m)) {
        throw PolicyOverflow("term " + m.str() + " is not admitted by the truncation policy");
    }
    if (c.is_zero()) {
        t_.erase(m);
    } else {
        t_[m] = c;
    }
}

Series Series::operator-() const {
    Series r(pol_);
    for (const auto& [m, c] : t_) r.t_.emplace(m, -c);
    return r;
}

Series operator+(const Series& a, const Series& b) {
    Series r(Policy::merged(a.pol_, b.pol_));
    for (const auto& [m, c] : a.t_) r.accum(m, c);
    for (const auto& [m, c] : b.t_) r.accum(m, c);
    return r;
}

Series operator-(const Series& a, const Series& b) {
    Series r(Policy::merged(a.pol_, b.pol_));
    for (const auto& [m, c] : a.t_) r.accum(m, c);
    for (const auto& [m, c] : b.t_) r.accum(m, -c);
    return r;
}

Series operator*(const Series& a, const Series& b) {
    Series r(Policy::merged(a.pol_, b.pol_));
    for (const auto& [ma, ca] : a.t_) {
        for (const auto& [mb, cb] : b.t_) {
            Monomial m = ma.times(mb);
            if (!r.pol_.admits(m)) continue;
            r.accum(m, ca * cb);
        }
    }
    return r;
}

Series Series::scaled(const Scalar& s) const {
    Series r(pol_);
    if (s.is_zero()) return r;
    for (const auto& [m, c] : t_) r.accum(m, c.scaled(s));
    return r;
}

Series Series::derive(VarId x) const {
    Series r(pol_);
    for (const auto& [m, c] : t_) {
        const Rational n = m.exp(x);
        const int d = m.log_deg(x);
        if (!n.is_zero()) {
            Monomial m1 = m;
            m1.set_exp(x, n - Rational(1));
            r.accum(m1, c.scaled(Scalar(n)));
        }
        if (d > 0) {
            Monomial m2 = m;
            m2.set_exp(x, n - Rational(1));
            m2.set_log_deg(x, d - 1);
            r.accum(m2, c.scaled(Scalar(Rational(d))));
        }
    }
    return r;
}

Series Series::x_ddx(VarId x) const {
    Series r(pol_);
    for (const auto& [m, c] : t_) {
        const Rational n = m.exp(x);
        const int d = m.log_deg(x);
        if (!n.is_zero()) r.accum(m, c.scaled(Scalar(n)));
        if (d > 0) {
            Monomial m2 = m;
            m2.set_log_deg(x, d - 1);
            r.accum(m2, c.scaled(Scalar(Rational(d))));
        }
    }
    return r;
}

namespace {

// Ensure `y` is declared in `pol` as an expansion variable; declare it with
// the given order when absent.
Policy with_expansion_var(const Policy& pol, VarId y, int order) {
    if (pol.declares(y)) {
        if (pol.at(y).kind != VarPolicy::Kind::expansion) {
            throw IncompatiblePolicies("variable '" + y.name() +
                                       "' must be an expansion variable here");
        }
        return pol;
    }
    Policy r = pol;
    r.with(y, VarPolicy::expansion(order));
    return r;
}

// Powers of the formal log L(u) = u - u^2/2 + u^3/3 - ... where u is the
// given series; returns L^0..L^{maxpow}, each truncated by the policy.
std::vector<Series> log1p_powers(const Series& u, int order, int maxpow, const Policy& pol) {
    Series lg(pol);
    Series upow = Series::constant(Coef(Rational(1)), pol);
    for (int i = 1; i <= order; ++i) {
        upow = upow * u;
        Rational c(((i % 2) == 1) ? 1 : -1, i);
        lg = lg + upow.scaled(Scalar(c));
    }
    std::vector<Series> pw;
    pw.reserve(static_cast<std::size_t>(maxpow) + 1);
    pw.push_back(Series::constant(Coef(Rational(1)), pol));
    for (int k = 1; k <= maxpow; ++k) pw.push_back(pw.back() * lg);
    return pw;
}

Monomial strip_var(const Monomial& m, VarId x) {
    Monomial r = m;
    r.set_exp(x, Rational(0));
    r.set_log_deg(x, 0);
    return r;
}

} // namespace

Series Series::subst_shift(VarId x, VarId y, int order) const {
    Policy target = with_expansion_var(pol_, y, order);
    // Intermediate pieces carry x-exponents in [-order, 0]; widen the window
    // so they survive until they recombine with the head exponent.
    Policy pol = target;
    if (target.at(x).kind == VarPolicy::Kind::window) {
        VarPolicy vp = target.at(x);
        vp.lo = std::min(vp.lo, Rational(0)) - Rational(order);
        vp.hi = std::max(vp.hi, Rational(0));
        pol.with(x, vp);
    }
    // u = y/x, shared by every term.
    Monomial mu = Monomial::power(y, Rational(1));
    mu.set_exp(x, Rational(-1));
    Series u(pol);
    u.accum(mu, Coef(Rational(1)));

    int maxlog = max_log_deg(x);
    std::vector<Series> lpw = log1p_powers(u, order, maxlog, pol);

    Series r(pol);
    for (const auto& [m, c] : t_) {
        const Rational n = m.exp(x);
        const int d = m.log_deg(x);
        // (1 + u)^n truncated to u-order <= order.
        Series bin(pol);
        for (int i = 0; i <= order; ++i) {
            Monomial mi;
            mi.set_exp(y, Rational(i));
            mi.set_exp(x, Rational(-i));
            bin.accum(mi, Coef(binomial(n, i)));
        }
        // (log x + L(u))^d expanded along powers of log x.
        Series logpart(pol);
        for (int j = 0; j <= d; ++j) {
            Series piece = lpw[static_cast<std::size_t>(d - j)].scaled(Scalar(binomial(Rational(d), j)));
            Series lj = Series::term(Monomial::log_power(x, j), Coef(Rational(1)), pol);
            logpart = logpart + piece * lj;
        }
        Monomial base = strip_var(m, x);
        base.set_exp(x, n);
        Series head = Series::term(base, c, pol);
        r = r + head * bin * logpart;
    }
    return r.restricted(target);
}

Series Series::subst_dilate(VarId x, VarId y, int order) const {
    Policy pol = with_expansion_var(pol_, y, order);
    Series r(pol);
    for (const auto& [m, c] : t_) {
        const Rational n = m.exp(x);
        const int d = m.log_deg(x);
        // e^{ny} (log x + y)^d, keeping total y-order <= order.
        for (int i = 0; i <= order; ++i) {
            Rational ei = pow(n, i) / Rational(factorial(i));
            if (ei.is_zero()) continue;
            for (int j = 0; j <= d; ++j) {
                if (i + (d - j) > order) continue;
                Rational cj = binomial(Rational(d), j) * ei;
                Monomial mm = m;
                mm.set_log_deg(x, j);
                mm.set_exp(y, Rational(i + (d - j)));
                r.accum(mm, c.scaled(Scalar(cj)));
            }
        }
    }
    return r;
}

Series Series::subst_scale(VarId x, VarId y) const {
    Policy pol = pol_;
    if (!pol.declares(y)) pol.with(y, pol_.at(x));
    Series r(pol);
    for (const auto& [m, c] : t_) {
        const Rational n = m.exp(x);
        const int d = m.log_deg(x);
        for (int j = 0; j <= d; ++j) {
            Monomial mm = m;
            mm.set_log_deg(x, j);
            mm.set_exp(y, mm.exp(y) + n);
            mm.set_log_deg(y, mm.log_deg(y) + (d - j));
            r.accum(mm, c.scaled(Scalar(binomial(Rational(d), j))));
        }
    }
    return r;
}

Series Series::subst_multiply(VarId x, const Series& g) const {
    Policy target = Policy::merged(pol_, g.policy());

    // Nilpotency must come from the expansion variables, not from window
    // truncation: every term of g needs positive expansion degree, which
    // bounds how many powers of g can survive.
    int budget = 0;
    for (const auto& [v, vp] : target.vars()) {
        (void)v;
        if (vp.kind == VarPolicy::Kind::expansion) budget += vp.order;
    }
    int dmin = budget + 1;
    for (const auto& [m, c] : g.terms()) {
        (void)c;
        int d = 0;
        for (const auto& [v, e] : m.exps()) {
            if (target.at(v).kind == VarPolicy::Kind::expansion) d += static_cast<int>(e.to_long());
        }
        dmin = std::min(dmin, d);
    }
    if (!g.is_zero() && dmin < 1) {
        throw PolicyOverflow("multiplicative substitution needs a perturbation of positive expansion degree");
    }
    const int imax = g.is_zero() ? 0 : budget / dmin;

    // Window variables drift by up to imax times g's exponent extremes;
    // widen them so intermediate products survive until recombination.
    Policy pol = target;
    for (const auto& [v, vp] : target.vars()) {
        if (vp.kind != VarPolicy::Kind::window) continue;
        Rational gmin(0), gmax(0);
        for (const auto& [m, c] : g.terms()) {
            (void)c;
            gmin = std::min(gmin, m.exp(v));
            gmax = std::max(gmax, m.exp(v));
        }
        VarPolicy wide = vp;
        wide.lo = std::min(vp.lo, Rational(0)) + gmin * Rational(imax);
        wide.hi = std::max(vp.hi, Rational(0)) + gmax * Rational(imax);
        pol.with(v, wide);
    }

    // Power chain of g; zero from g^{imax+1} on.
    std::vector<Series> gpow;
    gpow.push_back(Series::constant(Coef(Rational(1)), pol));
    {
        Series gw = g.restricted(pol);
        for (int i = 1; i <= imax; ++i) gpow.push_back(gpow.back() * gw);
        gpow.push_back(Series(pol));
    }
    const int glen = static_cast<int>(gpow.size()) - 1;  // g^glen == 0

    // log(1+g) and its powers.
    Series lg(pol);
    for (int i = 1; i < glen; ++i) {
        lg = lg + gpow[static_cast<std::size_t>(i)].scaled(Scalar(Rational(((i % 2) == 1) ? 1 : -1, i)));
    }
    int maxlog = max_log_deg(x);
    std::vector<Series> lpw;
    lpw.push_back(Series::constant(Coef(Rational(1)), pol));
    for (int k = 1; k <= maxlog; ++k) lpw.push_back(lpw.back() * lg);

    Series r(pol);
    for (const auto& [m, c] : t_) {
        const Rational n = m.exp(x);
        const int d = m.log_deg(x);
        // (1+g)^n = sum_i binom(n,i) g^i (finite since g is nilpotent here).
        Series bin(pol);
        for (int i = 0; i < glen; ++i) {
            bin = bin + gpow[static_cast<std::size_t>(i)].scaled(Scalar(binomial(n, i)));
        }
        Series logpart(pol);
        for (int j = 0; j <= d; ++j) {
            Series piece = lpw[static_cast<std::size_t>(d - j)].scaled(Scalar(binomial(Rational(d), j)));
            Series lj = Series::term(Monomial::log_power(x, j), Coef(Rational(1)), pol);
            logpart = logpart + piece * lj;
        }
        Monomial base = m;  // keep x^n in place, logs live in logpart
        base.set_log_deg(x, 0);
        Series head = Series::term(base, c, pol);
        r = r + head * bin * logpart;
    }
    return r.restricted(target);
}

Series Series::residue(VarId x) const {
    for (const auto& [m, c] : t_) {
        (void)c;
        if (m.log_deg(x) > 0) {
            throw LogDegreePresent("residue in '" + x.name() +
                                   "' requires a log-free series; found " + m.str());
        }
    }
    Series r(pol_.without(x));
    for (const auto& [m, c] : t_) {
        if (m.exp(x) == Rational(-1)) r.accum(strip_var(m, x), c);
    }
    return r;
}

Series Series::coefficient_slice(VarId x, const Rational& e, int d) const {
    Series r(pol_.without(x));
    for (const auto& [m, c] : t_) {
        if (m.exp(x) == e && m.log_deg(x) == d) r.accum(strip_var(m, x), c);
    }
    return r;
}

int Series::max_log_deg(VarId x) const {
    int d = 0;
    for (const auto& [m, c] : t_) {
        (void)c;
        d = std::max(d, m.log_deg(x));
    }
    return d;
}

std::vector<Rational> Series::exponents(VarId x) const {
    std::vector<Rational> es;
    for (const auto& [m, c] : t_) {
        (void)c;
        es.push_back(m.exp(x));
    }
    std::sort(es.begin(), es.end());
    es.erase(std::unique(es.begin(), es.end()), es.end());
    return es;
}

Series Series::promoted_complex() const {
    Series r(pol_);
    for (const auto& [m, c] : t_) {
        if (c.is_scalar()) {
            r.accum(m, Coef(Scalar::complex(c.scalar().to_cpx())));
        } else {
            Vec v;
            for (const auto& [i, s] : c.vec().entries()) v.set(i, Scalar::complex(s.to_cpx()));
            r.accum(m, Coef(v));
        }
    }
    return r;
}

Series Series::mapped(const std::function<Coef(const Monomial&, const Coef&)>& fn) const {
    Series r(pol_);
    for (const auto& [m, c] : t_) r.accum(m, fn(m, c));
    return r;
}

Series Series::restricted(const Policy& pol) const {
    Series r(pol);
    for (const auto& [m, c] : t_) r.accum(m, c);
    return r;
}

bool Series::approx_equal(const Series& a, const Series& b, double tol) {
    auto ia = a.t_.begin();
    auto ib = b.t_.begin();
    while (ia != a.t_.end() || ib != b.t_.end()) {
        if (ib == b.t_.end() || (ia != a.t_.end() && ia->first < ib->first)) {
            if (!Coef::approx_equal(ia->second, Coef(), tol)) return false;
            ++ia;
        } else if (ia == a.t_.end() || ib->first < ia->first) {
            if (!Coef::approx_equal(Coef(), ib->second, tol)) return false;
            ++ib;
        } else {
            if (!Coef::approx_equal(ia->second, ib->second, tol)) return false;
            ++ia;
            ++ib;
        }
    }
    return true;
}

std::string Series::str() const {
    if (t_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : t_) {
        if (!first) os << " + ";
        first = false;
        os << "(" << c.str() << ")";
        if (!m.is_constant()) os << " * " << m.str();
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Free operations

Series exp_diff_op(const Series& f, const Series& p, VarId x, VarId y, int order) {
    // Validate p: finite log-free Laurent polynomial in x alone.
    Rational smin(0), smax(0);
    for (const auto& [m, c] : p.terms()) {
        (void)c;
        for (const auto& [v, e] : m.exps()) {
            (void)e;
            if (v != x) throw ValidationError("generator polynomial must involve only the series variable");
        }
        if (!m.log_degs().empty()) throw ValidationError("generator polynomial must be log-free");
        Rational shift = m.exp(x) - Rational(1);
        smin = std::min(smin, shift);
        smax = std::max(smax, shift);
    }

    Policy target = with_expansion_var(Policy::merged(f.policy(), p.policy()), y, order);

    // Intermediates live with a widened window in x so that mid-flight terms
    // that a later shift brings back in range are not lost prematurely.
    Policy wide = target;
    if (target.at(x).kind == VarPolicy::Kind::window) {
        VarPolicy vp = target.at(x);
        vp.lo = vp.lo + smin * Rational(order);
        vp.hi = vp.hi + smax * Rational(order);
        wide.with(x, vp);
    }

    Series g = f.restricted(wide);
    Series pw = p.restricted(wide);
    Series acc = g;
    Rational invfact(1);
    for (int j = 1; j <= order; ++j) {
        g = pw * g.derive(x);
        if (g.is_zero()) break;
        invfact = invfact / Rational(j);
        Series yj = Series::term(Monomial::power(y, Rational(j)), Coef(Rational(1)), wide);
        acc = acc + (g * yj).scaled(Scalar(invfact));
    }
    return acc.restricted(target);
}

namespace {

Scalar scalar_ipow(const Scalar& s, long e) {
    if (e == 0) return Scalar(Rational(1));
    Scalar base = s;
    long n = e;
    if (n < 0) {
        base = Scalar(Rational(1)) / base;
        n = -n;
    }
    Scalar r(Rational(1));
    while (n > 0) {
        if (n & 1) r = r * base;
        base = base * base;
        n >>= 1;
    }
    return r;
}

Scalar slot_coeff_pow(const Scalar& s, const Rational& e) {
    if (e.is_zero()) return Scalar(Rational(1));
    if (e.is_integer()) return scalar_ipow(s, e.to_long());
    if (s == Scalar(Rational(1))) return Scalar(Rational(1));
    if (s.is_rational()) return scalar_pow(s.rat(), e);
    throw CalcError("cannot raise coefficient " + s.str() + " to fractional power " + e.str());
}

} // namespace

Series binom_expand(const ExpSlot& a, const ExpSlot& b, const Rational& r, int order, Policy pol) {
    Series out(pol);
    for (int i = 0; i <= order; ++i) {
        Rational bc = binomial(r, i);
        if (bc.is_zero()) continue;
        Scalar coeff = Scalar(bc) * slot_coeff_pow(a.coeff, r - Rational(i)) * scalar_ipow(b.coeff, i);
        if (coeff.is_zero()) continue;
        Monomial m;
        if (a.var) m.set_exp(*a.var, a.var_exp * (r - Rational(i)));
        if (b.var) m.set_exp(*b.var, m.exp(*b.var) + b.var_exp * Rational(i));
        out.accum(m, Coef(coeff));
    }
    return out;
}

Series delta_kernel(const ExpSlot& a, const ExpSlot& b, VarId w, int order, Policy pol) {
    const VarPolicy& vp = pol.at(w);
    if (vp.kind != VarPolicy::Kind::window) {
        throw PolicyOverflow("delta kernel variable '" + w.name() + "' needs a window policy");
    }
    // Exponent of w is -h-1, so h runs over the integers with -h-1 in window.
    long hmin = ceil_long(-vp.hi - Rational(1));
    long hmax = floor_long(-vp.lo - Rational(1));
    if (hmin > hmax) {
        throw WindowEmpty("window of '" + w.name() + "' admits no integer delta exponents");
    }
    Series out(pol);
    for (long h = hmin; h <= hmax; ++h) {
        Series body = binom_expand(a, b, Rational(h), order, pol);
        Series wpow = Series::term(Monomial::power(w, Rational(-h - 1)), Coef(Rational(1)), pol);
        out = out + wpow * body;
    }
    return out;
}

Series delta_plain(VarId x, Policy pol) {
    const VarPolicy& vp = pol.at(x);
    if (vp.kind != VarPolicy::Kind::window) {
        throw PolicyOverflow("delta variable '" + x.name() + "' needs a window policy");
    }
    if (ceil_long(vp.lo) > floor_long(vp.hi)) {
        throw WindowEmpty("window of '" + x.name() + "' admits no integer delta exponents");
    }
    Series out(pol);
    for (long n = ceil_long(vp.lo); n <= floor_long(vp.hi); ++n) {
        out.accum(Monomial::power(x, Rational(n)), Coef(Rational(1)));
    }
    return out;
}

OdeResult ode_membership(const Series& f, const Rational& a, int m, VarId x) {
    if (m < 0) throw ValidationError("negative annihilation order");
    OdeResult res;
    if (f.is_zero()) {
        res.member = true;
        res.minimal_m = 0;
        return res;
    }
    Series g = f;
    for (int mp = 1; mp <= m; ++mp) {
        g = g.x_ddx(x) - g.scaled(Scalar(a));
        if (g.is_zero()) {
            // The minimal power is certified by a nonzero top log coefficient.
            if (f.coefficient_slice(x, a, mp - 1).is_zero()) {
                throw CalcError("annihilation order certificate failed");
            }
            res.member = true;
            res.minimal_m = mp;
            return res;
        }
    }
    res.member = false;
    res.witness = g.terms().begin()->first;
    return res;
}

} // namespace logtensor
