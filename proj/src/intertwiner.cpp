#include "logtensor/intertwiner.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "logtensor/errors.hpp"

namespace logtensor {

namespace {

const Vec kZeroVec{};

std::vector<long> label_sum(const std::vector<long>& a, const std::vector<long>& b) {
    if (a.size() != b.size()) throw ValidationError("source modules carry different label ranks");
    std::vector<long> out(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) out[t] = a[t] + b[t];
    return out;
}

void check_entry(const GradedModule& w1, const GradedModule& w2, const GradedModule& w3,
                 const Rational& n, int k, int i, int j, const Vec& value, int kmax) {
    if (i < 0 || i >= w1.dim() || j < 0 || j >= w2.dim())
        throw ValidationError("intertwiner coefficient source index out of range");
    if (k < 0 || k > kmax)
        throw ValidationError("log degree " + std::to_string(k) + " outside [0, " +
                              std::to_string(kmax) + "]");
    if (value.is_zero()) return;
    Rational w = w1.weight_of(i) + w2.weight_of(j) - n - Rational(1);
    std::vector<long> lbl = label_sum(w1.at(i).label, w2.at(j).label);
    for (const auto& [row, s] : value.entries()) {
        if (row < 0 || row >= w3.dim())
            throw ValidationError("intertwiner coefficient target index out of range");
        if (s.is_zero()) continue;
        if (!(w3.weight_of(row) == w))
            throw ValidationError("coefficient (n=" + n.str() + ", k=" + std::to_string(k) +
                                  ") violates the weight rule at target '" + w3.at(row).name +
                                  "'");
        if (w3.at(row).label != lbl)
            throw ValidationError("coefficient (n=" + n.str() + ", k=" + std::to_string(k) +
                                  ") violates label additivity at target '" + w3.at(row).name +
                                  "'");
    }
}

Rational rat_min(const Rational& a, const Rational& b) { return a < b ? a : b; }
Rational rat_max(const Rational& a, const Rational& b) { return a < b ? b : a; }

Monomial xpow(VarId x, const Rational& e, int logdeg) {
    Monomial m = Monomial::power(x, e);
    m.set_log_deg(x, logdeg);
    return m;
}

} // namespace

LogIntertwiner::LogIntertwiner(std::shared_ptr<const GradedModule> w1,
                               std::shared_ptr<const GradedModule> w2,
                               std::shared_ptr<const GradedModule> w3, int kmax)
    : w1_(std::move(w1)), w2_(std::move(w2)), w3_(std::move(w3)), kmax_(kmax) {
    if (!w1_ || !w2_ || !w3_) throw ValidationError("intertwiner requires three modules");
    if (kmax_ < 0) throw ValidationError("negative log cap");
    if (w1_->dim() > 0 && w2_->dim() > 0)
        label_sum(w1_->at(0).label, w2_->at(0).label); // label ranks must agree
}

void LogIntertwiner::set_coeff(const Rational& n, int k, int i, int j, const Vec& value) {
    check_entry(*w1_, *w2_, *w3_, n, k, i, j, value, kmax_);
    if (value.is_zero()) return;
    Family& fam = c_[{n, k}];
    Vec& slot = fam[{i, j}];
    slot += value;
    if (slot.is_zero()) {
        fam.erase({i, j});
        if (fam.empty()) c_.erase({n, k});
    }
}

const Vec& LogIntertwiner::coeff(const Rational& n, int k, int i, int j) const {
    auto it = c_.find({n, k});
    if (it == c_.end()) return kZeroVec;
    auto jt = it->second.find({i, j});
    return jt == it->second.end() ? kZeroVec : jt->second;
}

std::map<LogIntertwiner::Key, Vec> LogIntertwiner::apply_vec(const Vec& a, const Vec& b) const {
    std::map<Key, Vec> out;
    for (const auto& [key, fam] : c_) {
        Vec acc;
        for (const auto& [pair, vec] : fam) {
            Scalar s = a.at(pair.first) * b.at(pair.second);
            if (!s.is_zero()) acc += vec.scaled(s);
        }
        if (!acc.is_zero()) out[key] = std::move(acc);
    }
    return out;
}

Series LogIntertwiner::apply(const Vec& a, const Vec& b, VarId x, const Policy& pol) const {
    Series s(pol);
    for (const auto& [key, vec] : apply_vec(a, b))
        s.accum(xpow(x, -key.first - Rational(1), key.second), Coef(vec));
    return s;
}

std::set<Rational> LogIntertwiner::cosets() const {
    std::set<Rational> out;
    for (const auto& [key, fam] : c_) out.insert(frac_mod1(key.first));
    return out;
}

void LogIntertwiner::validate() const {
    for (const auto& [key, fam] : c_)
        for (const auto& [pair, vec] : fam)
            check_entry(*w1_, *w2_, *w3_, key.first, key.second, pair.first, pair.second, vec,
                        kmax_);
}

int LogIntertwiner::max_stored_log() const {
    int k = 0;
    for (const auto& [key, fam] : c_) k = std::max(k, key.second);
    return k;
}

// ---------------------------------------------------------------------------
// axiom checks
// ---------------------------------------------------------------------------

namespace {

// Modules and shorthand weights shared by the checks below.
struct CheckContext {
    const LogIntertwiner& y;
    const GradedModule& w1;
    const GradedModule& w2;
    const GradedModule& w3;
    Rational e_lo, e_hi; // hull of x-exponents the target window can store

    CheckContext(const LogIntertwiner& yy, int i, int j)
        : y(yy), w1(yy.w1()), w2(yy.w2()), w3(yy.w3()) {
        Rational n12 = w1.weight_of(i) + w2.weight_of(j);
        e_lo = w3.wmin() - n12;
        e_hi = w3.wmax() - n12;
    }
};

void require_index(const GradedModule& m, int i, const char* what) {
    if (i < 0 || i >= m.dim())
        throw ValidationError(std::string(what) + " index out of range");
}

// Apply a weight-graded operator to every (vector) coefficient of a series.
Series map_coeffs(const Series& s, const std::function<Vec(const Vec&)>& op) {
    return s.mapped([&](const Monomial&, const Coef& c) { return Coef(op(c.vec())); });
}

void jacobi_one(Report& rep, const LogIntertwiner& y, const LogIntertwiner& act1,
                const LogIntertwiner& act2, const LogIntertwiner& act3, const TestTriple& tr) {
    const GradedModule& v_mod = act1.w1();
    const GradedModule& w1 = y.w1();
    const GradedModule& w2 = y.w2();
    const GradedModule& w3 = y.w3();
    int v = tr.v, i = tr.i, j = tr.j;
    require_index(v_mod, v, "algebra");
    require_index(w1, i, "first source");
    require_index(w2, j, "second source");

    std::ostringstream nm;
    nm << "jacobi(v=" << v << ",i=" << i << ",j=" << j << ")";

    Rational kv = v_mod.weight_of(v);
    Rational n1 = w1.weight_of(i), n2 = w2.weight_of(j);

    // Monomials x0^{-a-1} x1^{-b-1} x2^{-c-1} of the difference are fully
    // determined by the stored windows exactly when every contributing
    // intermediate weight fits: a and b bounded below by the source windows,
    // c by the target window, and the total a+b+c by the final weight.
    long a_lo = ceil_long(kv + n1 - Rational(1) - w1.wmax());
    long b_lo = ceil_long(kv + n2 - Rational(1) - w2.wmax());
    Rational c_lo = n1 + n2 - Rational(1) - w3.wmax();
    Rational d_hi = kv + n1 + n2 - Rational(2) - w3.wmin();
    Rational d_lo = kv + n1 + n2 - Rational(2) - w3.wmax();
    if (Rational(a_lo) + Rational(b_lo) + c_lo > d_hi)
        throw WindowTooSmall("no fully determined monomial in " + nm.str());
    long a_hi = floor_long(d_hi - Rational(b_lo) - c_lo);
    long b_hi = floor_long(d_hi - Rational(a_lo) - c_lo);
    Rational c_hi = c_lo + Rational(floor_long(d_hi - Rational(a_lo + b_lo) - c_lo));

    Rational n12 = n1 + n2;
    Rational e2_lo = w3.wmin() - n12, e2_hi = w3.wmax() - n12;
    long lv1 = floor_long(w1.wmax() - w1.wmin());
    long lv2 = floor_long(w2.wmax() - w2.wmin());
    long lv3 = floor_long(w3.wmax() - w3.wmin());
    long kvl = ceil_long(kv);
    long q = 0;
    for (long cand :
         {std::abs(a_lo), std::abs(a_hi), std::abs(b_lo), std::abs(b_hi),
          std::abs(floor_long(c_lo)) + 1, std::abs(ceil_long(c_hi)) + 1,
          std::abs(floor_long(e2_lo)) + 1, std::abs(ceil_long(e2_hi)) + 1, kvl + lv1,
          kvl + lv2, kvl + lv3})
        q = std::max(q, cand);
    q += 4;
    int order = static_cast<int>(q) + 2;
    int mlog = y.kmax() + act1.kmax() + act2.kmax() + act3.kmax() + 2;

    VarId x0 = VarId::of("jx0"), x1 = VarId::of("jx1"), x2 = VarId::of("jx2");
    Policy work;
    Rational qr(q);
    work.with(x0, VarPolicy::window(-qr - Rational(2), qr + Rational(2), mlog))
        .with(x1, VarPolicy::window(-qr - Rational(2), qr + Rational(2), mlog))
        .with(x2, VarPolicy::window(-qr - Rational(2), qr + Rational(2), mlog));

    // term 1: x0^{-1} delta((x1-x2)/x0) act3(v, x1) Y(w1, x2) w2
    Series m1(work);
    {
        Series sy = y.apply(Vec::unit(i), Vec::unit(j), x2, work);
        for (const auto& [mono, coef] : sy.terms())
            for (const auto& [key, vec] : act3.apply_vec(Vec::unit(v), coef.vec()))
                m1.accum(mono.times(xpow(x1, -key.first - Rational(1), key.second)), Coef(vec));
    }
    Series t1 =
        delta_kernel(ExpSlot::of_var(x1), ExpSlot::of_var_neg(x2), x0, order, work) * m1;

    // term 2: -x0^{-1} delta((x2-x1)/(-x0)) Y(w1, x2) act2(v, x1) w2; the
    // overall sign is folded into the kernel as (-1)^{x0-exponent}.
    Series m2(work);
    for (const auto& [key1, vec2] : act2.apply_vec(Vec::unit(v), Vec::unit(j))) {
        Monomial f = xpow(x1, -key1.first - Rational(1), key1.second);
        for (const auto& [key2, vec3] : y.apply_vec(Vec::unit(i), vec2))
            m2.accum(f.times(xpow(x2, -key2.first - Rational(1), key2.second)), Coef(vec3));
    }
    Series d2 = delta_kernel(ExpSlot::of_var(x2), ExpSlot::of_var_neg(x1), x0, order, work)
                    .mapped([&](const Monomial& mono, const Coef& c) {
                        long e0 = mono.exp(x0).to_long();
                        return (e0 % 2 == 0) ? c : -c;
                    });
    Series t2 = d2 * m2;

    // term 3: x2^{-1} delta((x1-x0)/x2) Y(act1(v, x0) w1, x2) w2
    Series m3(work);
    for (const auto& [key1, vec1] : act1.apply_vec(Vec::unit(v), Vec::unit(i))) {
        Monomial f = xpow(x0, -key1.first - Rational(1), key1.second);
        for (const auto& [key2, vec3] : y.apply_vec(vec1, Vec::unit(j)))
            m3.accum(f.times(xpow(x2, -key2.first - Rational(1), key2.second)), Coef(vec3));
    }
    Series t3 =
        delta_kernel(ExpSlot::of_var(x1), ExpSlot::of_var_neg(x0), x2, order, work) * m3;

    Series diff = t1 + t2 - t3;
    bool pass = true;
    std::string witness;
    for (const auto& [mono, coef] : diff.terms()) {
        Rational a = -mono.exp(x0) - Rational(1);
        Rational b = -mono.exp(x1) - Rational(1);
        Rational c = -mono.exp(x2) - Rational(1);
        if (a < Rational(a_lo) || b < Rational(b_lo) || c < c_lo) continue;
        Rational d = a + b + c;
        if (d < d_lo || d > d_hi) continue;
        if (!coef.is_zero()) {
            pass = false;
            witness = mono.str();
            break;
        }
    }
    rep.add(nm.str(), pass, witness);
}

void derivative_one(Report& rep, const CheckContext& cx, int i, int j, int mlog) {
    std::ostringstream nm;
    nm << "L(-1)-derivative(i=" << i << ",j=" << j << ")";
    VarId x = VarId::of("dx");
    Policy pw;
    pw.with(x, VarPolicy::window(cx.e_lo - Rational(2), cx.e_hi + Rational(1), mlog));
    Series lhs = cx.y.apply(Vec::unit(i), Vec::unit(j), x, pw).derive(x);
    Vec lw1 = cx.w1.l(-1).apply(Vec::unit(i));
    Series rhs = cx.y.apply(lw1, Vec::unit(j), x, pw);
    Policy cmp;
    cmp.with(x, VarPolicy::window(cx.e_lo - Rational(2), cx.e_hi - Rational(1), mlog));
    Series diff = lhs.restricted(cmp) - rhs.restricted(cmp);
    std::string witness;
    if (!diff.is_zero()) witness = diff.terms().begin()->first.str();
    rep.add(nm.str(), diff.is_zero(), witness);
}

void bracket_one(Report& rep, const CheckContext& cx, int i, int j, int mlog) {
    VarId x = VarId::of("bx");
    Policy pw;
    pw.with(x, VarPolicy::window(cx.e_lo - Rational(2), cx.e_hi + Rational(1), mlog));
    Series s = cx.y.apply(Vec::unit(i), Vec::unit(j), x, pw);
    for (int jj = -1; jj <= 1; ++jj) {
        std::ostringstream nm;
        nm << "L(" << jj << ")-bracket(i=" << i << ",j=" << j << ")";
        Series lhs = map_coeffs(s, [&](const Vec& v) { return cx.w3.l(jj).apply(v); }) -
                     cx.y.apply(Vec::unit(i), cx.w2.l(jj).apply(Vec::unit(j)), x, pw);
        Series rhs(pw);
        for (int ii = 0; ii <= jj + 1; ++ii) {
            Vec src = cx.w1.l(jj - ii).apply(Vec::unit(i));
            Series part = cx.y.apply(src, Vec::unit(j), x, pw)
                              .scaled(Scalar(binomial(Rational(jj + 1), ii)));
            rhs = rhs + part * Series::term(Monomial::power(x, Rational(ii)),
                                            Coef(Rational(1)), pw);
        }
        Rational hi = cx.e_hi + Rational(std::min(jj, 0));
        Policy cmp;
        cmp.with(x, VarPolicy::window(cx.e_lo - Rational(2), hi, mlog));
        Series diff = lhs.restricted(cmp) - rhs.restricted(cmp);
        std::string witness;
        if (!diff.is_zero()) witness = diff.terms().begin()->first.str();
        rep.add(nm.str(), diff.is_zero(), witness);
    }
}

} // namespace

Report validate_axioms(const LogIntertwiner& y, const LogIntertwiner& act1,
                       const LogIntertwiner& act2, const LogIntertwiner& act3,
                       const std::vector<TestTriple>& triples) {
    if (act1.w2_ptr().get() != y.w1_ptr().get() || act1.w3_ptr().get() != y.w1_ptr().get())
        throw ValidationError("first action must act on the first source module");
    if (act2.w2_ptr().get() != y.w2_ptr().get() || act2.w3_ptr().get() != y.w2_ptr().get())
        throw ValidationError("second action must act on the second source module");
    if (act3.w2_ptr().get() != y.w3_ptr().get() || act3.w3_ptr().get() != y.w3_ptr().get())
        throw ValidationError("third action must act on the target module");
    if (act1.w1_ptr().get() != act2.w1_ptr().get() ||
        act1.w1_ptr().get() != act3.w1_ptr().get())
        throw ValidationError("the three actions must share one algebra module");

    Report rep;
    int mlog = y.kmax() + 2;
    std::set<std::pair<int, int>> pairs_done;
    bool local_checks_ran = false;
    for (const TestTriple& tr : triples) {
        jacobi_one(rep, y, act1, act2, act3, tr);
        if (!pairs_done.insert({tr.i, tr.j}).second) continue;
        // The derivative and bracket identities transport sources through
        // L(-1); they are exact only when both sources have room above.
        if (y.w1().weight_of(tr.i) + Rational(1) > y.w1().wmax()) continue;
        if (y.w2().weight_of(tr.j) + Rational(1) > y.w2().wmax()) continue;
        CheckContext cx(y, tr.i, tr.j);
        derivative_one(rep, cx, tr.i, tr.j, mlog);
        bracket_one(rep, cx, tr.i, tr.j, mlog);
        local_checks_ran = true;
    }
    if (!triples.empty() && !local_checks_ran)
        throw WindowTooSmall(
            "no test triple leaves room for the derivative and bracket checks");
    return rep;
}

Report l0_transport_check(const LogIntertwiner& y, const Rational& a, const Rational& b,
                          const Rational& c, int t, int i, int j, int y_order) {
    const GradedModule& w1 = y.w1();
    const GradedModule& w2 = y.w2();
    const GradedModule& w3 = y.w3();
    require_index(w1, i, "first source");
    require_index(w2, j, "second source");
    if (t < 0 || y_order < 0) throw ValidationError("negative transport order");
    Report rep;

    // L(0)-shifted source chains (no factorial normalization here); both
    // identities are polynomial in these, so no nilpotency is required.
    int depth = std::max(t, y_order);
    std::vector<Vec> us{Vec::unit(i)}, vs{Vec::unit(j)};
    for (int p = 0; p < depth; ++p) {
        us.push_back(w1.l(0).apply(us.back()) - us.back().scaled(Scalar(a)));
        vs.push_back(w2.l(0).apply(vs.back()) - vs.back().scaled(Scalar(b)));
    }
    auto uat = [&](int p) { return us[static_cast<std::size_t>(p)]; };
    auto vat = [&](int p) { return vs[static_cast<std::size_t>(p)]; };

    std::map<std::pair<int, int>, std::map<LogIntertwiner::Key, Vec>> cache;
    auto bil = [&](int p, int q) -> const std::map<LogIntertwiner::Key, Vec>& {
        auto it = cache.find({p, q});
        if (it == cache.end()) it = cache.emplace(std::pair{p, q}, y.apply_vec(uat(p), vat(q))).first;
        return it->second;
    };
    auto coeff_of = [&](int p, int q, const Rational& n, int k) -> Vec {
        const auto& m = bil(p, q);
        auto it = m.find({n, k});
        return it == m.end() ? Vec() : it->second;
    };

    // n-support over every source pair of the same total weight: shifted
    // sources stay in their weight spaces, so only those pairs contribute.
    Rational total = w1.weight_of(i) + w2.weight_of(j);
    std::set<Rational> ns;
    for (const auto& [key, fam] : y.families())
        for (const auto& [pair, vec] : fam)
            if (w1.weight_of(pair.first) + w2.weight_of(pair.second) == total)
                ns.insert(key.first);

    // coefficient form: (L(0) - a - b + n + 1)^t acting on the (n; k) slot
    // against the binomially weighted higher-log slots of shifted sources.
    {
        bool pass = true;
        std::string witness;
        for (const Rational& n : ns) {
            Rational shift = n + Rational(1) - a - b;
            for (int k = 0; k <= y.kmax() && pass; ++k) {
                Vec lhs = y.coeff(n, k, i, j);
                for (int s = 0; s < t; ++s) lhs = w3.l(0).apply(lhs) + lhs.scaled(Scalar(shift));
                Vec rhs;
                for (int ii = 0; ii <= t; ++ii)
                    for (int jj = 0; ii + jj <= t; ++jj) {
                        int ll = t - ii - jj;
                        if (k + ll > y.kmax()) continue;
                        Rational f = factorial(t) * binomial(Rational(k + ll), ll) /
                                     (factorial(ii) * factorial(jj));
                        rhs += coeff_of(ii, jj, n, k + ll).scaled(Scalar(f));
                    }
                if (!(lhs == rhs)) {
                    pass = false;
                    witness = "(n=" + n.str() + ", k=" + std::to_string(k) + ")";
                }
            }
            if (!pass) break;
        }
        rep.add("coefficient transport t=" + std::to_string(t), pass, witness);
    }

    // generating form: e^{y(L(0)-c)} Y(w1, x) w2 agrees with
    // e^{y(x d/dx - c + a + b)} Y(e^{y(L(0)-a)} w1, x) e^{y(L(0)-b)} w2
    // through the requested y-order.
    {
        CheckContext cx(y, i, j);
        int mlog = y.kmax() + 2;
        VarId x = VarId::of("tx"), yv = VarId::of("ty");
        Policy pw;
        pw.with(x, VarPolicy::window(cx.e_lo - Rational(1), cx.e_hi + Rational(1), mlog))
            .with(yv, VarPolicy::expansion(y_order, mlog));
        Series s = y.apply(Vec::unit(i), Vec::unit(j), x, pw);

        Series lhs(pw);
        {
            Series pow = s;
            for (int o = 0; o <= y_order; ++o) {
                Series slice = pow.scaled(Scalar(Rational(1) / factorial(o)));
                for (const auto& [mono, coefv] : slice.terms())
                    lhs.accum(mono.times(Monomial::power(yv, Rational(o))), coefv);
                if (o < y_order)
                    pow = map_coeffs(pow, [&](const Vec& v) {
                        return w3.l(0).apply(v) - v.scaled(Scalar(c));
                    });
            }
        }
        Series rhs(pw);
        for (int ii = 0; ii <= y_order; ++ii)
            for (int jj = 0; ii + jj <= y_order; ++jj) {
                Series base(pw);
                for (const auto& [key, vec] : bil(ii, jj))
                    base.accum(xpow(x, -key.first - Rational(1), key.second), Coef(vec));
                if (base.is_zero()) continue;
                for (int ll = 0; ii + jj + ll <= y_order; ++ll) {
                    Rational f = Rational(1) / (factorial(ii) * factorial(jj) * factorial(ll));
                    Series part = base.scaled(Scalar(f));
                    for (const auto& [mono, coefv] : part.terms())
                        rhs.accum(mono.times(Monomial::power(yv, Rational(ii + jj + ll))),
                                  coefv);
                    base = base.x_ddx(x) + base.scaled(Scalar(a + b - c));
                }
            }
        Series diff = lhs - rhs;
        std::string witness;
        if (!diff.is_zero()) witness = diff.terms().begin()->first.str();
        rep.add("generating transport order=" + std::to_string(y_order), diff.is_zero(),
                witness);
    }
    return rep;
}

Report degree_bounds_check(const LogIntertwiner& y, int i, int k1, int j, int k2,
                           const Vec& dual, const Rational& n3, int k3) {
    const GradedModule& w1 = y.w1();
    const GradedModule& w2 = y.w2();
    const GradedModule& w3 = y.w3();
    require_index(w1, i, "first source");
    require_index(w2, j, "second source");
    if (k1 < 1 || k2 < 1 || k3 < 1) throw ValidationError("log ranks must be at least 1");
    if (auto w = w3.homogeneous_weight(dual); w && !(*w == n3))
        throw ValidationError("dual vector weight disagrees with the declared n3");

    Report rep;
    Rational estar = n3 - w1.weight_of(i) - w2.weight_of(j);
    CheckContext cx(y, i, j);
    int mlog = y.kmax() + 2;
    VarId x = VarId::of("gx");
    Policy pw;
    pw.with(x, VarPolicy::window(cx.e_lo - Rational(1), cx.e_hi + Rational(1), mlog));

    Series f(pw);
    for (const auto& [key, fam] : y.families()) {
        auto it = fam.find({i, j});
        if (it == fam.end()) continue;
        Scalar s{Rational(0)};
        for (const auto& [row, val] : it->second.entries()) s += dual.at(row) * val;
        if (!s.is_zero()) f.accum(xpow(x, -key.first - Rational(1), key.second), Coef(s));
    }

    {
        bool pass = true;
        std::string witness;
        for (const auto& [mono, coefv] : f.terms())
            if (!(mono.exp(x) == estar)) {
                pass = false;
                witness = mono.str();
                break;
            }
        rep.add("pairing exponent support", pass, witness);
    }
    {
        int bound = std::max(k1 + k2 + k3 - 3, 0);
        int got = f.max_log_deg(x);
        rep.add("pairing log bound <= " + std::to_string(bound), got <= bound,
                got <= bound ? "" : "log degree " + std::to_string(got));
    }
    {
        int thr = std::max(k1 + k2 + k3 - 2, 1);
        OdeResult r = ode_membership(f, estar, thr, x);
        rep.add("log nilpotency threshold " + std::to_string(thr), r.member,
                r.member ? "" : r.witness.str());
    }
    return rep;
}

LogIntertwiner xt_transform(const LogIntertwiner& y, int t, std::optional<Rational> coset) {
    if (t < 0) throw ValidationError("negative log shift");
    LogIntertwiner out(y.w1_ptr(), y.w2_ptr(), y.w3_ptr(), y.kmax());
    for (const auto& [key, fam] : y.families()) {
        const auto& [n, k] = key;
        if (k < t) continue;
        if (coset && !(frac_mod1(n) == frac_mod1(*coset))) continue;
        Scalar f{binomial(Rational(k), t)};
        for (const auto& [pair, vec] : fam)
            out.set_coeff(n, k - t, pair.first, pair.second, vec.scaled(f));
    }
    return out;
}

Report conjugation_checks(const LogIntertwiner& y, int i, int j, int order) {
    const GradedModule& w1 = y.w1();
    const GradedModule& w2 = y.w2();
    const GradedModule& w3 = y.w3();
    require_index(w1, i, "first source");
    require_index(w2, j, "second source");
    if (order < 0) throw ValidationError("negative conjugation order");
    Report rep;
    CheckContext cx(y, i, j);
    int mlog = y.kmax() + w3.dim() + 2;
    Rational n1 = w1.weight_of(i), n2 = w2.weight_of(j);
    VarId x = VarId::of("cx"), yv = VarId::of("cy");

    // translation: e^{y L(-1)} Y(w1, x) e^{-y L(-1)} = Y(w1, x + y)
    {
        if (n2 + Rational(order) > w2.wmax())
            throw WindowTooSmall("translation conjugation needs depth room over the second "
                                 "source weight");
        Policy pw;
        pw.with(x, VarPolicy::window(cx.e_lo - Rational(order) - Rational(1),
                                     cx.e_hi + Rational(1), mlog))
            .with(yv, VarPolicy::expansion(order, mlog));
        Series s = y.apply(Vec::unit(i), Vec::unit(j), x, pw);
        Series rhs = s.subst_shift(x, yv, order);
        Series lhs(pw);
        Vec v2 = Vec::unit(j);
        Rational f2(1);
        for (int sp = 0; sp <= order; ++sp) {
            if (sp > 0) {
                v2 = w2.l(-1).apply(v2);
                f2 = f2 * Rational(-1) / Rational(sp);
            }
            if (v2.is_zero()) break;
            Series inner = y.apply(Vec::unit(i), v2.scaled(Scalar(f2)), x, pw);
            Rational f3(1);
            for (int ss = 0; sp + ss <= order; ++ss) {
                if (ss > 0) {
                    inner = map_coeffs(inner, [&](const Vec& v) { return w3.l(-1).apply(v); });
                    f3 = f3 / Rational(ss);
                }
                if (inner.is_zero()) break;
                Series part = inner.scaled(Scalar(f3));
                for (const auto& [mono, coefv] : part.terms())
                    lhs.accum(mono.times(Monomial::power(yv, Rational(sp + ss))), coefv);
            }
        }
        bool pass = true;
        std::string witness;
        for (int sl = 0; sl <= order && pass; ++sl) {
            Policy cm;
            cm.with(x, VarPolicy::window(cx.e_lo - Rational(order) - Rational(1),
                                         cx.e_hi - Rational(sl), mlog));
            Series dd = lhs.coefficient_slice(yv, Rational(sl), 0).restricted(cm) -
                        rhs.coefficient_slice(yv, Rational(sl), 0).restricted(cm);
            if (!dd.is_zero()) {
                pass = false;
                witness = "y-order " + std::to_string(sl) + ": " +
                          dd.terms().begin()->first.str();
            }
        }
        rep.add("translation conjugation", pass, witness);
    }

    // dilation: t^{L(0)} Y(w1, x) t^{-L(0)} = Y(t^{L(0)} w1, x t), exact.
    {
        Rational wb_lo = -w2.wmax(), wb_hi = w3.wmax();
        for (const Rational& cand : {w1.wmin() + cx.e_lo, w3.wmin() - w2.wmax(), w1.wmin(),
                                     w3.wmin(), -w2.wmax()})
            wb_lo = rat_min(wb_lo, cand);
        for (const Rational& cand : {w1.wmax() + cx.e_hi, w3.wmax() - w2.wmin(), w1.wmax(),
                                     w3.wmax(), -w2.wmin()})
            wb_hi = rat_max(wb_hi, cand);
        wb_lo -= Rational(1);
        wb_hi += Rational(1);
        int mlogb = y.kmax() + w2.dim() + w3.dim() + 2;
        Policy pb;
        pb.with(x, VarPolicy::window(cx.e_lo - Rational(1), cx.e_hi + Rational(1), mlogb))
            .with(yv, VarPolicy::window(wb_lo, wb_hi, mlogb));
        Series rhs(pb);
        {
            Series p1 = w1.power_l0(Vec::unit(i), +1, yv, pb);
            for (const auto& [mono, coefv] : p1.terms())
                for (const auto& [key, vec] : y.apply_vec(coefv.vec(), Vec::unit(j)))
                    rhs.accum(mono.times(xpow(x, -key.first - Rational(1), key.second)),
                              Coef(vec));
            rhs = rhs.subst_scale(x, yv);
        }
        Series lhs(pb);
        {
            Series p2 = w2.power_l0(Vec::unit(j), -1, yv, pb);
            for (const auto& [mono2, coef2] : p2.terms())
                for (const auto& [key, vec3] : y.apply_vec(Vec::unit(i), coef2.vec())) {
                    Series p3 = w3.power_l0(vec3, +1, yv, pb);
                    Monomial base = mono2.times(xpow(x, -key.first - Rational(1), key.second));
                    for (const auto& [mono3, coef3] : p3.terms())
                        lhs.accum(base.times(mono3), coef3);
                }
        }
        Series diff = lhs - rhs;
        std::string witness;
        if (!diff.is_zero()) witness = diff.terms().begin()->first.str();
        rep.add("dilation conjugation", diff.is_zero(), witness);
    }

    // composite: e^{y L(1)} Y(w1, x) e^{-y L(1)} =
    //            Y((1 - yx)^{-2 L(0)} w1, x (1 - yx)^{-1}) for L(1) w1 = 0.
    {
        if (!w1.l(1).apply(Vec::unit(i)).is_zero())
            throw ValidationError(
                "composite conjugation requires an L(1)-annihilated first source");
        Policy pc;
        pc.with(x, VarPolicy::window(cx.e_lo - Rational(1), cx.e_hi + Rational(order) + Rational(1),
                                     mlog))
            .with(yv, VarPolicy::expansion(order, mlog));

        Series lhs(pc);
        {
            Vec v2 = Vec::unit(j);
            Rational f2(1);
            for (int sp = 0; sp <= order; ++sp) {
                if (sp > 0) {
                    v2 = w2.l(1).apply(v2);
                    f2 = f2 * Rational(-1) / Rational(sp);
                }
                if (v2.is_zero()) break;
                Series inner = y.apply(Vec::unit(i), v2.scaled(Scalar(f2)), x, pc);
                Rational f3(1);
                for (int ss = 0; sp + ss <= order; ++ss) {
                    if (ss > 0) {
                        inner = map_coeffs(inner, [&](const Vec& v) { return w3.l(1).apply(v); });
                        f3 = f3 / Rational(ss);
                    }
                    if (inner.is_zero()) break;
                    Series part = inner.scaled(Scalar(f3));
                    for (const auto& [mono, coefv] : part.terms())
                        lhs.accum(mono.times(Monomial::power(yv, Rational(sp + ss))), coefv);
                }
            }
        }

        Series rhs(pc);
        {
            // (1 - yx)^{-2 L(0)} w1 splits over u = yx into the numeric part
            // (1-u)^{-2 n1} times exp(-2 log(1-u) (L(0) - n1)); the argument
            // substitution x -> x (1-u)^{-1} touches only the operator image,
            // never these u-prefactors.
            Series base(pc);
            for (int sexp = 0; sexp <= order; ++sexp) {
                Rational cf = binomial(Rational(-2) * n1, sexp) *
                              Rational((sexp % 2 == 0) ? 1 : -1);
                if (cf.is_zero()) continue;
                Monomial m = Monomial::power(x, Rational(sexp));
                m.set_exp(yv, Rational(sexp));
                base.accum(m, Coef(Scalar(cf)));
            }
            Series lnu(pc); // -2 log(1 - u) = 2 sum u^m / m
            for (int m = 1; m <= order; ++m) {
                Monomial mm = Monomial::power(x, Rational(m));
                mm.set_exp(yv, Rational(m));
                lnu.accum(mm, Coef(Scalar(Rational(2, m))));
            }
            Series g(pc); // x (1-u)^{-1} = x (1 + g), g = sum_{m>=1} u^m
            for (int m = 1; m <= order; ++m) {
                Monomial mm = Monomial::power(x, Rational(m));
                mm.set_exp(yv, Rational(m));
                g.accum(mm, Coef(Scalar(Rational(1))));
            }
            Vec nv = Vec::unit(i);
            Series lnp = Series::constant(Coef(Rational(1)), pc);
            Rational pf(1);
            for (int p = 0; !nv.is_zero(); ++p) {
                if (p > 0) {
                    nv = w1.l(0).apply(nv) - nv.scaled(Scalar(n1));
                    pf = pf / Rational(p);
                    lnp = lnp * lnu;
                    if (p > w1.dim())
                        throw NotNilpotent("L(0) fails to be locally nilpotent");
                }
                if (nv.is_zero()) break;
                Series img = y.apply(nv.scaled(Scalar(pf)), Vec::unit(j), x, pc)
                                 .subst_multiply(x, g);
                rhs = rhs + base * lnp * img;
            }
        }
        Policy cm;
        cm.with(x, VarPolicy::window(cx.e_lo - Rational(1), cx.e_hi, mlog))
            .with(yv, VarPolicy::expansion(order, mlog));
        Series diff = lhs.restricted(cm) - rhs.restricted(cm);
        std::string witness;
        if (!diff.is_zero()) witness = diff.terms().begin()->first.str();
        rep.add("composite conjugation", diff.is_zero(), witness);
    }
    return rep;
}

Vec recover_coefficients(const LogIntertwiner& y, int i, int j, const Rational& n, int r) {
    const GradedModule& w1 = y.w1();
    const GradedModule& w2 = y.w2();
    const GradedModule& w3 = y.w3();
    require_index(w1, i, "first source");
    require_index(w2, j, "second source");
    if (r < 0) throw ValidationError("negative log degree");
    Rational n1 = w1.weight_of(i), n2 = w2.weight_of(j);
    Rational shift = n + Rational(1) - n1 - n2;
    auto pmap = [&](const Vec& v) { return w3.l(0).apply(v) + v.scaled(Scalar(shift)); };

    std::vector<Vec> us{Vec::unit(i)}, vs{Vec::unit(j)};
    while (!us.back().is_zero() && static_cast<int>(us.size()) <= w1.dim())
        us.push_back(w1.l(0).apply(us.back()) - us.back().scaled(Scalar(n1)));
    while (!vs.back().is_zero() && static_cast<int>(vs.size()) <= w2.dim())
        vs.push_back(w2.l(0).apply(vs.back()) - vs.back().scaled(Scalar(n2)));
    auto uat = [&](int p) { return p < static_cast<int>(us.size()) ? us[p] : Vec(); };
    auto vat = [&](int p) { return p < static_cast<int>(vs.size()) ? vs[p] : Vec(); };

    // log-free observables only: the (n; 0) slot of shifted source pairs
    std::map<std::pair<int, int>, Vec> c0;
    auto c0_of = [&](int p, int q) -> const Vec& {
        auto it = c0.find({p, q});
        if (it == c0.end()) {
            auto img = y.apply_vec(uat(p), vat(q));
            auto jt = img.find({n, 0});
            Vec val = jt == img.end() ? Vec() : jt->second;
            // the recursion below relies on (L(0) + shift) being nilpotent
            Vec probe = val;
            int steps = 0;
            while (!probe.is_zero()) {
                probe = pmap(probe);
                if (++steps > w3.dim())
                    throw SingularRecovery("weight operator is not nilpotent on the slot");
            }
            it = c0.emplace(std::pair{p, q}, std::move(val)).first;
        }
        return it->second;
    };

    std::map<std::tuple<int, int, int>, Vec> memo;
    std::function<Vec(int, int, int)> frec = [&](int p, int q, int t) -> Vec {
        auto it = memo.find({p, q, t});
        if (it != memo.end()) return it->second;
        Vec o = c0_of(p, q);
        for (int s = 0; s < t; ++s) o = pmap(o);
        Vec val;
        if (t == 0) {
            val = o;
        } else {
            val = o.scaled(Scalar(Rational(1) / factorial(t)));
            for (int pp = 0; pp <= t; ++pp)
                for (int qq = 0; pp + qq <= t; ++qq) {
                    if (pp + qq == 0) continue;
                    int ll = t - pp - qq;
                    Vec sub = frec(p + pp, q + qq, ll);
                    if (sub.is_zero()) continue;
                    val -= sub.scaled(Scalar(Rational(1) / (factorial(pp) * factorial(qq))));
                }
        }
        memo.emplace(std::tuple{p, q, t}, val);
        return val;
    };
    return frec(0, 0, r);
}

} // namespace logtensor
