#include "logtensor/transforms.hpp"

#include "logtensor/errors.hpp"

namespace logtensor {

namespace {

// Product with explicit promotion: mixing the exact and complex layers is a
// deliberate act here (phases of non-half-integer exponents), not an
// accident, so route it through to_cpx instead of letting Scalar throw.
Scalar mul_any(const Scalar& a, const Scalar& b) {
    if (a.is_zero() || b.is_zero()) return Scalar();
    if (a.is_exact() != b.is_exact()) return Scalar::complex(a.to_cpx() * b.to_cpx());
    return a * b;
}

Vec scale_any(const Vec& v, const Scalar& s) {
    Vec out;
    for (const auto& [idx, val] : v.entries()) {
        Scalar c = mul_any(val, s);
        if (!c.is_zero()) out.set(idx, c);
    }
    return out;
}

// Matrix-vector product tolerating complex-layer vector entries (the matrix
// side, module structure, is always exact).
Vec apply_any(const Mat& m, const Vec& v) {
    Vec out;
    for (const auto& [c, val] : v.entries()) {
        for (int r = 0; r < m.rows(); ++r) {
            Scalar add = mul_any(m.at(r, c), val);
            if (add.is_zero()) continue;
            Scalar cur = out.at(r);
            cur += add;
            out.set(r, cur);
        }
    }
    return out;
}

std::vector<Scalar> scalar_powers(const Scalar& z, int top) {
    std::vector<Scalar> p{Scalar(Rational(1))};
    for (int i = 1; i <= top; ++i) p.push_back(p.back() * z);
    return p;
}

void require_matching(const GradedModule& primal, const GradedModule& dual) {
    if (dual.dim() != primal.dim())
        throw ValidationError("supplied dual module has the wrong dimension");
    for (int i = 0; i < primal.dim(); ++i) {
        if (!(dual.weight_of(i) == primal.weight_of(i)))
            throw ValidationError("supplied dual module has mismatched weights");
    }
}

} // namespace

Scalar branch_constant(int r) {
    return Scalar(Rational(2L * r + 1)) * Scalar::zeta();
}

LogIntertwiner omega_transform(const LogIntertwiner& y, int r) {
    LogIntertwiner out(y.w2_ptr(), y.w1_ptr(), y.w3_ptr(), y.kmax());
    const Mat& raise = y.w3().l(-1);
    const Rational odd(2L * r + 1);
    std::vector<Scalar> zp = scalar_powers(branch_constant(r), y.kmax());

    for (const auto& [key, fam] : y.families()) {
        const auto& [n, k] = key;
        // phase attached to x^{-n-1}: exp((-n-1) zeta_r)
        Scalar phase = phase_exp_i_pi(-(n + Rational(1)) * odd);
        for (const auto& [pair, vec] : fam) {
            Vec cur = vec;
            for (long m = 0; !cur.is_zero(); ++m) {
                if (m > y.w3().dim())
                    throw CalcError("translation dressing failed to terminate");
                if (m > 0) {
                    cur = apply_any(raise, cur);
                    if (cur.is_zero()) break;
                }
                Rational invf = Rational(1) / factorial(m);
                for (int kp = 0; kp <= k; ++kp) {
                    Scalar f = Scalar(binomial(Rational(k), kp) * invf) * zp[static_cast<std::size_t>(k - kp)];
                    Vec add = scale_any(cur, mul_any(f, phase));
                    if (!add.is_zero())
                        out.set_coeff(n - Rational(m), kp, pair.second, pair.first, add);
                }
            }
        }
    }
    return out;
}

LogIntertwiner a_transform(const LogIntertwiner& y, int r,
                           std::shared_ptr<const GradedModule> w2c,
                           std::shared_ptr<const GradedModule> w3c) {
    if (!w2c) w2c = std::make_shared<const GradedModule>(y.w2().contragredient());
    else require_matching(y.w2(), *w2c);
    if (!w3c) w3c = std::make_shared<const GradedModule>(y.w3().contragredient());
    else require_matching(y.w3(), *w3c);

    const GradedModule& w1 = y.w1();
    const Mat& lower = w1.l(1);
    const Mat nil = w1.split_l0().second;
    const Rational odd(2L * r + 1);

    // Nilpotent chains N^d e_i of the first source; their maximal depth sets
    // the extra log room the dressing x^{-2 L(0)} can create.
    std::vector<std::vector<Vec>> chains(static_cast<std::size_t>(w1.dim()));
    int pmax = 0;
    for (int i = 0; i < w1.dim(); ++i) {
        auto& ch = chains[static_cast<std::size_t>(i)];
        ch.push_back(Vec::unit(i));
        while (true) {
            Vec nxt = nil.apply(ch.back());
            if (nxt.is_zero()) break;
            if (static_cast<int>(ch.size()) > w1.dim())
                throw ValidationError("weight operator of the first source is not nilpotent");
            ch.push_back(nxt);
        }
        pmax = std::max(pmax, static_cast<int>(ch.size()) - 1);
    }

    LogIntertwiner out(y.w1_ptr(), w3c, w2c, y.kmax() + pmax);
    std::vector<Scalar> zp = scalar_powers(branch_constant(r), pmax);

    for (int i = 0; i < w1.dim(); ++i) {
        const Rational& a = w1.weight_of(i);
        Scalar phase = phase_exp_i_pi(odd * a);  // exp(zeta_r * wt(e_i))
        const auto& ch = chains[static_cast<std::size_t>(i)];
        for (int d = 0; d < static_cast<int>(ch.size()); ++d) {
            for (int p = 0; p <= d; ++p) {
                const int q = d - p;
                // (-2 log x)^p / p! from x^{-2 L(0)}, zeta_r^q / q! from
                // e^{zeta_r L(0)}; both act through the nilpotent part only.
                Scalar zf = Scalar(pow(Rational(-2), p) / (factorial(p) * factorial(q))) *
                            zp[static_cast<std::size_t>(q)];
                Vec mv = ch[static_cast<std::size_t>(d)];
                for (long m = 0; !mv.is_zero(); ++m) {
                    if (m > w1.dim())
                        throw CalcError("lowering dressing failed to terminate");
                    if (m > 0) {
                        mv = lower.apply(mv);
                        if (mv.is_zero()) break;
                    }
                    Scalar fm = zf * Scalar(Rational(1) / factorial(m));
                    for (const auto& [key, fam] : y.families()) {
                        const auto& [n, kk] = key;
                        const Rational np = Rational(2) * a - Rational(m) - n - Rational(2);
                        const int kp = p + kk;
                        const Scalar sign(Rational((kk % 2 == 0) ? 1 : -1));
                        for (const auto& [pr, vec] : fam) {
                            Scalar mu = mv.at(pr.first);
                            if (mu.is_zero()) continue;
                            Scalar base = fm * sign * mu;
                            for (const auto& [t, val] : vec.entries()) {
                                Scalar tot = mul_any(mul_any(base, val), phase);
                                if (tot.is_zero()) continue;
                                Vec add;
                                add.set(pr.second, tot);
                                out.set_coeff(np, kp, i, t, add);
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

} // namespace logtensor
