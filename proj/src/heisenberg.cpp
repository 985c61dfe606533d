#include "logtensor/heisenberg.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include "logtensor/errors.hpp"

namespace logtensor {

namespace {

// Oscillator partition, parts descending; a state of the symbolic Fock
// engine is a partition together with a zero-mode slot power.
using Pt = std::vector<long>;
using FKey = std::pair<Pt, int>;
using FVec = std::map<FKey, Rational>;

long level_of(const Pt& p) { return std::accumulate(p.begin(), p.end(), 0L); }

void accumulate(FVec& into, const FKey& k, const Rational& c) {
    if (c.is_zero()) return;
    Rational& slot = into[k];
    slot += c;
    if (slot.is_zero()) into.erase(k);
}

void accumulate(FVec& into, const FVec& v, const Rational& scale) {
    for (const auto& [k, c] : v) accumulate(into, k, c * scale);
}

// a(m) on one state: creation prepends a part, annihilation removes one copy
// of m with multiplicity factor, and a(0) acts as momentum plus slot shift.
FVec apply_a(long m, const FKey& st, const Rational& momentum, int rank) {
    FVec out;
    const auto& [part, slot] = st;
    if (m < 0) {
        Pt p = part;
        p.push_back(-m);
        std::sort(p.begin(), p.end(), std::greater<long>());
        out[{std::move(p), slot}] = Rational(1);
    } else if (m > 0) {
        long count = static_cast<long>(std::count(part.begin(), part.end(), m));
        if (count > 0) {
            Pt p = part;
            p.erase(std::find(p.begin(), p.end(), m));
            out[{std::move(p), slot}] = Rational(count * m);
        }
    } else {
        if (!momentum.is_zero()) out[{part, slot}] = momentum;
        if (slot + 1 < rank) accumulate(out, {part, slot + 1}, Rational(1));
    }
    return out;
}

FVec apply_a(long m, const FVec& v, const Rational& momentum, int rank) {
    FVec out;
    for (const auto& [k, c] : v) accumulate(out, apply_a(m, k, momentum, rank), c);
    return out;
}

// L(n) = (1/2) sum_j :a(j) a(n-j):, evaluated exactly (no truncation) on a
// symbolic state; callers project onto the stored window afterwards.
FVec apply_l(long n, const FKey& st, const Rational& momentum, int rank) {
    FVec out;
    long lev = level_of(st.first);
    long qhi = std::max({lev, 0L, n});
    for (long q = n - qhi; q <= qhi; ++q) {
        long p = n - q;
        if (p > q) continue;
        if (q > 0 && std::count(st.first.begin(), st.first.end(), q) == 0) continue;
        FVec tmp = apply_a(q, st, momentum, rank);
        if (tmp.empty()) continue;
        FVec res = apply_a(p, tmp, momentum, rank);
        accumulate(out, res, p == q ? Rational(1, 2) : Rational(1));
    }
    return out;
}

std::vector<Pt> partitions_of(long n, long max_part) {
    if (n == 0) return {Pt{}};
    std::vector<Pt> out;
    for (long first = std::min(n, max_part); first >= 1; --first) {
        for (Pt rest : partitions_of(n - first, first)) {
            Pt p;
            p.reserve(rest.size() + 1);
            p.push_back(first);
            p.insert(p.end(), rest.begin(), rest.end());
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::string state_name(const Pt& p, int slot) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) os << ",";
        os << p[i];
    }
    os << "|" << slot << "]";
    return os.str();
}

using IndexMap = std::map<FKey, int>;

IndexMap index_map(const FockModule& fm) {
    IndexMap m;
    for (std::size_t i = 0; i < fm.states.size(); ++i) m[fm.states[i]] = static_cast<int>(i);
    return m;
}

// Project a symbolic combination onto the stored basis, dropping states
// beyond the oscillator cutoff (they lie outside the weight window).
Vec project_fvec(const FVec& v, const IndexMap& idx, int trunc) {
    Vec out;
    for (const auto& [k, c] : v) {
        if (level_of(k.first) > trunc) continue;
        auto it = idx.find(k);
        if (it == idx.end())
            throw CalcError("internal: missing Fock state " + state_name(k.first, k.second));
        out.set(it->second, out.at(it->second) + Scalar(c));
    }
    return out;
}

Mat op_matrix(const std::function<FVec(const FKey&)>& op, const FockModule& fm,
              const IndexMap& idx) {
    int d = static_cast<int>(fm.states.size());
    Mat m(d, d);
    for (int col = 0; col < d; ++col) {
        Vec image = project_fvec(op(fm.states[static_cast<std::size_t>(col)]), idx, fm.trunc);
        for (const auto& [row, s] : image.entries()) m.at(row, col) += s;
    }
    return m;
}

// Jordan transfer coefficients c_{s,t}: nu1^s nu2^t maps to c_{s,t} nu^{s+t}
// subject to c_{s+1,t} + c_{s,t+1} = c_{s,t} wherever the target rank keeps
// degree s+t+1 alive, with c_{0,0} = 1 and symmetric tie-breaking.
std::map<std::pair<int, int>, Rational> solve_slot_map(int m1, int m2) {
    std::map<std::pair<int, int>, Rational> c;
    auto valid = [&](int s, int t) { return s >= 0 && t >= 0 && s < m1 && t < m2; };
    auto get = [&](int s, int t) -> Rational {
        auto it = c.find({s, t});
        return it == c.end() ? Rational(0) : it->second;
    };
    c[{0, 0}] = Rational(1);
    for (int d = 1; d <= m1 + m2 - 2; ++d) {
        std::vector<std::pair<int, int>> eqs;
        for (int s = 0; s <= d - 1; ++s) {
            int t = d - 1 - s;
            if (valid(s, t) && s + t <= m1 + m2 - 3) eqs.push_back({s, t});
        }
        bool progress = true;
        while (progress) {
            progress = false;
            for (const auto& [s, t] : eqs) {
                bool u1 = valid(s + 1, t) && c.count({s + 1, t}) == 0;
                bool u2 = valid(s, t + 1) && c.count({s, t + 1}) == 0;
                if (u1 && !u2) {
                    c[{s + 1, t}] = get(s, t) - get(s, t + 1);
                    progress = true;
                } else if (u2 && !u1) {
                    c[{s, t + 1}] = get(s, t) - get(s + 1, t);
                    progress = true;
                }
            }
        }
        for (const auto& [s, t] : eqs) {
            if (valid(s + 1, t) && c.count({s + 1, t}) == 0 && valid(s, t + 1) &&
                c.count({s, t + 1}) == 0) {
                if (m1 != m2 || s != t)
                    throw SlotMismatch("underdetermined Jordan slot transfer at degree " +
                                       std::to_string(d));
                Rational half = get(s, t) * Rational(1, 2);
                c[{s + 1, t}] = half;
                c[{s, t + 1}] = half;
            }
        }
    }
    for (int s = 0; s < m1; ++s)
        for (int t = 0; t < m2; ++t) {
            if (s + t > m1 + m2 - 3) continue;
            if (!(get(s + 1, t) + get(s, t + 1) == get(s, t)))
                throw SlotMismatch("inconsistent Jordan slot transfer at (" + std::to_string(s) +
                                   "," + std::to_string(t) + ")");
        }
    return c;
}

// Multisets of created oscillators with total size <= budget, as partitions.
std::vector<Pt> creation_sets(long budget) {
    std::vector<Pt> out;
    for (long tot = 0; tot <= budget; ++tot) {
        auto ps = partitions_of(tot, tot == 0 ? 1 : tot);
        out.insert(out.end(), ps.begin(), ps.end());
    }
    return out;
}

// Submultiset choices e_m <= r_m of a partition, with the product of
// binomial coefficients binom(r_m, e_m) carried along.
struct SubChoice {
    Pt removed;   // chosen parts (descending)
    Pt remaining; // partition minus chosen
    long count = 0;
    Rational binom_coef = Rational(1);
};

std::vector<SubChoice> submultisets(const Pt& p) {
    std::map<long, long> mult;
    for (long m : p) ++mult[m];
    std::vector<SubChoice> out;
    out.push_back({});
    for (const auto& [m, r] : mult) {
        std::vector<SubChoice> next;
        for (const auto& base : out) {
            for (long e = 0; e <= r; ++e) {
                SubChoice sc = base;
                for (long q = 0; q < e; ++q) sc.removed.push_back(m);
                for (long q = 0; q < r - e; ++q) sc.remaining.push_back(m);
                sc.count += e;
                sc.binom_coef *= binomial(Rational(r), e);
                next.push_back(std::move(sc));
            }
        }
        out = std::move(next);
    }
    for (auto& sc : out) {
        std::sort(sc.removed.begin(), sc.removed.end(), std::greater<long>());
        std::sort(sc.remaining.begin(), sc.remaining.end(), std::greater<long>());
    }
    return out;
}

FockModule build_fock_named(const std::string& name, const Rational& momentum, int rank,
                            int trunc, long label_den) {
    if (rank < 1) throw ValidationError("Fock rank must be positive");
    if (trunc < 0) throw ValidationError("Fock depth must be nonnegative");
    if (rank > 3 || trunc > 8)
        throw ScaleExceeded("Fock construction supports rank <= 3 and depth <= 8");
    if (label_den <= 0) throw ValidationError("label scale must be positive");
    Rational lbl = momentum * Rational(label_den);
    if (!lbl.is_integer())
        throw ValidationError("momentum " + momentum.str() + " is not integral at label scale " +
                              std::to_string(label_den));

    Rational base_wt = momentum * momentum * Rational(1, 2);
    std::vector<std::pair<Pt, int>> states;
    std::vector<BasisVector> basis;
    for (long lev = 0; lev <= trunc; ++lev) {
        for (const Pt& p : partitions_of(lev, lev == 0 ? 1 : lev)) {
            for (int slot = 0; slot < rank; ++slot) {
                states.push_back({p, slot});
                basis.push_back({state_name(p, slot), base_wt + Rational(lev), {lbl.to_long()}});
            }
        }
    }

    auto gm = std::make_shared<GradedModule>(name, std::move(basis), base_wt,
                                             base_wt + Rational(trunc), Rational(1));
    FockModule fm{gm, momentum, rank, trunc, std::move(states)};
    IndexMap idx = index_map(fm);

    gm->add_generator("a", {Rational(1), {0}, {}, false});
    gm->add_generator("omega", {Rational(2), {0}, {}, true});
    for (long n = -(trunc + 1); n <= trunc + 1; ++n) {
        gm->set_mode("a", Rational(n),
                     op_matrix([&](const FKey& st) { return apply_a(n, st, momentum, rank); }, fm,
                               idx));
        Mat lmat = op_matrix([&](const FKey& st) { return apply_l(n, st, momentum, rank); }, fm,
                             idx);
        gm->set_mode("omega", Rational(n + 1), lmat);
        if (n >= -1 && n <= 1) gm->set_l(static_cast<int>(n), std::move(lmat));
    }
    gm->validate();
    return fm;
}

} // namespace

int FockModule::state_index(const std::vector<long>& partition, int slot) const {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i].first == partition && states[i].second == slot) return static_cast<int>(i);
    return -1;
}

FockModule build_fock(const Rational& momentum, int rank, int trunc, long label_den) {
    std::ostringstream nm;
    nm << "F(" << momentum.str() << ";" << rank << ")";
    return build_fock_named(nm.str(), momentum, rank, trunc, label_den);
}

FockModule build_voa(int trunc) { return build_fock_named("V", Rational(0), 1, trunc, 1); }

LogIntertwiner build_intertwiner(const FockModule& f1, const FockModule& f2,
                                 const FockModule& f3) {
    const Rational &lambda = f1.momentum, &mu = f2.momentum;
    int m1 = f1.rank, m2 = f2.rank;
    if (!(f3.momentum == lambda + mu))
        throw ValidationError("target momentum must be the sum of the source momenta");
    if (f3.rank != m1 + m2 - 1) throw ValidationError("target rank must be m1 + m2 - 1");
    int n3 = f3.trunc;

    auto cmap = solve_slot_map(m1, m2);
    auto cval = [&](int s, int t) -> Rational {
        auto it = cmap.find({s, t});
        return it == cmap.end() ? Rational(0) : it->second;
    };
    IndexMap idx1 = index_map(f1);
    IndexMap idx2 = index_map(f2);
    IndexMap idx3 = index_map(f3);

    LogIntertwiner y(f1.module, f2.module, f3.module, m1 + m2 - 2);
    Rational lm = lambda * mu;

    // Base rows: the first tensor factor is a pure momentum state.  The
    // normally ordered exponential contributes an annihilation sum over
    // submultisets of the second factor's partition, a creation sum over
    // bounded multisets, a binomial expansion of (lambda + nu1)^count, and
    // the log-generating exponent mu nu1 + lambda nu2 + nu1 nu2.
    for (std::size_t i = 0; i < f1.states.size(); ++i) {
        if (!f1.states[i].first.empty()) continue;
        int s1 = f1.states[i].second;
        for (std::size_t j = 0; j < f2.states.size(); ++j) {
            const auto& [p2, s2] = f2.states[j];
            for (const SubChoice& ann : submultisets(p2)) {
                long rem_lev = level_of(ann.remaining);
                long xoff_e = -level_of(ann.removed);
                Rational sign_e((ann.count % 2 == 0) ? 1 : -1);
                for (const Pt& cre : creation_sets(static_cast<long>(n3) - rem_lev)) {
                    Rational coef_g(1);
                    std::map<long, long> gmult;
                    for (long m : cre) ++gmult[m];
                    for (const auto& [m, g] : gmult)
                        coef_g /= pow(Rational(m), g) * factorial(g);
                    long total_count = ann.count + static_cast<long>(cre.size());
                    long xoff = xoff_e + level_of(cre);

                    Pt target = ann.remaining;
                    target.insert(target.end(), cre.begin(), cre.end());
                    std::sort(target.begin(), target.end(), std::greater<long>());

                    for (long dd = 0; dd <= total_count && dd < m1; ++dd) {
                        Rational coef_d =
                            binomial(Rational(total_count), dd) * pow(lambda, total_count - dd);
                        if (coef_d.is_zero()) continue;
                        for (int al = 0; al + s1 + dd < m1; ++al) {
                            for (int be = 0; be + s2 < m2; ++be) {
                                for (int ga = 0; al + ga + s1 + dd < m1 && be + ga + s2 < m2;
                                     ++ga) {
                                    int d1 = s1 + static_cast<int>(dd) + al + ga;
                                    int d2 = s2 + be + ga;
                                    Rational slot_c = cval(d1, d2);
                                    if (slot_c.is_zero()) continue;
                                    Rational coef = ann.binom_coef * sign_e * coef_g * coef_d *
                                                    pow(mu, al) * pow(lambda, be) /
                                                    (factorial(al) * factorial(be) *
                                                     factorial(ga)) *
                                                    slot_c;
                                    if (coef.is_zero()) continue;
                                    auto it = idx3.find({target, d1 + d2});
                                    if (it == idx3.end()) continue;
                                    Rational n = -(lm + Rational(xoff)) - Rational(1);
                                    y.set_coeff(n, al + be + ga, static_cast<int>(i),
                                                static_cast<int>(j),
                                                Vec::unit(it->second).scaled(Scalar(coef)));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Remaining rows by the iterate recursion on the largest oscillator of
    // the first factor: Y(a(-n0) w, x) expands into creation modes acting
    // after Y(w, x) and annihilation modes acting before it.
    for (std::size_t i = 0; i < f1.states.size(); ++i) {
        const auto& [p1, s1] = f1.states[i];
        if (p1.empty()) continue;
        long n0 = p1[0];
        Pt rest(p1.begin() + 1, p1.end());
        auto pit = idx1.find({rest, s1});
        if (pit == idx1.end()) throw CalcError("internal: missing parent Fock state");
        int ip = pit->second;

        // Snapshot of the parent row's stored coefficients, per second index.
        std::map<int, std::vector<std::tuple<Rational, int, Vec>>> parent;
        for (const auto& [key, fam] : y.families())
            for (const auto& [pair, vec] : fam)
                if (pair.first == ip) parent[pair.second].push_back({key.first, key.second, vec});

        // creation side: binom(-n0, t) (-1)^t x^t a(-n0 - t) Y(w, x)
        for (long t = 0; n0 + t <= static_cast<long>(n3) + 1; ++t) {
            Scalar coef(binomial(Rational(-n0), t) * Rational((t % 2 == 0) ? 1 : -1));
            const Mat& mode = f3.module->mode("a", Rational(-n0 - t));
            for (const auto& [j, rows] : parent) {
                for (const auto& [np, k, vec] : rows) {
                    Vec out = mode.apply(vec).scaled(coef);
                    if (!out.is_zero())
                        y.set_coeff(np - Rational(t), k, static_cast<int>(i), j, out);
                }
            }
        }
        // annihilation side: (-1)^{n0+1} binom(-n0, t) (-1)^t x^{-n0-t}
        // Y(w, x) a(t), fed by every second-factor state a(t) reaches
        for (int j = 0; j < static_cast<int>(f2.states.size()); ++j) {
            for (long t = 0; t <= f2.trunc; ++t) {
                Rational c = binomial(Rational(-n0), t) * Rational((t % 2 == 0) ? 1 : -1) *
                             Rational((n0 % 2 == 0) ? -1 : 1);
                FVec av = apply_a(t, f2.states[static_cast<std::size_t>(j)], mu, m2);
                for (const auto& [st2, c2] : av) {
                    auto jit = idx2.find(st2);
                    if (jit == idx2.end()) continue;
                    auto rit = parent.find(jit->second);
                    if (rit == parent.end()) continue;
                    Scalar coef(c * c2);
                    for (const auto& [np, k, vec] : rit->second) {
                        Vec out = vec.scaled(coef);
                        if (!out.is_zero())
                            y.set_coeff(np + Rational(n0 + t), k, static_cast<int>(i), j, out);
                    }
                }
            }
        }
    }
    return y;
}

LogIntertwiner module_action(const FockModule& voa, const FockModule& target) {
    if (!voa.momentum.is_zero() || voa.rank != 1)
        throw ValidationError("module action requires the rank-one momentum-zero algebra");
    return build_intertwiner(voa, target, target);
}

HeisenbergFamily build_family(const Rational& lambda, const Rational& mu, int m1, int m2,
                              int trunc) {
    long den = std::lcm(lambda.den_long(), mu.den_long());
    FockModule voa = build_fock_named("V", Rational(0), 1, trunc, den);
    FockModule f1 = build_fock(lambda, m1, trunc, den);
    FockModule f2 = build_fock(mu, m2, trunc, den);
    FockModule f3 = build_fock(lambda + mu, m1 + m2 - 1, trunc, den);
    LogIntertwiner y = build_intertwiner(f1, f2, f3);
    LogIntertwiner a1 = module_action(voa, f1);
    LogIntertwiner a2 = module_action(voa, f2);
    LogIntertwiner a3 = module_action(voa, f3);
    return {std::move(voa), std::move(f1), std::move(f2), std::move(f3),
            std::move(y),   std::move(a1), std::move(a2), std::move(a3)};
}

std::vector<Mat> c1_generators(const FockModule& voa, const FockModule& target,
                               const LogIntertwiner& action) {
    std::vector<Mat> out;
    int d = target.module->dim();
    for (int v = 0; v < voa.module->dim(); ++v) {
        if (voa.module->weight_of(v) < Rational(1)) continue;
        Mat m(d, d);
        for (int j = 0; j < d; ++j) {
            Vec col = action.coeff(Rational(-1), 0, v, j);
            for (const auto& [row, s] : col.entries()) m.at(row, j) += s;
        }
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace logtensor
