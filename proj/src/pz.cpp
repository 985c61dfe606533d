#include "logtensor/pz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "logtensor/errors.hpp"
#include "pz_internal.hpp"

namespace logtensor {

namespace pzdetail {

std::string tuple_str(const std::vector<int>& idx) {
    std::ostringstream os;
    os << "(";
    for (std::size_t k = 0; k < idx.size(); ++k) os << (k ? "," : "") << idx[k];
    os << ")";
    return os.str();
}

long integer_weight(const GradedModule& voa, int vb, const char* who) {
    Rational w = voa.weight_of(vb);
    if (!w.is_integer())
        throw NotHomogeneous(std::string(who) + ": algebra weight " + w.str() +
                             " is not an integer");
    return w.to_long();
}

// Matrix application that may cross scalar layers entry by entry.
Vec apply_mixed(const Mat& m, const Vec& v) {
    Vec out;
    for (const auto& [c, s] : v.entries()) {
        if (s.is_zero()) continue;
        for (int r = 0; r < m.rows(); ++r) {
            const Scalar& a = m.at(r, c);
            if (!a.is_zero()) out.set(r, add_mixed(out.at(r), mul_mixed(a, s)));
        }
    }
    return out;
}

// v, L(1)v, L(1)^2 v, ... down to (but not including) zero.  L(1) lowers the
// weight, so on a windowed module the chain always terminates.
std::vector<Vec> l1_chain(const GradedModule& voa, Vec v) {
    std::vector<Vec> chain;
    const Mat l1 = voa.l(1);
    const int guard = voa.dim() + 2;
    while (!v.is_zero()) {
        if (static_cast<int>(chain.size()) > guard)
            throw NotNilpotent("raising chain on the algebra does not terminate");
        chain.push_back(v);
        v = apply_mixed(l1, v);
    }
    return chain;
}

// u_m e_i through a stored action: components below the target floor are
// genuinely zero (the floor is the true bottom of the module); components
// above the roof make the result undetermined.
PartialVec mode_apply(const LogIntertwiner& act, const Vec& u, long m, int i) {
    PartialVec out;
    const GradedModule& tgt = act.w3();
    const Rational wi = act.w2().weight_of(i);
    for (const auto& [ub, c] : u.entries()) {
        if (c.is_zero()) continue;
        Rational tw = wi + act.w1().weight_of(ub) - Rational(m + 1);
        if (tw < tgt.wmin()) continue;
        if (tw > tgt.wmax()) {
            out.det = false;
            continue;
        }
        axpy_mixed(out.val, c, act.coeff(Rational(m), 0, ub, i));
    }
    return out;
}

PartialVec mode_on_vec(const LogIntertwiner& act, const Vec& carrier, long n, const Vec& w) {
    PartialVec out;
    for (const auto& [t, c] : w.entries()) {
        if (c.is_zero()) continue;
        PartialVec part = mode_apply(act, carrier, n, t);
        if (!part.det) out.det = false;
        axpy_mixed(out.val, c, part.val);
    }
    return out;
}

// opp_n(v) e_j = sum_r (-1)^h / r! (L(1)^r v)_{2h-r-n-2} e_j, assembled from
// the precomputed raising chain of a weight-h algebra element.
PartialVec opposite_apply(const LogIntertwiner& act, const std::vector<Vec>& chain, long h,
                          long n, int j) {
    PartialVec out;
    const Rational sign(h % 2 == 0 ? 1 : -1);
    for (std::size_t r = 0; r < chain.size(); ++r) {
        PartialVec part = mode_apply(act, chain[r], 2 * h - static_cast<long>(r) - n - 2, j);
        if (!part.det) out.det = false;
        axpy_mixed(out.val, Scalar(sign / factorial(static_cast<long>(r))), part.val);
    }
    return out;
}

PartialVec opp_on_vec(const LogIntertwiner& act, const std::vector<Vec>& chain, long h, long n,
                      const Vec& w) {
    PartialVec out;
    for (const auto& [t, c] : w.entries()) {
        if (c.is_zero()) continue;
        PartialVec part = opposite_apply(act, chain, h, n, t);
        if (!part.det) out.det = false;
        axpy_mixed(out.val, c, part.val);
    }
    return out;
}

// f evaluated with slot `which` replaced by a vector (other indices fixed).
PartialScalar eval_with_vec(const DualElement& f, int which, const Vec& a,
                            std::vector<int> idx) {
    PartialScalar r;
    for (const auto& [t, c] : a.entries()) {
        if (c.is_zero()) continue;
        idx[static_cast<std::size_t>(which)] = t;
        if (!f.is_determined(idx)) {
            r.det = false;
            return r;
        }
        const Scalar& fv = f.at(idx);
        if (!fv.is_zero()) r.val = add_mixed(r.val, mul_mixed(c, fv));
    }
    return r;
}

Scalar scalar_int_pow(const Scalar& s, long e) {
    Scalar acc{Rational(1)};
    for (long t = 0; t < e; ++t) acc = mul_mixed(acc, s);
    return acc;
}

} // namespace pzdetail

using namespace pzdetail;

namespace {
const double kPi = std::acos(-1.0);
} // namespace

// ---------------------------------------------------------------------------
// Branch data
// ---------------------------------------------------------------------------

BranchChoice BranchChoice::at_rational(const Rational& z, int p) {
    return BranchChoice{Scalar(z), p};
}

BranchChoice BranchChoice::at_complex(Cpx z, int p) {
    return BranchChoice{Scalar::complex(z), p};
}

Scalar branch_log(const BranchChoice& b) {
    if (b.z.is_zero()) throw ZeroArgument("branch_log: log of zero");
    const Rational two_p(2L * b.p);
    if (b.z.is_exact() && b.z.zeta_degree() == 0) {
        const GaussRat& g = b.z.zeta_coef(0);
        if (g.is_rational()) {
            const Rational& r = g.re;
            if (r == Rational(1)) return Scalar::zeta() * Scalar(two_p);
            if (r == Rational(-1)) return Scalar::zeta() * Scalar(two_p + Rational(1));
            double arg = r.sign() > 0 ? 0.0 : kPi;
            return Scalar::complex(
                Cpx(std::log(std::fabs(r.to_double())), arg + 2.0 * kPi * b.p));
        }
        if (g.re.is_zero() && g.im == Rational(1))
            return Scalar::zeta() * Scalar(two_p + Rational(1, 2));
        if (g.re.is_zero() && g.im == Rational(-1))
            return Scalar::zeta() * Scalar(two_p + Rational(3, 2));
    }
    const Cpx w = b.z.to_cpx();
    double a = std::arg(w);  // principal (-pi, pi]
    if (a < 0) a += 2.0 * kPi;
    return Scalar::complex(Cpx(std::log(std::abs(w)), a + 2.0 * kPi * b.p));
}

Scalar branch_exp(const BranchChoice& b, const Rational& e) {
    if (b.z.is_zero()) throw ZeroArgument("branch_exp: zero branch point");
    if (e.is_zero()) return Scalar(Rational(1));
    if (b.z.is_exact() && b.z.zeta_degree() == 0) {
        const GaussRat& g = b.z.zeta_coef(0);
        if (g.is_rational()) {
            const Rational& r = g.re;
            const Rational s(r.sign() > 0 ? 0 : 1);
            return mul_mixed(scalar_pow(r.abs(), e),
                             phase_exp_i_pi(e * (s + Rational(2L * b.p))));
        }
        if (g.re.is_zero() && (g.im == Rational(1) || g.im == Rational(-1))) {
            const Rational q = g.im == Rational(1) ? Rational(1, 2) : Rational(3, 2);
            return phase_exp_i_pi(e * (q + Rational(2L * b.p)));
        }
    }
    return Scalar::complex(std::exp(e.to_double() * branch_log(b).to_cpx()));
}

Scalar z_pow_int(const Scalar& z, long e) {
    if (e == 0) return Scalar(Rational(1));
    if (z.is_zero()) {
        if (e < 0) throw ZeroArgument("z_pow_int: negative power of zero");
        return Scalar();
    }
    if (z.is_exact() && z.zeta_degree() == 0) {
        GaussRat base = z.zeta_coef(0);
        if (e < 0) base = base.inverse();
        GaussRat acc{Rational(1)};
        for (long t = std::labs(e); t > 0; --t) acc = acc * base;
        return Scalar(acc);
    }
    return Scalar::complex(std::pow(z.to_cpx(), static_cast<double>(e)));
}

// ---------------------------------------------------------------------------
// DualElement
// ---------------------------------------------------------------------------

DualElement::DualElement(std::vector<std::shared_ptr<const GradedModule>> slots)
    : slots_(std::move(slots)) {
    if (slots_.size() != 2 && slots_.size() != 3)
        throw ValidationError("functionals carry two or three tensor slots");
    for (const auto& s : slots_)
        if (!s) throw ValidationError("null module in a functional slot");
}

bool DualElement::same_slots(const DualElement& o) const {
    if (slots_.size() != o.slots_.size()) return false;
    for (std::size_t k = 0; k < slots_.size(); ++k)
        if (slots_[k].get() != o.slots_[k].get()) return false;
    return true;
}

void DualElement::set(const std::vector<int>& idx, const Scalar& value) {
    if (idx.size() != slots_.size())
        throw ValidationError("functional index arity mismatch at " + tuple_str(idx));
    for (std::size_t k = 0; k < idx.size(); ++k)
        if (idx[k] < 0 || idx[k] >= slots_[k]->dim())
            throw ValidationError("functional index out of range at " + tuple_str(idx));
    undet_.erase(idx);
    if (value.is_zero())
        vals_.erase(idx);
    else
        vals_[idx] = value;
}

const Scalar& DualElement::at(const std::vector<int>& idx) const {
    static const Scalar zero;
    auto it = vals_.find(idx);
    return it == vals_.end() ? zero : it->second;
}

void DualElement::mark_undetermined(const std::vector<int>& idx) {
    vals_.erase(idx);
    undet_.insert(idx);
}

bool DualElement::is_determined(const std::vector<int>& idx) const {
    return undet_.find(idx) == undet_.end();
}

bool DualElement::is_zero() const {
    for (const auto& [idx, v] : vals_)
        if (!v.is_zero()) return false;
    return true;
}

std::vector<std::vector<int>> DualElement::grid() const {
    std::vector<std::vector<int>> out;
    std::vector<int> idx(slots_.size(), 0);
    while (true) {
        out.push_back(idx);
        std::size_t k = slots_.size();
        while (k-- > 0) {
            if (++idx[k] < slots_[k]->dim()) break;
            idx[k] = 0;
            if (k == 0) return out;
        }
    }
}

Rational DualElement::grid_weight(const std::vector<int>& idx) const {
    Rational w;
    for (std::size_t k = 0; k < slots_.size(); ++k) w += slots_[k]->weight_of(idx[k]);
    return w;
}

std::optional<Rational> DualElement::max_support_weight() const {
    std::optional<Rational> best;
    auto feed = [&](const std::vector<int>& idx) {
        Rational w = grid_weight(idx);
        if (!best || w > *best) best = w;
    };
    for (const auto& [idx, v] : vals_)
        if (!v.is_zero()) feed(idx);
    for (const auto& idx : undet_) feed(idx);
    return best;
}

std::optional<Scalar> DualElement::eval(const std::vector<int>& idx) const {
    if (!is_determined(idx)) return std::nullopt;
    return at(idx);
}

std::optional<Scalar> DualElement::eval(const std::vector<Vec>& args) const {
    if (args.size() != slots_.size())
        throw ValidationError("functional applied to the wrong number of vectors");
    Scalar acc;
    bool ok = true;
    std::vector<int> idx(slots_.size(), 0);
    std::function<void(std::size_t, const Scalar&)> rec = [&](std::size_t k, const Scalar& c) {
        if (!ok || c.is_zero()) return;
        if (k == slots_.size()) {
            if (!is_determined(idx)) {
                ok = false;
                return;
            }
            const Scalar& fv = at(idx);
            if (!fv.is_zero()) acc = add_mixed(acc, mul_mixed(c, fv));
            return;
        }
        for (const auto& [t, ct] : args[k].entries()) {
            idx[k] = t;
            rec(k + 1, mul_mixed(c, ct));
        }
    };
    rec(0, Scalar(Rational(1)));
    if (!ok) return std::nullopt;
    return acc;
}

DualElement& DualElement::operator+=(const DualElement& o) {
    return add_scaled(Scalar(Rational(1)), o);
}

DualElement& DualElement::add_scaled(const Scalar& c, const DualElement& o) {
    if (!same_slots(o)) throw SlotMismatch("adding functionals over different slot modules");
    if (c.is_zero()) return *this;
    for (const auto& idx : o.undet_) mark_undetermined(idx);
    for (const auto& [idx, v] : o.vals_) {
        if (!is_determined(idx)) continue;
        set(idx, add_mixed(at(idx), mul_mixed(c, v)));
    }
    return *this;
}

DualElement DualElement::scaled(const Scalar& c) const {
    DualElement out(slots_);
    out.add_scaled(c, *this);
    return out;
}

std::map<std::vector<long>, DualElement> DualElement::label_components() const {
    auto key_of = [&](const std::vector<int>& idx) {
        std::vector<long> key;
        std::size_t len = slots_[0]->basis()[static_cast<std::size_t>(idx[0])].label.size();
        for (std::size_t k = 0; k < slots_.size(); ++k) {
            const auto& lab = slots_[k]->basis()[static_cast<std::size_t>(idx[k])].label;
            if (lab.size() != len) return std::vector<long>{};
        }
        if (len == 0) return std::vector<long>{};
        key.assign(len, 0);
        for (std::size_t k = 0; k < slots_.size(); ++k) {
            const auto& lab = slots_[k]->basis()[static_cast<std::size_t>(idx[k])].label;
            for (std::size_t t = 0; t < len; ++t) key[t] += lab[t];
        }
        return key;
    };
    std::map<std::vector<long>, DualElement> out;
    auto piece = [&](const std::vector<int>& idx) -> DualElement& {
        auto key = key_of(idx);
        auto it = out.find(key);
        if (it == out.end()) it = out.emplace(key, DualElement(slots_)).first;
        return it->second;
    };
    for (const auto& [idx, v] : vals_) piece(idx).set(idx, v);
    for (const auto& idx : undet_) piece(idx).mark_undetermined(idx);
    return out;
}

DualElement::CompareStats DualElement::compare_common(const DualElement& a,
                                                      const DualElement& b, double tol) {
    if (!a.same_slots(b)) throw SlotMismatch("comparing functionals over different slots");
    CompareStats st;
    for (const auto& idx : a.grid()) {
        if (!a.is_determined(idx) || !b.is_determined(idx)) {
            ++st.skipped;
            continue;
        }
        ++st.compared;
        const Scalar& va = a.at(idx);
        const Scalar& vb = b.at(idx);
        if (!Scalar::approx_equal(va, vb, tol) && !st.mismatch) {
            st.mismatch = tuple_str(idx) + ": " + va.str() + " vs " + vb.str();
        }
    }
    return st;
}

// ---------------------------------------------------------------------------
// PzMap
// ---------------------------------------------------------------------------

PzMap::PzMap(Kind kind, std::shared_ptr<const GradedModule> w1,
             std::shared_ptr<const GradedModule> w2, std::shared_ptr<const GradedModule> w3,
             BranchChoice branch)
    : kind_(kind), w1_(std::move(w1)), w2_(std::move(w2)), w3_(std::move(w3)),
      branch_(std::move(branch)) {
    if (!w1_ || !w2_ || !w3_) throw ValidationError("null module in a map slot");
    if (branch_.z.is_zero()) throw ZeroArgument("maps need a nonzero branch point");
}

void PzMap::add_component(int i, int j, const Rational& w, const Vec& val) {
    if (i < 0 || i >= w1_->dim() || j < 0 || j >= w2_->dim())
        throw ValidationError("map source index out of range");
    if (w < w3_->wmin() || w > w3_->wmax())
        throw ValidationError("map component weight " + w.str() + " outside the target window");
    const auto& li = w1_->basis()[static_cast<std::size_t>(i)].label;
    const auto& lj = w2_->basis()[static_cast<std::size_t>(j)].label;
    for (const auto& [t, c] : val.entries()) {
        if (c.is_zero()) continue;
        if (w3_->weight_of(t) != w)
            throw ValidationError("map component is not homogeneous of weight " + w.str());
        const auto& lt = w3_->basis()[static_cast<std::size_t>(t)].label;
        if (!li.empty() && !lj.empty() && !lt.empty() && li.size() == lj.size() &&
            li.size() == lt.size()) {
            for (std::size_t s = 0; s < lt.size(); ++s)
                if (lt[s] != li[s] + lj[s])
                    throw ValidationError("map component violates label additivity");
        }
    }
    if (val.is_zero()) return;
    Vec& slot = comps_[{i, j}][w];
    axpy_mixed(slot, Scalar(Rational(1)), val);
    if (slot.is_zero()) {
        comps_[{i, j}].erase(w);
        if (comps_[{i, j}].empty()) comps_.erase({i, j});
    }
}

const CompletionElement& PzMap::at(int i, int j) const {
    static const CompletionElement empty;
    auto it = comps_.find({i, j});
    return it == comps_.end() ? empty : it->second;
}

CompletionElement PzMap::apply(const Vec& a, const Vec& b) const {
    CompletionElement out;
    for (const auto& [i, ca] : a.entries()) {
        if (ca.is_zero()) continue;
        for (const auto& [j, cb] : b.entries()) {
            if (cb.is_zero()) continue;
            const Scalar c = mul_mixed(ca, cb);
            for (const auto& [w, vec] : at(i, j)) axpy_mixed(out[w], c, vec);
        }
    }
    for (auto it = out.begin(); it != out.end();)
        it = it->second.is_zero() ? out.erase(it) : std::next(it);
    return out;
}

bool PzMap::is_zero() const {
    for (const auto& [ij, comp] : comps_)
        for (const auto& [w, vec] : comp)
            if (!vec.is_zero()) return false;
    return true;
}

void PzMap::validate() const {
    for (const auto& [ij, comp] : comps_) {
        PzMap probe(kind_, w1_, w2_, w3_, branch_);
        for (const auto& [w, vec] : comp) probe.add_component(ij.first, ij.second, w, vec);
    }
}

bool PzMap::approx_equal(const PzMap& a, const PzMap& b, double tol) {
    if (a.w1_.get() != b.w1_.get() || a.w2_.get() != b.w2_.get() || a.w3_.get() != b.w3_.get())
        return false;
    auto covered = [&](const PzMap& x, const PzMap& y) {
        for (const auto& [ij, comp] : x.comps_)
            for (const auto& [w, vec] : comp) {
                const auto& other = y.at(ij.first, ij.second);
                auto it = other.find(w);
                static const Vec zero;
                if (!Vec::approx_equal(vec, it == other.end() ? zero : it->second, tol))
                    return false;
            }
        return true;
    };
    return covered(a, b) && covered(b, a);
}

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

PzMap intertwiner_to_map(const LogIntertwiner& y, const BranchChoice& b) {
    PzMap out(PzMap::Kind::Direct, y.w1_ptr(), y.w2_ptr(), y.w3_ptr(), b);
    const Scalar l = branch_log(b);
    std::vector<Scalar> lpow{Scalar(Rational(1))};
    for (int k = 1; k <= y.kmax(); ++k) lpow.push_back(mul_mixed(lpow.back(), l));
    for (const auto& [key, fam] : y.families()) {
        const Rational& n = key.first;
        const Scalar c = mul_mixed(branch_exp(b, -n - Rational(1)),
                                   lpow[static_cast<std::size_t>(key.second)]);
        if (c.is_zero()) continue;  // l == 0 kills every positive log power
        for (const auto& [ij, vec] : fam) {
            const Rational w =
                y.w1().weight_of(ij.first) + y.w2().weight_of(ij.second) - n - Rational(1);
            Vec scaled;
            axpy_mixed(scaled, c, vec);
            out.add_component(ij.first, ij.second, w, scaled);
        }
    }
    return out;
}

namespace {

// v, Nv, N^2 v, ... for a nilpotent matrix N.
std::vector<Vec> nilpotent_chain(const Mat& n, Vec v, int guard) {
    std::vector<Vec> chain;
    while (!v.is_zero()) {
        if (static_cast<int>(chain.size()) > guard)
            throw NotNilpotent("nilpotent part of the grading operator does not terminate");
        chain.push_back(v);
        v = apply_mixed(n, v);
    }
    return chain;
}

} // namespace

LogIntertwiner map_to_intertwiner(const PzMap& m) {
    const GradedModule& w1 = m.w1();
    const GradedModule& w2 = m.w2();
    const GradedModule& w3 = m.w3();
    const Mat n1 = w1.split_l0().second;
    const Mat n2 = w2.split_l0().second;
    const Mat n3 = w3.split_l0().second;
    const Scalar minus_l = -branch_log(m.branch());

    // The u^{L(0)}-conjugation u = x exp(-l): semisimple parts produce the
    // weight-driven power of u, nilpotent parts expand into terminating
    // chains, and log u = log x - l redistributes the log degrees.  Collect
    // everything first to learn the true log ceiling.
    std::map<LogIntertwiner::Key, LogIntertwiner::Family> raw;
    for (int i = 0; i < w1.dim(); ++i) {
        const auto chain1 = nilpotent_chain(n1, Vec::unit(i), w1.dim() + 2);
        for (int j = 0; j < w2.dim(); ++j) {
            const auto chain2 = nilpotent_chain(n2, Vec::unit(j), w2.dim() + 2);
            const Rational wij = w1.weight_of(i) + w2.weight_of(j);
            for (std::size_t d1 = 0; d1 < chain1.size(); ++d1) {
                for (std::size_t d2 = 0; d2 < chain2.size(); ++d2) {
                    const Rational fsign((d1 + d2) % 2 == 0 ? 1 : -1);
                    const Rational fden =
                        factorial(static_cast<long>(d1)) * factorial(static_cast<long>(d2));
                    for (const auto& [a, u] : m.apply(chain1[d1], chain2[d2])) {
                        const Rational alpha = a - wij;  // equals -n-1
                        const Rational n = -alpha - Rational(1);
                        const Scalar ea = branch_exp(m.branch(), -alpha);
                        const auto chain3 = nilpotent_chain(n3, u, w3.dim() + 2);
                        for (std::size_t e = 0; e < chain3.size(); ++e) {
                            const long d = static_cast<long>(d1 + d2 + e);
                            const Rational base =
                                fsign / (fden * factorial(static_cast<long>(e)));
                            for (long k = 0; k <= d; ++k) {
                                Scalar c = mul_mixed(
                                    Scalar(binomial(Rational(d), k) * base),
                                    mul_mixed(scalar_int_pow(minus_l, d - k), ea));
                                if (c.is_zero()) continue;
                                axpy_mixed(raw[{n, static_cast<int>(k)}][{i, j}], c,
                                           chain3[e]);
                            }
                        }
                    }
                }
            }
        }
    }

    int kmax = 0;
    for (const auto& [key, fam] : raw)
        for (const auto& [ij, vec] : fam)
            if (!vec.is_zero()) kmax = std::max(kmax, key.second);
    LogIntertwiner out(m.w1_ptr(), m.w2_ptr(), m.w3_ptr(), kmax);
    for (const auto& [key, fam] : raw)
        for (const auto& [ij, vec] : fam)
            if (!vec.is_zero())
                out.set_coeff(key.first, key.second, ij.first, ij.second, vec);
    return out;
}

DualElement pullback_functional(const PzMap& m, const Vec& wprime) {
    DualElement out({m.w1_ptr(), m.w2_ptr()});
    for (const auto& [ij, comp] : m.components()) {
        Scalar acc;
        for (const auto& [t, c] : wprime.entries()) {
            if (c.is_zero()) continue;
            auto it = comp.find(m.w3().weight_of(t));
            if (it == comp.end()) continue;
            const Scalar& u = it->second.at(t);
            if (!u.is_zero()) acc = add_mixed(acc, mul_mixed(c, u));
        }
        if (!acc.is_zero()) out.set({ij.first, ij.second}, acc);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Generating actions and the tau action
// ---------------------------------------------------------------------------

GeneratingAction GeneratingAction::component(const Vec& v, long n) {
    GeneratingAction g;
    g.v = v;
    g.coeffs[n] = Scalar(Rational(1));
    return g;
}

GeneratingAction GeneratingAction::delta_row(const Vec& v, const Scalar& z, long s, long q,
                                             int depth) {
    GeneratingAction g;
    g.v = v;
    const long m_hi = s >= 0 ? s : depth;
    for (long m = 0; m <= m_hi; ++m) {
        const Rational bin = binomial(Rational(s), m);
        if (bin.is_zero()) continue;
        const Scalar c =
            mul_mixed(Scalar(m % 2 == 0 ? bin : -bin), z_pow_int(z, m));
        Scalar& slot = g.coeffs[q - s + m];
        slot = add_mixed(slot, c);
    }
    return g;
}

namespace {

void require_context(const PzContext& ctx, const DualElement& f) {
    if (f.arity() != 2)
        throw ValidationError("the dressed action is defined on two-slot functionals");
    if (!ctx.voa) throw ValidationError("context carries no algebra module");
    if (ctx.acts.size() < 2)
        throw ValidationError("context needs one stored action per tensor slot");
    for (int k = 0; k < 2; ++k) {
        const LogIntertwiner& act = ctx.acts[static_cast<std::size_t>(k)];
        if (act.w1_ptr().get() != ctx.voa.get())
            throw ValidationError("slot action does not act by the context algebra");
        if (act.w2_ptr().get() != f.slot_ptr(k).get() ||
            act.w3_ptr().get() != f.slot_ptr(k).get())
            throw SlotMismatch("slot action does not match the functional slot module");
        if (act.max_stored_log() > 0)
            throw LogDegreePresent("slot actions must be ordinary (log-free)");
    }
}

} // namespace

DualElement tau_component(const PzContext& ctx, const DualElement& f, const Vec& v, long n) {
    require_context(ctx, f);
    const GradedModule& voa = *ctx.voa;
    const LogIntertwiner& act1 = ctx.acts[0];
    const LogIntertwiner& act2 = ctx.acts[1];
    const GradedModule& m1 = f.slot(0);
    const GradedModule& m2 = f.slot(1);

    DualElement out({f.slot_ptr(0), f.slot_ptr(1)});
    for (const auto& [vb, vc] : v.entries()) {
        if (vc.is_zero()) continue;
        const long h = integer_weight(voa, vb, "tau_component");
        const auto chain = l1_chain(voa, Vec::unit(vb));
        for (int i = 0; i < m1.dim(); ++i) {
            const Rational wi = m1.weight_of(i);
            for (int j = 0; j < m2.dim(); ++j) {
                const std::vector<int> idx{i, j};
                if (!out.is_determined(idx)) continue;
                bool det = true;
                Scalar acc;

                // Slot-2 term: f(e_i (x) opp_n(v) e_j).
                PartialVec opp = opposite_apply(act2, chain, h, n, j);
                if (!opp.det) det = false;
                if (det) {
                    PartialScalar ev = eval_with_vec(f, 1, opp.val, idx);
                    if (!ev.det)
                        det = false;
                    else
                        acc = add_mixed(acc, ev.val);
                }

                // Slot-1 tail: correction series in the raising chain of v.
                for (std::size_t r = 0; det && r < chain.size(); ++r) {
                    const Rational rfac = factorial(static_cast<long>(r));
                    for (long m = 0;; ++m) {
                        const Rational tw =
                            wi + Rational(h - static_cast<long>(r) - m - 1);
                        if (tw < m1.wmin()) break;  // genuinely zero from here on
                        const Rational bin =
                            binomial(Rational(n + 1 + m + static_cast<long>(r) - 2 * h), m);
                        if (bin.is_zero()) continue;
                        if (tw > m1.wmax()) {
                            det = false;
                            break;
                        }
                        PartialVec mv = mode_apply(act1, chain[r], m, i);
                        if (!mv.det) {
                            det = false;
                            break;
                        }
                        PartialScalar ev = eval_with_vec(f, 0, mv.val, idx);
                        if (!ev.det) {
                            det = false;
                            break;
                        }
                        if (ev.val.is_zero()) continue;
                        const Rational q = ((m + h) % 2 == 0) ? bin : -bin;
                        const Scalar coeff = mul_mixed(
                            Scalar(q / rfac),
                            z_pow_int(ctx.branch.z, -(n + 2 + m + static_cast<long>(r) - 2 * h)));
                        acc = add_mixed(acc, mul_mixed(coeff, ev.val));
                    }
                }

                if (!det) {
                    out.mark_undetermined(idx);
                    continue;
                }
                if (!acc.is_zero()) out.set(idx, add_mixed(out.at(idx), mul_mixed(vc, acc)));
            }
        }
    }
    return out;
}

DualElement tau_apply(const PzContext& ctx, const DualElement& f, const GeneratingAction& g) {
    require_context(ctx, f);
    DualElement out({f.slot_ptr(0), f.slot_ptr(1)});
    for (const auto& [n, c] : g.coeffs) {
        if (c.is_zero()) continue;
        out.add_scaled(c, tau_component(ctx, f, g.v, n));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transpose across the target pairing
// ---------------------------------------------------------------------------

PzMap pq_transpose(const PzMap& m, std::shared_ptr<const GradedModule> w3c,
                   std::shared_ptr<const GradedModule> w1c) {
    if (!w3c || !w1c) throw ValidationError("pq_transpose: null contragredient module");
    if (w3c->dim() != m.w3().dim() || w1c->dim() != m.w1().dim())
        throw SlotMismatch("pq_transpose: contragredient dimensions do not match");
    for (int t = 0; t < w3c->dim(); ++t)
        if (w3c->weight_of(t) != m.w3().weight_of(t))
            throw SlotMismatch("pq_transpose: target dual is not index-aligned");
    for (int t = 0; t < w1c->dim(); ++t)
        if (w1c->weight_of(t) != m.w1().weight_of(t))
            throw SlotMismatch("pq_transpose: source dual is not index-aligned");

    const PzMap::Kind flipped =
        m.kind() == PzMap::Kind::Direct ? PzMap::Kind::Transpose : PzMap::Kind::Direct;
    PzMap out(flipped, w3c, m.w2_ptr(), w1c, m.branch());
    for (const auto& [tj, comp] : m.components()) {
        const Rational wt = m.w1().weight_of(tj.first);
        for (const auto& [a, u] : comp) {
            (void)a;
            for (const auto& [kappa, c] : u.entries()) {
                if (c.is_zero()) continue;
                Vec unit;
                unit.set(tj.first, c);
                out.add_component(kappa, tj.second, wt, unit);
            }
        }
    }
    return out;
}

} // namespace logtensor
