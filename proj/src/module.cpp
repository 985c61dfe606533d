#include "logtensor/module.hpp"

#include <algorithm>
#include <sstream>

#include "logtensor/errors.hpp"

namespace logtensor {

namespace {

std::vector<long> add_labels(const std::vector<long>& a, const std::vector<long>& b) {
    if (a.size() != b.size()) throw ValidationError("group labels of different rank");
    std::vector<long> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

std::string mode_name(const std::string& gen, const Rational& n) {
    return gen + "_{" + n.str() + "}";
}

} // namespace

Vec project(const CompletionElement& c, const Rational& n) {
    auto it = c.find(n);
    return it == c.end() ? Vec() : it->second;
}

GradedModule::GradedModule(std::string name, std::vector<BasisVector> basis, Rational wmin,
                           Rational wmax, Rational central_charge)
    : name_(std::move(name)),
      basis_(std::move(basis)),
      wmin_(std::move(wmin)),
      wmax_(std::move(wmax)),
      c_(std::move(central_charge)) {
    if (wmax_ < wmin_) throw ValidationError("module '" + name_ + "': empty weight window");
    for (int i = 0; i < dim(); ++i) {
        const BasisVector& b = basis_[static_cast<std::size_t>(i)];
        if (b.name.empty()) throw ValidationError("module '" + name_ + "': unnamed basis vector");
        if (!index_.emplace(b.name, i).second) {
            throw ValidationError("module '" + name_ + "': duplicate basis name '" + b.name + "'");
        }
        if (b.label.size() != basis_[0].label.size()) {
            throw ValidationError("module '" + name_ + "': group labels of mixed rank");
        }
    }
    int n = dim();
    lm1_ = Mat(n, n);
    l0_ = Mat(n, n);
    l1_ = Mat(n, n);
}

int GradedModule::index_of(const std::string& vec_name) const {
    auto it = index_.find(vec_name);
    return it == index_.end() ? -1 : it->second;
}

std::vector<int> GradedModule::weight_space(const Rational& w) const {
    std::vector<int> idx;
    for (int i = 0; i < dim(); ++i) {
        if (weight_of(i) == w) idx.push_back(i);
    }
    return idx;
}

std::vector<Rational> GradedModule::weights() const {
    std::vector<Rational> ws;
    for (const auto& b : basis_) ws.push_back(b.weight);
    std::sort(ws.begin(), ws.end());
    ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
    return ws;
}

std::optional<Rational> GradedModule::homogeneous_weight(const Vec& v) const {
    std::optional<Rational> w;
    for (const auto& [i, s] : v.entries()) {
        if (s.is_zero()) continue;
        if (i < 0 || i >= dim()) throw ValidationError("vector index outside module basis");
        if (!w) {
            w = weight_of(i);
        } else if (*w != weight_of(i)) {
            throw NotHomogeneous("vector mixes weights " + w->str() + " and " + weight_of(i).str());
        }
    }
    return w;
}

void GradedModule::add_generator(const std::string& gen, GenInfo info) {
    if (gen.empty()) throw ValidationError("generator needs a name");
    if (info.label.empty() && !basis_.empty()) info.label.assign(basis_[0].label.size(), 0);
    gens_[gen] = std::move(info);
}

const GradedModule::GenInfo& GradedModule::generator(const std::string& gen) const {
    auto it = gens_.find(gen);
    if (it == gens_.end()) {
        throw ValidationError("module '" + name_ + "' has no generator '" + gen + "'");
    }
    return it->second;
}

void GradedModule::set_mode(const std::string& gen, const Rational& n, Mat m) {
    (void)generator(gen);
    if (m.rows() != dim() || m.cols() != dim()) {
        throw ValidationError("mode " + mode_name(gen, n) + " has wrong shape");
    }
    modes_[{gen, n}] = std::move(m);
}

bool GradedModule::has_mode(const std::string& gen, const Rational& n) const {
    return modes_.count({gen, n}) != 0;
}

const Mat& GradedModule::mode(const std::string& gen, const Rational& n) const {
    auto it = modes_.find({gen, n});
    if (it == modes_.end()) {
        throw ValidationError("module '" + name_ + "': mode " + mode_name(gen, n) + " not stored");
    }
    return it->second;
}

Rational GradedModule::mode_shift(const std::string& gen, const Rational& n) const {
    return generator(gen).weight - n - Rational(1);
}

void GradedModule::set_l(int which, Mat m) {
    if (m.rows() != dim() || m.cols() != dim()) throw ValidationError("L operator has wrong shape");
    switch (which) {
        case -1: lm1_ = std::move(m); return;
        case 0: l0_ = std::move(m); return;
        case 1: l1_ = std::move(m); return;
        default: throw ValidationError("only L(-1), L(0), L(1) are stored directly");
    }
}

const Mat& GradedModule::l(int which) const {
    switch (which) {
        case -1: return lm1_;
        case 0: return l0_;
        case 1: return l1_;
        default: throw ValidationError("only L(-1), L(0), L(1) are stored directly");
    }
}

bool GradedModule::shift_in_window(const Rational& src_weight, const Rational& shift) const {
    Rational t = src_weight + shift;
    return wmin_ <= t && t <= wmax_;
}

void GradedModule::check_mode_matrix(const std::string& what, const Mat& m, const Rational& shift,
                                     const std::vector<long>& label_shift) const {
    for (int r = 0; r < dim(); ++r) {
        for (int c = 0; c < dim(); ++c) {
            if (m.at(r, c).is_zero()) continue;
            if (weight_of(r) != weight_of(c) + shift) {
                throw ValidationError("module '" + name_ + "': " + what + " entry (" +
                                      at(r).name + ", " + at(c).name + ") violates the weight shift " +
                                      shift.str());
            }
            if (!label_shift.empty() &&
                at(r).label != add_labels(at(c).label, label_shift)) {
                throw ValidationError("module '" + name_ + "': " + what + " entry (" + at(r).name +
                                      ", " + at(c).name + ") violates the group-label shift");
            }
        }
    }
}

void GradedModule::validate() const {
    std::vector<long> zero_label(basis_.empty() ? 0 : basis_[0].label.size(), 0);
    check_mode_matrix("L(0)", l0_, Rational(0), zero_label);
    check_mode_matrix("L(-1)", lm1_, Rational(1), zero_label);
    check_mode_matrix("L(1)", l1_, Rational(-1), zero_label);
    for (const auto& [key, m] : modes_) {
        const auto& [gen, n] = key;
        check_mode_matrix(mode_name(gen, n), m, mode_shift(gen, n), generator(gen).label);
    }
    split_l0();  // L(0) structure + nilpotent-part commutation

    // Collect every Virasoro mode we actually hold: the three stored L's and
    // the modes of any conformal generator.
    std::map<long, const Mat*> ls;
    ls[-1] = &lm1_;
    ls[0] = &l0_;
    ls[1] = &l1_;
    for (const auto& [key, m] : modes_) {
        const auto& [gen, n] = key;
        if (!generator(gen).is_conformal) continue;
        if (!n.is_integer()) throw ValidationError("conformal generator with fractional mode index");
        long ln = n.to_long() - 1;
        if (ln >= -1 && ln <= 1) {
            if (!(m == *ls[ln])) {
                throw ValidationError("module '" + name_ + "': conformal modes disagree with L(" +
                                      std::to_string(ln) + ")");
            }
        } else {
            ls[ln] = &m;
        }
    }
    for (const auto& [m_idx, lm] : ls) {
        for (const auto& [n_idx, lnm] : ls) {
            auto it = ls.find(m_idx + n_idx);
            if (it == ls.end()) continue;
            const Mat& lmn = *it->second;
            Mat lhs = (*lm) * (*lnm) - (*lnm) * (*lm);
            for (int col = 0; col < dim(); ++col) {
                const Rational& w = weight_of(col);
                if (!shift_in_window(w, Rational(-m_idx)) || !shift_in_window(w, Rational(-n_idx)) ||
                    !shift_in_window(w, Rational(-m_idx - n_idx))) {
                    continue;
                }
                for (int row = 0; row < dim(); ++row) {
                    Scalar rhs = lmn.at(row, col) * Scalar(Rational(m_idx - n_idx));
                    if (m_idx + n_idx == 0 && row == col) {
                        rhs += Scalar(c_ * Rational(m_idx * m_idx * m_idx - m_idx, 12));
                    }
                    if (!(lhs.at(row, col) == rhs)) {
                        throw ValidationError("module '" + name_ + "': Virasoro bracket [L(" +
                                              std::to_string(m_idx) + "),L(" + std::to_string(n_idx) +
                                              ")] fails at (" + at(row).name + ", " + at(col).name +
                                              ")");
                    }
                }
            }
        }
    }
}

std::pair<Mat, Mat> GradedModule::split_l0() const {
    int n = dim();
    Mat s(n, n);
    for (int i = 0; i < n; ++i) s.at(i, i) = Scalar(weight_of(i));
    Mat nil = l0_ - s;
    check_mode_matrix("L(0) nilpotent part", nil, Rational(0),
                      std::vector<long>(basis_.empty() ? 0 : basis_[0].label.size(), 0));
    Mat p = nil;
    int steps = 0;
    while (!p.is_zero()) {
        if (++steps > n) throw NotNilpotent("L(0) minus its weight scalars is not nilpotent");
        p = p * nil;
    }
    for (const auto& [key, m] : modes_) {
        const auto& [gen, idx] = key;
        Rational shift = mode_shift(gen, idx);
        Mat lhs = nil * m;
        Mat rhs = m * nil;
        for (int col = 0; col < n; ++col) {
            if (!shift_in_window(weight_of(col), shift)) continue;
            for (int row = 0; row < n; ++row) {
                if (!(lhs.at(row, col) == rhs.at(row, col))) {
                    throw CommutationFailure("nilpotent part of L(0) fails to commute with " +
                                             mode_name(gen, idx));
                }
            }
        }
    }
    return {s, nil};
}

Series GradedModule::power_l0(const Vec& w, int sign, VarId x, const Policy& pol) const {
    if (sign != 1 && sign != -1) throw ValidationError("power_l0 sign must be +1 or -1");
    Series out(pol);
    auto wt = homogeneous_weight(w);
    if (!wt) return out;
    Vec v = w;
    Rational fact(1);
    for (int i = 0; !v.is_zero(); ++i) {
        if (i > dim()) throw NotNilpotent("L(0) power series fails to terminate");
        if (i > 0) fact = fact * Rational(i);
        Monomial m = Monomial::power(x, Rational(sign) * *wt);
        m.set_log_deg(x, i);
        Scalar c = Scalar(Rational(1) / fact);
        if (sign < 0 && (i % 2) == 1) c = -c;
        out.accum(m, Coef(v.scaled(c)));
        // v <- (L(0) - wt) v
        v = l0_.apply(v) - v.scaled(Scalar(*wt));
    }
    return out;
}

Mat GradedModule::opposite_mode(const std::string& gen, const Rational& n) const {
    const GenInfo& g0 = generator(gen);
    if (!g0.weight.is_integer()) {
        throw ValidationError("opposite mode needs an integer-weight generator");
    }
    long k = g0.weight.to_long();
    Mat out(dim(), dim());
    std::vector<std::pair<Rational, std::string>> chain = {{Rational(1), gen}};
    Rational invfact(1);
    for (int m = 0; !chain.empty(); ++m) {
        if (m > 64) throw ValidationError("L(1) chain fails to terminate for '" + gen + "'");
        if (m > 0) invfact = invfact / Rational(m);
        Rational idx = -n - Rational(m) - Rational(2) + Rational(2 * k);
        for (const auto& [coef, g] : chain) {
            Scalar s(coef * invfact);
            if (k % 2 != 0) s = -s;
            out += mode(g, idx).scaled(s);
        }
        // chain <- L(1) applied to each element
        std::map<std::string, Rational> next;
        for (const auto& [coef, g] : chain) {
            for (const auto& [c2, g2] : generator(g).l1_image) next[g2] += coef * c2;
        }
        chain.clear();
        for (const auto& [g, c2] : next) {
            if (!c2.is_zero()) chain.emplace_back(c2, g);
        }
    }
    return out;
}

GradedModule GradedModule::contragredient() const {
    std::vector<BasisVector> dual = basis_;
    for (auto& b : dual) {
        b.name += "'";
        for (auto& l : b.label) l = -l;
    }
    GradedModule w(name_ + "'", std::move(dual), wmin_, wmax_, c_);
    for (const auto& [gen, info] : gens_) w.add_generator(gen, info);
    w.set_l(-1, l1_.transposed());
    w.set_l(0, l0_.transposed());
    w.set_l(1, lm1_.transposed());

    // v'_n = (v^o_n)^T wherever every mode the opposite formula needs exists.
    for (const auto& [gen, info] : gens_) {
        if (!info.weight.is_integer()) continue;
        long k = info.weight.to_long();
        std::set<Rational> candidates;
        for (const auto& [key, m] : modes_) {
            (void)m;
            if (key.first == gen) candidates.insert(-key.second - Rational(2) + Rational(2 * k));
        }
        for (const Rational& np : candidates) {
            try {
                w.set_mode(gen, np, opposite_mode(gen, np).transposed());
            } catch (const ValidationError&) {
                // some mode in the L(1) chain is missing: v'_{np} stays partial
            }
        }
    }
    return w;
}

GradingReport GradedModule::strong_grading_check() const {
    GradingReport rep;
    for (const auto& b : basis_) {
        if (b.weight < wmin_ || wmax_ < b.weight) {
            rep.pass = false;
            rep.violations.push_back("basis vector '" + b.name + "' at weight " + b.weight.str() +
                                     " lies outside the window [" + wmin_.str() + ", " +
                                     wmax_.str() + "]");
        }
        rep.dims[b.weight] += 1;
    }
    return rep;
}

std::map<Rational, int> GradedModule::quotient_dims(const std::vector<Mat>& ops) const {
    // Bucket image columns by target weight, then count ranks per weight.
    std::map<Rational, std::vector<int>> spaces;
    for (const Rational& w : weights()) {
        std::vector<int> idx = weight_space(w);
        spaces[w] = idx;
    }
    std::map<Rational, RowSpan> spans;
    std::map<Rational, std::map<int, int>> pos;  // weight -> basis idx -> coord
    for (auto& [w, idx] : spaces) {
        spans.emplace(w, RowSpan(static_cast<int>(idx.size())));
        for (std::size_t p = 0; p < idx.size(); ++p) pos[w][idx[p]] = static_cast<int>(p);
    }
    for (const Mat& op : ops) {
        if (op.rows() != dim() || op.cols() != dim()) {
            throw ValidationError("quotient operator has wrong shape");
        }
        for (int c = 0; c < dim(); ++c) {
            // Determine the column's target weight from its support.
            std::optional<Rational> tw;
            for (int r = 0; r < dim(); ++r) {
                if (op.at(r, c).is_zero()) continue;
                if (!tw) {
                    tw = weight_of(r);
                } else if (*tw != weight_of(r)) {
                    throw ValidationError("quotient operator column mixes target weights");
                }
            }
            if (!tw) continue;
            const auto& idx = spaces[*tw];
            std::vector<Scalar> coords(idx.size(), Scalar(Rational(0)));
            for (int r = 0; r < dim(); ++r) {
                if (!op.at(r, c).is_zero()) coords[static_cast<std::size_t>(pos[*tw][r])] = op.at(r, c);
            }
            spans.at(*tw).add(std::move(coords));
        }
    }
    std::map<Rational, int> out;
    for (const auto& [w, idx] : spaces) {
        out[w] = static_cast<int>(idx.size()) - spans.at(w).size();
    }
    return out;
}

} // namespace logtensor
