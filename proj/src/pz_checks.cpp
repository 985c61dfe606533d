#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "logtensor/errors.hpp"
#include "logtensor/pz.hpp"
#include "pz_internal.hpp"

namespace logtensor {

using namespace pzdetail;

namespace {

// Homogeneous integer weight of an algebra element.
long carrier_weight(const GradedModule& voa, const Vec& v, const char* who) {
    std::optional<long> h;
    for (const auto& [vb, c] : v.entries()) {
        if (c.is_zero()) continue;
        const long hb = integer_weight(voa, vb, who);
        if (h && *h != hb)
            throw NotHomogeneous(std::string(who) + ": carrier mixes weights " +
                                 std::to_string(*h) + " and " + std::to_string(hb));
        h = hb;
    }
    if (!h) throw ValidationError(std::string(who) + ": zero carrier vector");
    return *h;
}

// Basis vectors of weight one or two: enough to separate compatible
// functionals from arbitrary ones on every example this library builds.
std::vector<Vec> default_test_vectors(const GradedModule& voa) {
    std::vector<Vec> out;
    for (int i = 0; i < voa.dim(); ++i) {
        const Rational w = voa.weight_of(i);
        if (w > Rational(0) && w <= Rational(2)) out.push_back(Vec::unit(i));
    }
    if (out.empty()) throw ValidationError("algebra carries no weight-1 or weight-2 vectors");
    return out;
}

std::string first_fail(const Report& r) {
    for (const auto& c : r.checks())
        if (!c.pass) return c.witness.empty() ? c.name : c.name + ": " + c.witness;
    return std::string();
}

double entry_scale(const DualElement& f) {
    double s = 1.0;
    for (const auto& [idx, v] : f.entries()) s = std::max(s, v.abs());
    return s;
}

// True when no determined entry exceeds the noise threshold.
bool effectively_zero(const DualElement& g, double tol, double scale) {
    for (const auto& [idx, v] : g.entries())
        if (v.abs() > tol * scale) return false;
    return true;
}

// Incremental span arithmetic over a fixed set of grid tuples.  Dense
// coordinates stay in exact row reduction as long as every entry is a
// Gaussian rational; the first transcendental or complex entry promotes the
// whole span to tolerance-based numeric elimination.
class SpanTracker {
  public:
    SpanTracker(const std::set<std::vector<int>>& mask, double tol)
        : tuples_(mask.begin(), mask.end()), tol_(tol),
          span_(static_cast<int>(tuples_.size())) {}

    bool add(const DualElement& g) {
        std::vector<Scalar> dense;
        dense.reserve(tuples_.size());
        bool exact_vec = true;
        for (const auto& t : tuples_) {
            const Scalar& s = g.at(t);
            if (!s.is_zero() && !(s.is_exact() && s.zeta_degree() == 0)) exact_vec = false;
            dense.push_back(s);
        }
        if (exact_ && !exact_vec) promote();
        if (exact_) {
            if (!span_.add(dense)) return false;
            raws_.push_back(std::move(dense));
            return true;
        }
        std::vector<Cpx> nv(dense.size());
        for (std::size_t j = 0; j < dense.size(); ++j) nv[j] = dense[j].to_cpx();
        return num_add(std::move(nv));
    }

    int size() const { return exact_ ? span_.size() : static_cast<int>(nrows_.size()); }

  private:
    void promote() {
        exact_ = false;
        for (const auto& r : raws_) {
            std::vector<Cpx> nv(r.size());
            for (std::size_t j = 0; j < r.size(); ++j) nv[j] = r[j].to_cpx();
            num_add(std::move(nv));
        }
        raws_.clear();
    }

    bool num_add(std::vector<Cpx> v) {
        for (const auto& x : v) scale_ = std::max(scale_, std::abs(x));
        for (std::size_t r = 0; r < nrows_.size(); ++r) {
            const Cpx f = v[npiv_[r]];
            if (std::abs(f) == 0.0) continue;
            for (std::size_t j = 0; j < v.size(); ++j) v[j] -= f * nrows_[r][j];
        }
        std::size_t piv = 0;
        double best = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double a = std::abs(v[j]);
            if (a > best) {
                best = a;
                piv = j;
            }
        }
        if (best <= tol_ * std::max(1.0, scale_)) return false;
        const Cpx inv = Cpx(1.0) / v[piv];
        for (auto& x : v) x *= inv;
        for (std::size_t r = 0; r < nrows_.size(); ++r) {
            const Cpx f = nrows_[r][piv];
            if (std::abs(f) == 0.0) continue;
            for (std::size_t j = 0; j < v.size(); ++j) nrows_[r][j] -= f * v[j];
        }
        nrows_.push_back(std::move(v));
        npiv_.push_back(piv);
        return true;
    }

    std::vector<std::vector<int>> tuples_;
    double tol_;
    double scale_ = 1.0;
    bool exact_ = true;
    RowSpan span_;
    std::vector<std::vector<Scalar>> raws_;
    std::vector<std::vector<Cpx>> nrows_;
    std::vector<std::size_t> npiv_;
};

// Accumulator for one side of the coefficientwise commutation identity:
// a value per target weight plus the weights (or the whole side) the
// windows cannot pin down.
struct SideAcc {
    std::map<Rational, Vec> val;
    std::set<Rational> undet;
    bool undet_all = false;

    bool determined_at(const Rational& a) const {
        return !undet_all && undet.find(a) == undet.end();
    }
    const Vec& at(const Rational& a) const {
        static const Vec zero;
        auto it = val.find(a);
        return it == val.end() ? zero : it->second;
    }
};

} // namespace

// ---------------------------------------------------------------------------
// Coefficientwise commutation identity for stored maps
// ---------------------------------------------------------------------------

Report check_pz_jacobi(const PzMap& m, const PzContext& ctx,
                       const std::vector<TestTriple>& triples, int s_range, int q_range,
                       double tol) {
    if (triples.empty()) throw ValidationError("commutation check needs at least one triple");
    if (!ctx.voa) throw ValidationError("context carries no algebra module");
    if (ctx.acts.size() < 3)
        throw ValidationError("map commutation check needs actions on all three modules");
    const std::array<const GradedModule*, 3> mods{&m.w1(), &m.w2(), &m.w3()};
    const std::array<std::shared_ptr<const GradedModule>, 3> mptr{m.w1_ptr(), m.w2_ptr(),
                                                                  m.w3_ptr()};
    for (int k = 0; k < 3; ++k) {
        const LogIntertwiner& act = ctx.acts[static_cast<std::size_t>(k)];
        if (act.w1_ptr().get() != ctx.voa.get())
            throw ValidationError("slot action does not act by the context algebra");
        if (act.w2_ptr().get() != mptr[static_cast<std::size_t>(k)].get() ||
            act.w3_ptr().get() != mptr[static_cast<std::size_t>(k)].get())
            throw SlotMismatch("slot action does not match the map module");
        if (act.max_stored_log() > 0)
            throw LogDegreePresent("slot actions must be ordinary (log-free)");
    }
    const LogIntertwiner& act1 = ctx.acts[0];
    const LogIntertwiner& act2 = ctx.acts[1];
    const LogIntertwiner& act3 = ctx.acts[2];
    const GradedModule& w1 = *mods[0];
    const GradedModule& w2 = *mods[1];
    const GradedModule& w3 = *mods[2];
    const Scalar& z = m.branch().z;
    const bool transpose = m.kind() == PzMap::Kind::Transpose;

    Report rep;
    for (std::size_t t_idx = 0; t_idx < triples.size(); ++t_idx) {
        const TestTriple& tr = triples[t_idx];
        if (tr.v < 0 || tr.v >= ctx.voa->dim() || tr.i < 0 || tr.i >= w1.dim() || tr.j < 0 ||
            tr.j >= w2.dim())
            throw ValidationError("triple index out of range");
        const Rational wi = w1.weight_of(tr.i);
        const Rational wj = w2.weight_of(tr.j);
        const long h = integer_weight(*ctx.voa, tr.v, "check_pz_jacobi");
        const Vec carrier = Vec::unit(tr.v);
        const auto chain = l1_chain(*ctx.voa, carrier);
        long compared = 0, skipped = 0;
        bool pass = true;
        std::string wit;

        for (long s = -s_range; s <= s_range; ++s) {
            for (long q = -q_range; q <= q_range; ++q) {
                SideAcc left, right;
                {
                    // Left side: operator modes on the stored completion.
                    for (const Rational& a : w3.weights()) {
                        if (!left.determined_at(a)) continue;
                        for (long mm = 0;; ++mm) {
                            long n;
                            Rational bin;
                            Scalar zf;
                            bool opp = transpose;
                            if (!transpose) {
                                if (s >= 0 && mm > s) break;
                                n = s + q - mm;
                                bin = binomial(Rational(s), mm);
                                zf = z_pow_int(z, mm);
                            } else {
                                n = mm + s;
                                bin = binomial(Rational(mm - q - 1), mm);
                                zf = z_pow_int(z, q - mm);
                            }
                            const Rational shift =
                                opp ? Rational(n + 1 - h) : Rational(h - n - 1);
                            const Rational ap = a - shift;  // source weight of the mode
                            if (ap < w3.wmin()) break;
                            if (bin.is_zero()) continue;
                            if (ap > w3.wmax()) {
                                left.undet.insert(a);
                                break;
                            }
                            const auto& comp = m.at(tr.i, tr.j);
                            auto it = comp.find(ap);
                            if (it == comp.end()) continue;
                            PartialVec mv = opp
                                                ? opp_on_vec(act3, chain, h, n, it->second)
                                                : mode_on_vec(act3, carrier, n, it->second);
                            if (!mv.det) {
                                left.undet.insert(a);
                                break;
                            }
                            const Rational sg = (mm % 2 == 0) ? bin : -bin;
                            axpy_mixed(left.val[a], mul_mixed(Scalar(sg), zf), mv.val);
                        }
                    }

                    // First right-hand side: modes feeding the first slot.
                    for (long mm = 0;; ++mm) {
                        long n;
                        Rational bin;
                        Scalar zf;
                        if (!transpose) {
                            n = mm + s;
                            bin = binomial(Rational(mm - q - 1), mm);
                            zf = z_pow_int(z, q - mm);
                        } else {
                            if (s >= 0 && mm > s) break;
                            n = s + q - mm;
                            bin = binomial(Rational(s), mm);
                            zf = z_pow_int(z, mm);
                        }
                        const Rational uw =
                            wi + (transpose ? Rational(n + 1 - h) : Rational(h - n - 1));
                        if (uw < w1.wmin()) break;
                        if (bin.is_zero()) continue;
                        if (uw > w1.wmax()) {
                            right.undet_all = true;
                            break;
                        }
                        PartialVec uv = transpose ? opposite_apply(act1, chain, h, n, tr.i)
                                                  : mode_apply(act1, carrier, n, tr.i);
                        if (!uv.det) {
                            right.undet_all = true;
                            break;
                        }
                        if (uv.val.is_zero()) continue;
                        const Rational sg = (mm % 2 == 0) ? bin : -bin;
                        const Scalar c = mul_mixed(Scalar(sg), zf);
                        for (const auto& [w, vecw] : m.apply(uv.val, Vec::unit(tr.j)))
                            axpy_mixed(right.val[w], c, vecw);
                    }

                    // Second right-hand side: modes feeding the second slot.
                    for (long mm = 0;; ++mm) {
                        if (s >= 0 && mm > s) break;
                        const long n = mm + q;
                        const Rational ww = wj + Rational(h - n - 1);
                        if (ww < w2.wmin()) break;
                        const Rational bin = binomial(Rational(s), mm);
                        if (bin.is_zero()) continue;
                        if (ww > w2.wmax()) {
                            right.undet_all = true;
                            break;
                        }
                        PartialVec wv = mode_apply(act2, carrier, n, tr.j);
                        if (!wv.det) {
                            right.undet_all = true;
                            break;
                        }
                        if (wv.val.is_zero()) continue;
                        Rational sg = ((s + mm) % 2 == 0) ? bin : -bin;
                        if (transpose) sg = -sg;
                        const Scalar c = mul_mixed(Scalar(sg), z_pow_int(z, s - mm));
                        for (const auto& [w, vecw] : m.apply(Vec::unit(tr.i), wv.val))
                            axpy_mixed(right.val[w], c, vecw);
                    }
                }

                for (const Rational& a : w3.weights()) {
                    if (!left.determined_at(a) || !right.determined_at(a)) {
                        ++skipped;
                        continue;
                    }
                    ++compared;
                    if (pass && !Vec::approx_equal(left.at(a), right.at(a), tol)) {
                        pass = false;
                        std::ostringstream os;
                        os << "s=" << s << " q=" << q << " a=" << a.str() << ": "
                           << left.at(a).str() << " vs " << right.at(a).str();
                        wit = os.str();
                    }
                }
            }
        }

        if (compared == 0)
            throw WindowTooSmall("commutation triple " + std::to_string(t_idx) +
                                 " admits no comparable coefficient");
        std::ostringstream name;
        name << "commutation triple " << t_idx << " ("
             << (transpose ? "transpose" : "direct") << ", " << compared << " coefficients)";
        rep.add(name.str(), pass, wit);
        (void)skipped;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Compatibility of a functional with the dressed action
// ---------------------------------------------------------------------------

namespace {

// The dressed-action coefficient at (s, q), assembled directly from the
// two-term expansion of the defining display (s >= 0 keeps both series
// finite through the window floors).
DualElement dressed_row(const PzContext& ctx, const DualElement& f, const Vec& v, long s,
                        long q) {
    const LogIntertwiner& act1 = ctx.acts[0];
    const LogIntertwiner& act2 = ctx.acts[1];
    const GradedModule& m1 = f.slot(0);
    const Scalar& z = ctx.branch.z;
    DualElement out({f.slot_ptr(0), f.slot_ptr(1)});
    for (const auto& [vb, cv] : v.entries()) {
        if (cv.is_zero()) continue;
        const long h = integer_weight(*ctx.voa, vb, "dressed_row");
        const auto chain = l1_chain(*ctx.voa, Vec::unit(vb));
        for (int i = 0; i < m1.dim(); ++i) {
            const Rational wi = m1.weight_of(i);
            for (int j = 0; j < f.slot(1).dim(); ++j) {
                const std::vector<int> idx{i, j};
                if (!out.is_determined(idx)) continue;
                bool det = true;
                Scalar acc;

                // Slot-2 series: opposite modes against powers of z.
                for (long mm = 0; mm <= s && det; ++mm) {
                    const Rational bin = binomial(Rational(s), mm);
                    if (bin.is_zero()) continue;
                    PartialVec w = opposite_apply(act2, chain, h, q - mm, j);
                    if (!w.det) {
                        det = false;
                        break;
                    }
                    PartialScalar ev = eval_with_vec(f, 1, w.val, idx);
                    if (!ev.det) {
                        det = false;
                        break;
                    }
                    if (ev.val.is_zero()) continue;
                    const Rational sg = ((s + mm) % 2 == 0) ? bin : -bin;
                    acc = add_mixed(acc, mul_mixed(mul_mixed(Scalar(sg), z_pow_int(z, s - mm)),
                                                   ev.val));
                }

                // Slot-1 series: the raising-chain corrections.
                for (std::size_t r = 0; det && r < chain.size(); ++r) {
                    const Rational rfac = factorial(static_cast<long>(r));
                    for (long mm = 0;; ++mm) {
                        const long n = mm + s;
                        const Rational tw =
                            wi + Rational(h - static_cast<long>(r) - n - 1);
                        if (tw < m1.wmin()) break;
                        const long sp = q + 1 + mm + static_cast<long>(r) - 2 * h;
                        const Rational bin = binomial(Rational(sp), mm);
                        if (bin.is_zero()) continue;
                        if (tw > m1.wmax()) {
                            det = false;
                            break;
                        }
                        PartialVec mv = mode_apply(act1, chain[r], n, i);
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
                        const Rational sg = ((mm + h) % 2 == 0) ? bin : -bin;
                        acc = add_mixed(
                            acc, mul_mixed(mul_mixed(Scalar(sg / rfac), z_pow_int(z, -sp - 1)),
                                           ev.val));
                    }
                }

                if (!det) {
                    out.mark_undetermined(idx);
                    continue;
                }
                if (!acc.is_zero()) out.set(idx, add_mixed(out.at(idx), mul_mixed(cv, acc)));
            }
        }
    }
    return out;
}

} // namespace

Report check_compatibility(const PzContext& ctx, const DualElement& f,
                           const CompatibilityOptions& opt) {
    if (f.arity() != 2)
        throw ValidationError("compatibility is defined for two-slot functionals");
    if (!ctx.voa) throw ValidationError("context carries no algebra module");
    const std::vector<Vec> tvs =
        opt.test_vectors.empty() ? default_test_vectors(*ctx.voa) : opt.test_vectors;
    const double fscale = entry_scale(f);

    Report rep;
    long total_compared = 0;

    // Part one: beyond the support of f, every carrier power must act as
    // zero on the determined part of the grid.
    const Rational grid_floor = f.slot(0).wmin() + f.slot(1).wmin();
    long base = 0;
    if (opt.probe_base) {
        base = *opt.probe_base;
    } else if (auto pstar = f.max_support_weight()) {
        base = ceil_long(*pstar) - floor_long(grid_floor) + 1;
    }
    for (std::size_t k = 0; k < tvs.size(); ++k) {
        const long h = carrier_weight(*ctx.voa, tvs[k], "check_compatibility");
        bool pass = true;
        std::string wit;
        long checked = 0;
        for (int t = 0; t < opt.probe_count && pass; ++t) {
            const long n = base + h + t;
            DualElement g = tau_component(ctx, f, tvs[k], n);
            for (const auto& [idx, val] : g.entries()) {
                if (val.abs() > opt.tol * fscale) {
                    pass = false;
                    wit = "n=" + std::to_string(n) + " at " + tuple_str(idx) + ": " +
                          val.str();
                    break;
                }
            }
            checked += static_cast<long>(g.grid().size()) -
                       static_cast<long>(g.undetermined().size());
        }
        total_compared += checked;
        rep.add("truncation probe v" + std::to_string(k), pass, wit);
    }

    // Part two: for s >= 0 the dressed-action coefficient at (s, q) must
    // match the finite combination of carrier components row by row.
    for (std::size_t k = 0; k < tvs.size(); ++k) {
        for (long s = 0; s <= opt.s_max; ++s) {
            bool pass = true;
            std::string wit;
            long row_compared = 0;
            for (long q = opt.q_lo; q <= opt.q_hi; ++q) {
                DualElement lhs = dressed_row(ctx, f, tvs[k], s, q);
                DualElement rhs = tau_apply(
                    ctx, f,
                    GeneratingAction::delta_row(tvs[k], ctx.branch.z, s, q,
                                                static_cast<int>(s)));
                auto st = DualElement::compare_common(lhs, rhs, opt.tol);
                row_compared += st.compared;
                if (pass && st.mismatch) {
                    pass = false;
                    wit = "q=" + std::to_string(q) + " at " + *st.mismatch;
                }
            }
            total_compared += row_compared;
            rep.add("dressing row v" + std::to_string(k) + " s" + std::to_string(s), pass,
                    wit);
        }
    }

    if (total_compared == 0)
        throw WindowTooSmall("compatibility check: nothing comparable within the windows");
    return rep;
}

// ---------------------------------------------------------------------------
// Local module generation
// ---------------------------------------------------------------------------

LocalModuleReport generate_local_module(const PzContext& ctx, const DualElement& f,
                                        const LocalModuleOptions& opt) {
    LocalModuleReport out;
    if (!ctx.voa) throw ValidationError("context carries no algebra module");
    const std::vector<Vec> tvs =
        opt.test_vectors.empty() ? default_test_vectors(*ctx.voa) : opt.test_vectors;

    CompatibilityOptions pre = opt.precondition;
    if (pre.test_vectors.empty()) pre.test_vectors = tvs;
    Report compat = check_compatibility(ctx, f, pre);
    out.checks.merge(compat);
    if (!compat.all_pass())
        throw ValidationError("seed functional fails the compatibility precondition: " +
                              first_fail(compat));

    std::set<std::vector<int>> mask;
    for (const auto& idx : f.grid())
        if (f.is_determined(idx)) mask.insert(idx);
    if (mask.empty()) throw WindowTooSmall("seed functional determines no grid entry");

    if (f.is_zero()) {
        out.dimension = 0;
        out.comparable_entries = static_cast<int>(mask.size());
        out.min_relative_weight = Rational(0);
        out.checks.add("closure discovery", true, "zero seed spans the zero module");
        return out;
    }

    std::vector<long> hs;
    hs.reserve(tvs.size());
    for (const auto& v : tvs) hs.push_back(carrier_weight(*ctx.voa, v, "closure"));

    // Label bookkeeping: functionals are tagged with the seed's label class
    // shifted by the carriers used to reach them.
    auto carrier_label = [&](const Vec& v) -> std::vector<long> {
        std::optional<std::vector<long>> lab;
        for (const auto& [vb, c] : v.entries()) {
            if (c.is_zero()) continue;
            const auto& lb = ctx.voa->basis()[static_cast<std::size_t>(vb)].label;
            if (lab && *lab != lb) return {};
            lab = lb;
        }
        return lab ? *lab : std::vector<long>{};
    };
    std::vector<long> seed_lab;
    if (auto parts = f.label_components(); parts.size() == 1) seed_lab = parts.begin()->first;

    struct Node {
        DualElement g;
        Rational rel;
        std::vector<long> lab;
    };
    std::vector<Node> acc;
    auto span = std::make_unique<SpanTracker>(mask, opt.tol);
    span->add(f);
    acc.push_back({f, Rational(0), seed_lab});

    for (std::size_t k = 0; k < acc.size(); ++k) {
        for (std::size_t t = 0; t < tvs.size(); ++t) {
            for (long n = opt.mode_lo; n <= opt.mode_hi; ++n) {
                DualElement cand = tau_component(ctx, acc[k].g, tvs[t], n);
                if (cand.entries().empty()) continue;
                std::set<std::vector<int>> mask2;
                for (const auto& idx : mask)
                    if (cand.is_determined(idx)) mask2.insert(idx);
                if (mask2.empty())
                    throw WindowTooSmall("closure mask emptied by an undetermined image");
                if (mask2.size() != mask.size()) {
                    // Conservative dedup on the shrunken common grid: keep the
                    // candidate only if it is independent there.
                    auto t2 = std::make_unique<SpanTracker>(mask2, opt.tol);
                    for (const auto& node : acc) t2->add(node.g);
                    if (!t2->add(cand)) continue;
                    mask = std::move(mask2);
                    span = std::move(t2);
                } else if (!span->add(cand)) {
                    continue;
                }
                Rational rel = acc[k].rel + Rational(hs[t] - n - 1);
                std::vector<long> lab = acc[k].lab;
                const auto cl = carrier_label(tvs[t]);
                if (!cl.empty() && cl.size() == lab.size())
                    for (std::size_t s = 0; s < lab.size(); ++s) lab[s] += cl[s];
                acc.push_back({std::move(cand), rel, std::move(lab)});
                if (static_cast<int>(acc.size()) > opt.dim_budget)
                    throw ClosureOverflow("local module closure exceeded the budget of " +
                                          std::to_string(opt.dim_budget) + " functionals");
            }
        }
    }

    // Dimensions on the final common grid.
    {
        SpanTracker fin(mask, opt.tol);
        for (const auto& node : acc)
            if (fin.add(node.g)) ++out.dimension;
    }
    out.comparable_entries = static_cast<int>(mask.size());
    std::map<std::pair<std::vector<long>, Rational>, std::vector<const DualElement*>> groups;
    for (const auto& node : acc) groups[{node.lab, node.rel}].push_back(&node.g);
    bool first = true;
    for (const auto& [key, members] : groups) {
        SpanTracker gs(mask, opt.tol);
        int d = 0;
        for (const DualElement* g : members)
            if (gs.add(*g)) ++d;
        if (d == 0) continue;
        out.graded_dims[key] = d;
        if (first || key.second < out.min_relative_weight) out.min_relative_weight = key.second;
        first = false;
    }
    out.checks.add("closure discovery", true,
                   "dimension " + std::to_string(out.dimension) + " on " +
                       std::to_string(mask.size()) + " comparable entries");

    // Commutation identity of the action on the discovered module, checked
    // at the seed over a small box of component exponents.
    if (opt.jacobi_on_closure) {
        if (!ctx.act_vv)
            throw ValidationError("closure commutation check needs the algebra self-action");
        const LogIntertwiner& avv = *ctx.act_vv;
        if (avv.w1_ptr().get() != ctx.voa.get() || avv.w2_ptr().get() != ctx.voa.get() ||
            avv.w3_ptr().get() != ctx.voa.get())
            throw SlotMismatch("algebra self-action is not wired to the context algebra");
        const double fscale = entry_scale(f);
        const Rational grid_floor = f.slot(0).wmin() + f.slot(1).wmin();
        long base = 0;
        if (pre.probe_base) {
            base = *pre.probe_base;
        } else if (auto pstar = f.max_support_weight()) {
            base = ceil_long(*pstar) - floor_long(grid_floor) + 1;
        }

        const std::size_t ui = 0;
        const std::size_t vi = tvs.size() > 1 ? 1 : 0;
        const long hu = hs[ui], hv = hs[vi];

        std::map<std::pair<std::size_t, long>, DualElement> inner;
        auto tau_seed = [&](std::size_t ti, long n) -> const DualElement& {
            auto key = std::make_pair(ti, n);
            auto it = inner.find(key);
            if (it == inner.end())
                it = inner.emplace(key, tau_component(ctx, f, tvs[ti], n)).first;
            return it->second;
        };
        std::map<std::array<long, 4>, DualElement> second;
        auto tau_two = [&](std::size_t to, long no, std::size_t ti, long ni)
            -> const DualElement& {
            std::array<long, 4> key{static_cast<long>(to), no, static_cast<long>(ti), ni};
            auto it = second.find(key);
            if (it == second.end())
                it = second.emplace(key, tau_component(ctx, tau_seed(ti, ni), tvs[to], no))
                         .first;
            return it->second;
        };

        const int r = opt.jacobi_range;
        long compared = 0, skipped_combos = 0;
        bool pass = true;
        std::string wit;
        for (long A = -r; A <= r && pass; ++A) {
            for (long B = -r; B <= r && pass; ++B) {
                for (long C = -r; C <= r && pass; ++C) {
                    DualElement lhs({f.slot_ptr(0), f.slot_ptr(1)});
                    DualElement rhs({f.slot_ptr(0), f.slot_ptr(1)});
                    bool combo_ok = true;

                    const long m0v = std::max(0L, hv + base - C);
                    const long m0u = std::max(0L, hu + base - B);
                    const long mstop = std::max(m0v, m0u) + 2;
                    for (long mm = 0; mm <= mstop && combo_ok; ++mm) {
                        if (A >= 0 && mm > A) break;
                        const Rational bin = binomial(Rational(A), mm);
                        if (bin.is_zero()) continue;
                        const Scalar c1 = Scalar(mm % 2 == 0 ? bin : -bin);
                        const DualElement& gv = tau_seed(vi, C + mm);
                        if (mm >= m0v && !effectively_zero(gv, opt.tol, fscale)) {
                            pass = false;
                            wit = "inner action survives beyond the support bound at n=" +
                                  std::to_string(C + mm);
                            break;
                        }
                        if (!gv.entries().empty() || !gv.undetermined().empty())
                            lhs.add_scaled(c1, tau_two(ui, A + B - mm, vi, C + mm));
                        const DualElement& gu = tau_seed(ui, B + mm);
                        if (mm >= m0u && !effectively_zero(gu, opt.tol, fscale)) {
                            pass = false;
                            wit = "inner action survives beyond the support bound at n=" +
                                  std::to_string(B + mm);
                            break;
                        }
                        const Scalar c2 =
                            Scalar((A % 2 == 0) ? Rational(-1) : Rational(1)) * c1;
                        if (!gu.entries().empty() || !gu.undetermined().empty())
                            lhs.add_scaled(c2, tau_two(vi, A + C - mm, ui, B + mm));
                    }
                    if (!pass) break;

                    for (long mm = 0; combo_ok; ++mm) {
                        if (B >= 0 && mm > B) break;
                        const Rational pw = Rational(hu + hv - A - mm - 1);
                        if (pw < ctx.voa->wmin()) break;
                        const Rational bin = binomial(Rational(B), mm);
                        if (bin.is_zero()) continue;
                        if (pw > ctx.voa->wmax()) {
                            combo_ok = false;
                            break;
                        }
                        PartialVec uv = mode_on_vec(avv, tvs[ui], A + mm, tvs[vi]);
                        if (!uv.det) {
                            combo_ok = false;
                            break;
                        }
                        if (uv.val.is_zero()) continue;
                        rhs += tau_component(ctx, f, uv.val, B + C - mm).scaled(Scalar(bin));
                    }
                    if (!combo_ok) {
                        ++skipped_combos;
                        continue;
                    }

                    auto st = DualElement::compare_common(lhs, rhs, opt.tol);
                    compared += st.compared;
                    if (st.compared == 0) {
                        ++skipped_combos;
                    } else if (pass && st.mismatch) {
                        pass = false;
                        wit = "A=" + std::to_string(A) + " B=" + std::to_string(B) +
                              " C=" + std::to_string(C) + " at " + *st.mismatch;
                    }
                }
            }
        }
        if (pass && compared == 0) {
            pass = false;
            wit = "no comparable grid entry in any exponent combination";
        }
        std::ostringstream name;
        name << "closure commutation box r=" << r << " (" << compared << " entries, "
             << skipped_combos << " skipped combos)";
        out.checks.add(name.str(), pass, wit);
    }

    return out;
}

} // namespace logtensor
