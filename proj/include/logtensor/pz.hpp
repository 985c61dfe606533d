#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "logtensor/intertwiner.hpp"
#include "logtensor/module.hpp"
#include "logtensor/report.hpp"

namespace logtensor {

// ---------------------------------------------------------------------------
// Branch data
// ---------------------------------------------------------------------------

// A nonzero evaluation point z together with an integer branch index p.  The
// pair selects the logarithm l_p(z) = log z + 2*pi*i*p, where log is the
// principal branch normalized so that 0 <= Im(log z) < 2*pi.
struct BranchChoice {
    Scalar z;   // exact (Gaussian rational) when possible, complex otherwise
    int p = 0;

    static BranchChoice at_rational(const Rational& z, int p = 0);
    static BranchChoice at_complex(Cpx z, int p = 0);
};

// l_p(z).  Exact -- a rational multiple of zeta = i*pi -- when z is 1, -1, i
// or -i; complex double otherwise.  Throws ZeroArgument when z == 0.
Scalar branch_log(const BranchChoice& b);

// exp(e * l_p(z)) with maximal exactness.  For rational z this factors as
// |z|^e * exp(i*pi*e*(s + 2p)) with s = 0 for positive z and s = 1 for
// negative z; each factor stays exact whenever it can (integer e, phase a
// Gaussian unit).  Never throws for nonzero z.
Scalar branch_exp(const BranchChoice& b, const Rational& e);

// z^e for integer e, ignoring the branch: exact for exact z (via Gaussian
// rational arithmetic), complex otherwise.
Scalar z_pow_int(const Scalar& z, long e);

// ---------------------------------------------------------------------------
// Truncated dual elements
// ---------------------------------------------------------------------------

// A linear functional on the tensor product of two or three truncated
// modules, stored extensionally on the basis grid.  Windowed computations
// cannot always pin down every entry: whenever a contribution would need
// module data above the stored weight window, the affected grid entry is
// recorded in an explicit undetermined set instead of being silently
// dropped.  Values below the window never arise -- the window floor is the
// true bottom of each module, so those contributions are genuinely zero.
// Checks compare only entries that both sides determine, and report how
// many entries they skipped.
class DualElement {
  public:
    DualElement() = default;
    explicit DualElement(std::vector<std::shared_ptr<const GradedModule>> slots);

    int arity() const { return static_cast<int>(slots_.size()); }
    const GradedModule& slot(int which) const { return *slots_.at(which); }
    const std::shared_ptr<const GradedModule>& slot_ptr(int which) const {
        return slots_.at(which);
    }
    bool same_slots(const DualElement& o) const;

    // Entry access by basis-index tuple.  set() on an undetermined entry
    // re-determines it; mark_undetermined() discards any stored value.
    void set(const std::vector<int>& idx, const Scalar& value);
    const Scalar& at(const std::vector<int>& idx) const;  // zero when absent
    void mark_undetermined(const std::vector<int>& idx);
    bool is_determined(const std::vector<int>& idx) const;

    const std::map<std::vector<int>, Scalar>& entries() const { return vals_; }
    const std::set<std::vector<int>>& undetermined() const { return undet_; }

    bool is_zero() const;             // no nonzero determined entry
    bool fully_determined() const { return undet_.empty(); }

    // Every basis-index tuple of the grid, in lexicographic order.
    std::vector<std::vector<int>> grid() const;
    // Sum of the slot weights of a tuple.
    Rational grid_weight(const std::vector<int>& idx) const;
    // Largest grid weight carrying a nonzero or undetermined entry, when any.
    std::optional<Rational> max_support_weight() const;

    // Functional application.  nullopt when the value hinges on an
    // undetermined entry; multilinear in the vector arguments.
    std::optional<Scalar> eval(const std::vector<int>& idx) const;
    std::optional<Scalar> eval(const std::vector<Vec>& args) const;

    // Linear structure.  Sums union the undetermined sets; scaling by an
    // exact zero clears them.  Throws SlotMismatch on different slot modules.
    DualElement& operator+=(const DualElement& o);
    DualElement& add_scaled(const Scalar& c, const DualElement& o);
    DualElement scaled(const Scalar& c) const;
    friend DualElement operator+(DualElement a, const DualElement& b) { return a += b; }
    DualElement operator-() const { return scaled(Scalar(Rational(-1))); }

    // Splits into parts supported on a single value of the entrywise sum of
    // the slot labels (tuples whose slots carry no labels map to the empty
    // key).  The undetermined entries travel with their label class.
    std::map<std::vector<long>, DualElement> label_components() const;

    struct CompareStats {
        int compared = 0;   // tuples determined on both sides
        int skipped = 0;    // tuples undetermined on at least one side
        std::optional<std::string> mismatch;  // first differing tuple
    };
    // Entrywise comparison over the full grid on the commonly determined
    // part.  Exact entries compare exactly; anything through the complex
    // layer uses tol (relative above magnitude 1).
    static CompareStats compare_common(const DualElement& a, const DualElement& b, double tol);

  private:
    std::vector<std::shared_ptr<const GradedModule>> slots_;
    std::map<std::vector<int>, Scalar> vals_;
    std::set<std::vector<int>> undet_;
};

// ---------------------------------------------------------------------------
// Maps attached to an evaluation point
// ---------------------------------------------------------------------------

// A bilinear map W1 (x) W2 -> (completion of W3) attached to a branch
// choice.  Direct-kind maps realize products of vectors evaluated at z;
// transpose-kind maps arise from pairing a direct map against the graded
// dual of its target (see pq_transpose) and satisfy the opposite-operator
// form of the commutation identity.  Components are stored per basis pair
// and per target weight; the target window floor is the true bottom of W3,
// so stored data determines the map on the whole window.
class PzMap {
  public:
    enum class Kind { Direct, Transpose };

    PzMap(Kind kind, std::shared_ptr<const GradedModule> w1,
          std::shared_ptr<const GradedModule> w2, std::shared_ptr<const GradedModule> w3,
          BranchChoice branch);

    Kind kind() const { return kind_; }
    const BranchChoice& branch() const { return branch_; }
    const GradedModule& w1() const { return *w1_; }
    const GradedModule& w2() const { return *w2_; }
    const GradedModule& w3() const { return *w3_; }
    const std::shared_ptr<const GradedModule>& w1_ptr() const { return w1_; }
    const std::shared_ptr<const GradedModule>& w2_ptr() const { return w2_; }
    const std::shared_ptr<const GradedModule>& w3_ptr() const { return w3_; }

    // Accumulates the weight-w component of the image of (e_i, e_j).  The
    // weight must lie in the target window, every vector entry must be
    // homogeneous of weight w, and when all three modules carry labels the
    // entry labels must equal label(i) + label(j).
    void add_component(int i, int j, const Rational& w, const Vec& val);

    // Image of a basis pair (empty when nothing stored) and of vectors.
    const CompletionElement& at(int i, int j) const;
    CompletionElement apply(const Vec& a, const Vec& b) const;

    bool is_zero() const;
    const std::map<std::pair<int, int>, CompletionElement>& components() const {
        return comps_;
    }

    // Re-runs the structural invariants over everything stored.
    void validate() const;

    static bool approx_equal(const PzMap& a, const PzMap& b, double tol);

  private:
    Kind kind_;
    std::shared_ptr<const GradedModule> w1_, w2_, w3_;
    BranchChoice branch_;
    std::map<std::pair<int, int>, CompletionElement> comps_;
};

// Evaluates a stored family of series coefficients at the branch point:
// the (n; k) coefficient contributes exp((-n-1) l) * l^k times itself to
// the weight wt(i)+wt(j)-n-1 component.  Exact for exact l; for rational z
// the exponential factor stays exact whenever -n-1 is an integer.
PzMap intertwiner_to_map(const LogIntertwiner& y, const BranchChoice& b);

// Inverse direction: recovers the series coefficients from a stored map by
// conjugating with u^{L(0)}, u = x exp(-l).  Exact inverse of
// intertwiner_to_map for every branch choice; the nilpotent parts of L(0)
// on the three modules control the log degrees of the result.
LogIntertwiner map_to_intertwiner(const PzMap& m);

// Forms the functional w' o I on W1 (x) W2 by pairing the target completion
// against a vector of dual coordinates (index-aligned with the W3 basis).
DualElement pullback_functional(const PzMap& m, const Vec& wprime);

// ---------------------------------------------------------------------------
// Dual-side actions
// ---------------------------------------------------------------------------

// Everything a dual-side computation needs: the algebra module, one stored
// algebra action per tensor slot, optionally the action of the algebra on
// itself (needed when products u_m v enter), and the branch.
struct PzContext {
    std::shared_ptr<const GradedModule> voa;
    std::vector<LogIntertwiner> acts;
    std::optional<LogIntertwiner> act_vv;
    BranchChoice branch;
};

// A finite combination v (x) sum_n c_n t^n of algebra-element carriers: the
// symbolic argument of tau_apply.  Factories cover a single power v (x) t^n
// and the coefficient rows of the delta-function dressing
// x0^{-1} delta((x1^{-1} - z)/x0) expanded in nonnegative powers of z,
// truncated at a chosen depth (rows with s >= 0 are finite on their own).
struct GeneratingAction {
    Vec v;
    std::map<long, Scalar> coeffs;  // n -> coefficient of v (x) t^n

    static GeneratingAction component(const Vec& v, long n);
    static GeneratingAction delta_row(const Vec& v, const Scalar& z, long s, long q, int depth);
};

// The action of v (x) t^n on a two-slot functional:
//   (tau(v (x) t^n) f)(w1 (x) w2)
//     = f(w1 (x) opp_n(v) w2)
//       + sum_{m,r>=0} (-1)^{m+h} binom(n+1+m+r-2h, m) z^{-(n+2+m+r-2h)} / r!
//             f((L(1)^r v)_m w1 (x) w2)
// for v homogeneous of integer weight h, where opp_n is the opposite mode
//   opp_n(v) = sum_r (-1)^h / r! (L(1)^r v)_{2h-r-n-2}.
// Linear in v; grid entries the window cannot pin down are marked
// undetermined in the result.
DualElement tau_component(const PzContext& ctx, const DualElement& f, const Vec& v, long n);

// Linear extension of tau_component over a generating combination.
DualElement tau_apply(const PzContext& ctx, const DualElement& f, const GeneratingAction& g);

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

// Coefficientwise commutation identity for a stored map, in the kind's own
// form.  Direct kind, coefficient of x0^{-s-1} x1^{-q-1}:
//   sum_{m} binom(s,m) (-z)^m  v_{s+q-m} I(e_i (x) e_j)
//     = sum_{m} (-1)^m binom(m-q-1,m) z^{q-m} I(v_{m+s} e_i (x) e_j)
//       + sum_{m} (-1)^{s+m} binom(s,m) z^{s-m}  I(e_i (x) v_{m+q} e_j).
// Transpose kind replaces the left operator and the first right-hand
// operator by opposite modes and flips the sign of the second right-hand
// term.  Every sum terminates through the window floors; contributions the
// window roof cannot determine mark the coefficient as skipped.  Throws
// WindowTooSmall when a triple admits no comparable coefficient at all.
Report check_pz_jacobi(const PzMap& m, const PzContext& ctx,
                       const std::vector<TestTriple>& triples, int s_range, int q_range,
                       double tol = 1e-10);

struct CompatibilityOptions {
    std::vector<Vec> test_vectors;   // algebra elements; default: basis up to weight 2
    int probe_count = 3;             // trailing carrier powers that must act as zero
    std::optional<long> probe_base;  // probe offset; default derived from the support
    int s_max = 2;                   // dressing rows 0 <= s <= s_max
    int q_lo = -3, q_hi = 3;         // coefficient rows compared per dressing
    double tol = 1e-10;
};

// Two-part admissibility check for a functional:
//  (1) truncation probe -- for each test vector v of weight h, the components
//      tau(v (x) t^n) f must vanish (on the determined part of the grid)
//      for n in a probe window beyond the support of f;
//  (2) dressing rows -- for s >= 0 the finite row
//      sum_{m<=s} binom(s,m)(-z)^m tau(v (x) t^{q-s+m}) f must reproduce
//      the two-term expansion of the dressed action coefficientwise.
// Rows with s < 0 have no finite expansion against truncated functionals
// (the dressing tail grows as fast as the window truncates) and are out of
// scope here by design.  Throws WindowTooSmall when nothing is comparable.
Report check_compatibility(const PzContext& ctx, const DualElement& f,
                           const CompatibilityOptions& opt = {});

struct LocalModuleOptions {
    std::vector<Vec> test_vectors;  // algebra elements; default: basis up to weight 2
    long mode_lo = 0, mode_hi = 3;  // carrier powers used for generation
    int dim_budget = 48;            // ClosureOverflow beyond this many basis functionals
    bool jacobi_on_closure = true;  // verify the component commutation identity
    int jacobi_range = 1;           // exponent box [-r, r]^3 for that identity
    double tol = 1e-10;
    CompatibilityOptions precondition;  // f must pass check_compatibility first
};

struct LocalModuleReport {
    Report checks;
    int dimension = 0;  // independent functionals discovered (within window)
    // (entrywise slot-label sum, weight relative to the seed) -> dimension.
    std::map<std::pair<std::vector<long>, Rational>, int> graded_dims;
    Rational min_relative_weight;  // floor of the discovered grading
    int comparable_entries = 0;    // grid tuples the span arithmetic used
};

// Closes a functional under the carrier components tau(v (x) t^n), reporting
// the dimensions of the discovered span graded by (label, relative weight).
// Discovery, dedup and the dimension counts are all statements about the
// stored window: span arithmetic runs on the grid tuples every discovered
// functional determines.  Throws ValidationError when the seed fails the
// compatibility precondition and ClosureOverflow past the dimension budget.
LocalModuleReport generate_local_module(const PzContext& ctx, const DualElement& f,
                                        const LocalModuleOptions& opt = {});

// Transpose across the pairing of W3 with its graded dual: the returned map
// sends (dual coordinate kappa of W3, basis j of W2) to the functional
// t -> [m(e_t (x) e_j)]_kappa, has type (W3c (x) W2) -> completion of W1c,
// and flips the kind.  w1c and w3c must be the contragredients of m's
// source and target (index-aligned with the original bases); applying the
// transpose twice with the original modules returns the original map.
PzMap pq_transpose(const PzMap& m, std::shared_ptr<const GradedModule> w3c,
                   std::shared_ptr<const GradedModule> w1c);

} // namespace logtensor
