#pragma once

#include <memory>
#include <optional>
#include <set>

#include "logtensor/module.hpp"
#include "logtensor/report.hpp"
#include "logtensor/series.hpp"

namespace logtensor {

// A truncated logarithmic intertwining operator between weight-graded
// modules, stored extensionally: for basis vectors i of the first source and
// j of the second, the coefficient of x^{-n-1} (log x)^k in Y(e_i, x) e_j is
// a vector in the target.  Coefficients outside the target's weight window
// are not stored; within the window the family is exact.
class LogIntertwiner {
  public:
    using Key = std::pair<Rational, int>;              // (n, log degree k)
    using Family = std::map<std::pair<int, int>, Vec>; // (i, j) -> target vector

    LogIntertwiner(std::shared_ptr<const GradedModule> w1,
                   std::shared_ptr<const GradedModule> w2,
                   std::shared_ptr<const GradedModule> w3, int kmax);

    const GradedModule& w1() const { return *w1_; }
    const GradedModule& w2() const { return *w2_; }
    const GradedModule& w3() const { return *w3_; }
    const std::shared_ptr<const GradedModule>& w1_ptr() const { return w1_; }
    const std::shared_ptr<const GradedModule>& w2_ptr() const { return w2_; }
    const std::shared_ptr<const GradedModule>& w3_ptr() const { return w3_; }
    int kmax() const { return kmax_; }

    // Inserts (accumulates) a coefficient after checking the weight rule,
    // label additivity and the log-degree cap.
    void set_coeff(const Rational& n, int k, int i, int j, const Vec& value);
    // Stored coefficient; the zero vector when absent.
    const Vec& coeff(const Rational& n, int k, int i, int j) const;
    const std::map<Key, Family>& families() const { return c_; }

    // Bilinear evaluation on arbitrary source vectors.
    std::map<Key, Vec> apply_vec(const Vec& a, const Vec& b) const;
    // Same, rendered as a series in x with vector coefficients.
    Series apply(const Vec& a, const Vec& b, VarId x, const Policy& pol) const;

    // Fractional parts of the stored n-support.
    std::set<Rational> cosets() const;
    // Structural re-validation of every stored coefficient.
    void validate() const;

    int max_stored_log() const;

  private:
    std::shared_ptr<const GradedModule> w1_, w2_, w3_;
    int kmax_;
    std::map<Key, Family> c_;
};

// Basis-index triple (v in V, i in W1, j in W2) for axiom spot checks.
struct TestTriple {
    int v;
    int i;
    int j;
};

// Full axiom verification: the Jacobi identity expanded through delta
// kernels in three variables, the L(-1)-derivative property, and the L(j)
// brackets for j = -1, 0, 1.  The three auxiliary operators are the module
// actions of V on the sources and the target; comparisons happen only on
// monomials whose coefficients the truncation fully determines.
// Throws WindowTooSmall if some requested comparison has an empty window.
Report validate_axioms(const LogIntertwiner& y, const LogIntertwiner& act1,
                       const LogIntertwiner& act2, const LogIntertwiner& act3,
                       const std::vector<TestTriple>& triples);

// The two L(0)-transport identities and their generating form (the latter
// truncated to the given y-order) for one source pair and offsets a, b, c.
Report l0_transport_check(const LogIntertwiner& y, const Rational& a, const Rational& b,
                          const Rational& c, int t, int i, int j, int y_order = 3);

// Log-degree bound k1+k2+k3-3 on the matrix coefficient against a Jordan
// dual vector of weight n3, and the threshold vanishing of high log levels.
Report degree_bounds_check(const LogIntertwiner& y, int i, int k1, int j, int k2,
                           const Vec& dual, const Rational& n3, int k3);

// The binomial-weighted log shift: coefficient (n; k) of the result is
// binom(k+t, t) times the stored (n; k+t), optionally restricted to one
// exponent coset mod 1.
LogIntertwiner xt_transform(const LogIntertwiner& y, int t,
                            std::optional<Rational> coset = std::nullopt);

// Conjugation identities: translation by e^{yL(-1)}, dilation by y^{L(0)},
// and the e^{yL(1)} composite with argument x(1-yx)^{-1}; each compared
// slice by slice in y up to the given order.
Report conjugation_checks(const LogIntertwiner& y, int i, int j, int order);

// Reconstructs the (n; r) coefficient for the source pair (i, j) from
// log-free slices of L(0)-shifted applications only; the result must match
// the stored coefficient.  Throws SingularRecovery if the nilpotency budget
// on the target weight space is exhausted.
Vec recover_coefficients(const LogIntertwiner& y, int i, int j, const Rational& n, int r);

} // namespace logtensor
