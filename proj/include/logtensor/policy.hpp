#pragma once

#include <map>

#include "logtensor/monomial.hpp"

namespace logtensor {

inline constexpr int kDefaultMaxLog = 8;

// Truncation contract for one variable.  Window variables carry a rational
// exponent interval outside which product terms are discarded; expansion
// variables only ever see nonnegative integer powers up to a fixed order
// (anything else in an expansion slot is a usage bug, not truncation).
struct VarPolicy {
    enum class Kind { window, expansion };

    Kind kind = Kind::window;
    Rational lo, hi;     // window bounds (inclusive)
    int order = 0;       // expansion order cap
    int max_log = kDefaultMaxLog;

    static VarPolicy window(const Rational& lo, const Rational& hi, int max_log = kDefaultMaxLog);
    static VarPolicy expansion(int order, int max_log = kDefaultMaxLog);

    friend bool operator==(const VarPolicy& a, const VarPolicy& b) {
        return a.kind == b.kind && a.lo == b.lo && a.hi == b.hi && a.order == b.order &&
               a.max_log == b.max_log;
    }
};

// Per-series truncation policy.  Series may only combine when their policies
// agree on every shared variable; the result carries the union.
class Policy {
  public:
    Policy() = default;

    Policy& with(VarId x, VarPolicy vp);
    bool declares(VarId x) const { return vars_.find(x) != vars_.end(); }
    const VarPolicy& at(VarId x) const;
    const std::map<VarId, VarPolicy>& vars() const { return vars_; }

    // Union of declarations; throws IncompatiblePolicies when a shared
    // variable is declared differently.
    static Policy merged(const Policy& a, const Policy& b);

    // Copy with one variable's declaration removed.
    Policy without(VarId x) const;

    // Whether a monomial may be *stored* under this policy.  Returns false
    // for exponents outside a window or beyond an expansion order (plain
    // truncation); throws PolicyOverflow for structural violations (unknown
    // variable, negative/fractional power of an expansion variable, log
    // degree above the cap).
    bool admits(const Monomial& m) const;

    friend bool operator==(const Policy& a, const Policy& b) { return a.vars_ == b.vars_; }

  private:
    std::map<VarId, VarPolicy> vars_;
};

} // namespace logtensor
