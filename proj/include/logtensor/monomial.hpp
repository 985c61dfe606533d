#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "logtensor/rational.hpp"

namespace logtensor {

// Interned symbolic variable.  Each ordinary variable implicitly owns one
// log companion; the companion never appears as its own VarId, it lives in
// the log-degree slot of monomials.  Ordering is by name so that all
// containers and serialized forms are stable across processes.
class VarId {
  public:
    static VarId of(const std::string& name);
    const std::string& name() const;

    friend bool operator==(VarId a, VarId b) { return a.id_ == b.id_; }
    friend bool operator!=(VarId a, VarId b) { return a.id_ != b.id_; }
    friend bool operator<(VarId a, VarId b);

  private:
    explicit VarId(std::uint32_t id) : id_(id) {}
    std::uint32_t id_;
};

// x1^{e1} (log x1)^{m1} x2^{e2} ... with rational exponents and nonnegative
// integer log degrees.  Absent entries are zero; zero entries are pruned so
// equality is structural.
class Monomial {
  public:
    Monomial() = default;

    static Monomial power(VarId x, const Rational& e);
    static Monomial log_power(VarId x, int degree);

    const Rational& exp(VarId x) const;
    int log_deg(VarId x) const;
    void set_exp(VarId x, const Rational& e);
    void set_log_deg(VarId x, int d);

    const std::map<VarId, Rational>& exps() const { return exp_; }
    const std::map<VarId, int>& log_degs() const { return log_; }
    bool is_constant() const { return exp_.empty() && log_.empty(); }

    Monomial times(const Monomial& o) const;

    friend bool operator==(const Monomial& a, const Monomial& b) {
        return a.exp_ == b.exp_ && a.log_ == b.log_;
    }
    friend bool operator!=(const Monomial& a, const Monomial& b) { return !(a == b); }
    friend bool operator<(const Monomial& a, const Monomial& b);

    std::string str() const;

  private:
    std::map<VarId, Rational> exp_;
    std::map<VarId, int> log_;
};

} // namespace logtensor
