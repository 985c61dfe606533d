#pragma once

// Shared internals of the evaluation-map layer (pz.cpp) and its checks
// (pz_checks.cpp).  Everything here follows the same determinacy contract:
// contributions below a module's window floor are genuinely zero, while
// contributions above the roof flip the `det` flag instead of being dropped.

#include <string>
#include <vector>

#include "logtensor/intertwiner.hpp"
#include "logtensor/linalg.hpp"
#include "logtensor/module.hpp"
#include "logtensor/pz.hpp"

namespace logtensor::pzdetail {

std::string tuple_str(const std::vector<int>& idx);

// Weight of an algebra basis vector, required to be an integer.
long integer_weight(const GradedModule& voa, int vb, const char* who);

// Matrix application that may cross scalar layers entry by entry.
Vec apply_mixed(const Mat& m, const Vec& v);

// v, L(1)v, L(1)^2 v, ... down to (but not including) zero.
std::vector<Vec> l1_chain(const GradedModule& voa, Vec v);

struct PartialVec {
    Vec val;
    bool det = true;
};

struct PartialScalar {
    Scalar val;
    bool det = true;
};

// u_m e_i through a stored action; carrier u lives in the algebra.
PartialVec mode_apply(const LogIntertwiner& act, const Vec& u, long m, int i);

// Carrier mode applied to an arbitrary vector of the slot module.
PartialVec mode_on_vec(const LogIntertwiner& act, const Vec& carrier, long n, const Vec& w);

// Opposite mode opp_n(v) e_j for a weight-h carrier with raising chain
// `chain`, and its extension to arbitrary vectors.
PartialVec opposite_apply(const LogIntertwiner& act, const std::vector<Vec>& chain, long h,
                          long n, int j);
PartialVec opp_on_vec(const LogIntertwiner& act, const std::vector<Vec>& chain, long h, long n,
                      const Vec& w);

// f evaluated with slot `which` replaced by a vector (other indices fixed).
PartialScalar eval_with_vec(const DualElement& f, int which, const Vec& a,
                            std::vector<int> idx);

Scalar scalar_int_pow(const Scalar& s, long e);

} // namespace logtensor::pzdetail
