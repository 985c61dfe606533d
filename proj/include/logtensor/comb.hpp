#pragma once

#include <utility>
#include <vector>

#include "logtensor/rational.hpp"

namespace logtensor {

// Exact brute-force evaluators for the ordered-product / composition-sum
// identity and for the tuple-sum problem it refines.  These are the
// independent oracles the series layer is tested against, so they must stay
// dumb: plain enumeration, no shared code with the series engine.

// (j!/k!) * sum over strictly increasing tuples 0 < t_1 < ... < t_{k-j} < k
// of the product t_1 * ... * t_{k-j}.  Empty tuple (k == j) contributes 1.
Rational lhs_ordered(long k, long j);

// Sum over compositions k = i_1 + ... + i_j into positive parts of
// 1/(i_1 * ... * i_j).  No compositions (j == 0, k > 0) gives 0; the empty
// composition of 0 gives 1.
Rational rhs_compositions(long k, long j);

struct LubellResult {
    Rational s;  // sum over ordered j-tuples of positive integers with total <= N
    Rational t;  // sum over ordered j-tuples of distinct positive integers <= N
    // per_k[k-1] = (sum over tuples with total exactly k,
    //               sum over distinct tuples with maximum exactly k)
    std::vector<std::pair<Rational, Rational>> per_k;
};

// Full enumeration of both tuple families with the per-maximum / per-total
// refinement.  Desk scale only (N <= 12, j <= 4).
LubellResult lubell_sums(long N, long j);

} // namespace logtensor
