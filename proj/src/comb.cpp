#include "logtensor/comb.hpp"

#include <functional>

#include "logtensor/errors.hpp"

namespace logtensor {

Rational lhs_ordered(long k, long j) {
    if (k < 0 || j < 0) throw ArgOrder("lhs_ordered: negative argument");
    if (j > k) throw ArgOrder("lhs_ordered: j > k");
    long len = k - j;
    // Strictly increasing tuples live inside {1, ..., k-1}.
    Rational total(0);
    std::vector<long> tuple(len);
    std::function<void(long, long, Rational)> rec = [&](long pos, long min_val, Rational prod) {
        if (pos == len) {
            total += prod;
            return;
        }
        for (long t = min_val; t <= k - 1 - (len - 1 - pos); ++t)
            rec(pos + 1, t + 1, prod * Rational(t));
    };
    rec(0, 1, Rational(1));
    return factorial(j) / factorial(k) * total;
}

Rational rhs_compositions(long k, long j) {
    if (k < 0 || j < 0) throw ArgOrder("rhs_compositions: negative argument");
    if (j > k) throw ArgOrder("rhs_compositions: j > k");
    Rational total(0);
    std::function<void(long, long, Rational)> rec = [&](long parts_left, long rest, Rational prod) {
        if (parts_left == 0) {
            if (rest == 0) total += prod;
            return;
        }
        // Each remaining part is >= 1 and must leave room for the others.
        for (long i = 1; i + (parts_left - 1) <= rest; ++i)
            rec(parts_left - 1, rest - i, prod / Rational(i));
    };
    rec(j, k, Rational(1));
    return total;
}

LubellResult lubell_sums(long N, long j) {
    if (N < 1 || j < 1) throw ArgOrder("lubell_sums: N, j must be positive");
    if (N > 12 || j > 4) throw ScaleExceeded("lubell_sums: enumeration beyond desk scale");

    LubellResult res;
    res.per_k.assign(N, {Rational(0), Rational(0)});

    // Ordered tuples (w_1, ..., w_j) of positive integers, each <= N (any
    // tuple with total <= N automatically has each entry <= N).
    std::vector<long> w(j, 1);
    while (true) {
        long total = 0;
        bool distinct = true;
        Rational prod(1);
        long maxv = 0;
        for (long a = 0; a < j; ++a) {
            total += w[a];
            prod *= Rational(w[a]);
            if (w[a] > maxv) maxv = w[a];
            for (long b = 0; b < a; ++b)
                if (w[a] == w[b]) distinct = false;
        }
        Rational inv = Rational(1) / prod;
        if (total <= N) {
            res.s += inv;
            res.per_k[total - 1].first += inv;
        }
        if (distinct) {
            res.t += inv;
            res.per_k[maxv - 1].second += inv;
        }
        // Odometer increment over {1..N}^j.
        long pos = j - 1;
        while (pos >= 0 && w[pos] == N) { w[pos] = 1; --pos; }
        if (pos < 0) break;
        ++w[pos];
    }
    return res;
}

} // namespace logtensor
