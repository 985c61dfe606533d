#pragma once

#include <string>

#include "logtensor/series.hpp"

namespace logtensor {

// Plain-text series literal.  First nonempty line declares the variables:
//
//   vars: x window -3 4; y expansion 6 log 8
//
// followed by a sum of terms like
//
//   3/2 * x^(1/2) * log(x)^2 - x^(-1) + 5
//
// Coefficients are rationals; exponents are integers or parenthesized
// rationals; log degrees are nonnegative integers.  Errors carry line:col.
Series parse_series(const std::string& text);

// Human-readable rendering (header line plus canonical term order).
std::string series_to_text(const Series& s);

// Canonical JSON: sorted keys, terms in monomial order, rationals as "p/q"
// strings.  Byte-stable for equal inputs; round-trips exactly.
std::string series_to_json_string(const Series& s);
Series series_from_json_string(const std::string& text);

} // namespace logtensor
