#pragma once

// Shared JSON encoders/decoders for the core value types.  Internal header:
// keeps nlohmann out of the public interface.

#include <json.hpp>

#include "logtensor/errors.hpp"
#include "logtensor/series.hpp"

namespace logtensor::jsonu {

using nlohmann::json;

json rational_to_json(const Rational& r);
Rational rational_from_json(const json& j);

json scalar_to_json(const Scalar& s);
Scalar scalar_from_json(const json& j);

json coef_to_json(const Coef& c);
Coef coef_from_json(const json& j);

json monomial_to_json(const Monomial& m);
Monomial monomial_from_json(const json& j);

json policy_to_json(const Policy& p);
Policy policy_from_json(const json& j);

json series_to_json(const Series& s);
Series series_from_json(const json& j);

// Parse with a uniform ValidationError on malformed input.
json parse_checked(const std::string& text, const std::string& what);

} // namespace logtensor::jsonu
