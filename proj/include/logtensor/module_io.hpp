#pragma once

#include <string>

#include "logtensor/module.hpp"

namespace logtensor {

// Module files are JSON objects:
//
//   {
//     "name": "F0",
//     "central_charge": "1",
//     "window": {"lo": "0", "hi": "6"},
//     "basis": [{"name": "vac", "weight": "0", "label": [0]}, ...],
//     "generators": {"a": {"weight": "1", "label": [0],
//                          "l1": [["1", "vac"]], "conformal": false}, ...},
//     "modes": [{"gen": "a", "n": "-1", "entries": [[row, col, "3/2"], ...]}, ...],
//     "l_ops": {"lm1": [[row, col, "p/q"], ...], "l0": [...], "l1": [...]}
//   }
//
// Matrix entries are sparse triplets; the value slot is a rational string or
// a full scalar object.  Loading validates every structural invariant and
// throws ParseError / ValidationError with the offending JSON path.
GradedModule module_from_json_string(const std::string& text);

std::string module_to_json_string(const GradedModule& w);

} // namespace logtensor
