#pragma once

#include <stdexcept>
#include <string>

namespace logtensor {

// Base class for every domain error thrown by the library.  Checks that are
// *expected* to fail (mutation tests, random functionals, ...) never throw;
// they return structured results.  Exceptions mean the caller asked for
// something the data cannot support.
struct CalcError : std::runtime_error {
    explicit CalcError(const std::string& what) : std::runtime_error(what) {}
};

// Two series with contradictory truncation policies on a shared variable.
struct IncompatiblePolicies : CalcError { using CalcError::CalcError; };

// Arithmetic tried to combine the exact layer with the complex-double layer
// (or to multiply two module-vector coefficients).  Promotion is explicit.
struct MixedScalarLayers : CalcError { using CalcError::CalcError; };

// A substitution or product would need more expansion capacity than the
// variable's policy provides.  Widening is never silent.
struct PolicyOverflow : CalcError { using CalcError::CalcError; };

// A requested exponent window is empty or inverted.
struct WindowEmpty : CalcError { using CalcError::CalcError; };

// Residue extraction on a series that still carries log-degree in the
// residue variable.
struct LogDegreePresent : CalcError { using CalcError::CalcError; };

// An operator that must be nilpotent on a finite window is not.
struct NotNilpotent : CalcError { using CalcError::CalcError; };

// The semisimple/nilpotent split failed to commute with a stored mode.
struct CommutationFailure : CalcError { using CalcError::CalcError; };

// An argument had to be homogeneous (single generalized weight) but is not.
struct NotHomogeneous : CalcError { using CalcError::CalcError; };

// Coefficient recovery hit log slices beyond the declared cap.
struct SingularRecovery : CalcError { using CalcError::CalcError; };

// Jordan slot data of two modules cannot be paired.
struct SlotMismatch : CalcError { using CalcError::CalcError; };

// Integer arguments out of order (e.g. j > k where 0 <= j <= k is required).
struct ArgOrder : CalcError { using CalcError::CalcError; };

// Enumeration size beyond the supported desk scale.
struct ScaleExceeded : CalcError { using CalcError::CalcError; };

// Composition evaluated outside its region of validity (|z1|>|z2|>0 etc).
struct RegionViolation : CalcError { using CalcError::CalcError; };

// A logarithm (or other branch-dependent function) of zero was requested.
struct ZeroArgument : CalcError { using CalcError::CalcError; };

// The derived safe comparison window for an identity check is empty; the
// caller must enlarge the module truncation.  Never silently passes.
struct WindowTooSmall : CalcError { using CalcError::CalcError; };

// Local-module closure exceeded its dimension budget.
struct ClosureOverflow : CalcError { using CalcError::CalcError; };

// Text input (series literal, scenario file, JSON payload) is malformed.
// Message carries a location ("line 12: ...").
struct ParseError : CalcError { using CalcError::CalcError; };

// Structured data (module/intertwiner JSON) violates a structural invariant.
// Message carries the offending item's path.
struct ValidationError : CalcError { using CalcError::CalcError; };

} // namespace logtensor
