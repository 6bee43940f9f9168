// Exact rational arithmetic helpers on top of GMP.
#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>

namespace reqsmith {

using Rat = mpq_class;

// Parses an SMT-LIB numeral ("400") or decimal ("400.25") into an exact
// rational. Returns nullopt on anything else (sign handling is the caller's
// job; SMT-LIB literals are unsigned).
std::optional<Rat> rat_from_literal(const std::string& text);

// True iff the denominator is of the form 2^a * 5^b, i.e. the value has an
// exact finite decimal expansion.
bool rat_has_finite_decimal(const Rat& r);

// Exact decimal rendering with at least one fractional digit ("400.0",
// "0.2"). Precondition: rat_has_finite_decimal(r) and r >= 0.
std::string rat_to_decimal(const Rat& r);

// Rendering for reports and witnesses: finite decimal when possible,
// otherwise "p/q".
std::string rat_to_display(const Rat& r);

}  // namespace reqsmith
