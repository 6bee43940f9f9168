// SMT-LIB2 term parsing against a schema.
#pragma once

#include <string_view>

#include "reqsmith/sexpr.hpp"
#include "reqsmith/term.hpp"

namespace reqsmith {

// Parses a single s-expression into a well-sorted term. All free symbols must
// be declared in the schema. Throws TermError:
//   Syntax         malformed s-expression / wrong arity (with byte offset)
//   UnknownSymbol  symbol not in the schema
//   SortError      ill-sorted application (e.g. Bool inside a comparison)
//   NonLinear      variable * variable, or division by a variable
TermPtr parse_term(std::string_view input, const Schema& schema);

// Same, over an already-read s-expression (used by the solver frontend and
// by define-fun extraction in the pipeline).
TermPtr parse_term_sexpr(const Sexpr& e, const Schema& schema);

// Variant with pre-bound symbols (zero-arity define-fun macros). Bindings
// shadow the schema, exactly like let-introduced names.
TermPtr parse_term_sexpr(const Sexpr& e, const Schema& schema,
                         const std::map<std::string, TermPtr>& defs);

}  // namespace reqsmith
