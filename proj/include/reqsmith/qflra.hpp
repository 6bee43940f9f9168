// Decision procedure for quantifier-free Boolean + linear real arithmetic:
// lazy DPLL(T) over a Tseitin encoding, with Fourier-Motzkin elimination as
// the theory oracle. Exact rational arithmetic throughout, so verdicts and
// witness models are never subject to rounding.
#pragma once

#include <vector>

#include "reqsmith/term.hpp"

namespace reqsmith::qflra {

struct SolveResult {
  bool sat = false;
  // On sat: one value per schema variable (unconstrained variables default to
  // false / 0). Empty on unsat.
  Assignment model;
};

// Decides the conjunction of the given Bool-sorted assertions.
SolveResult solve(const std::vector<TermPtr>& assertions, const Schema& schema);

// Given an unsatisfiable assertion set, returns the subset of `named`
// (indices into `assertions`) that is still needed for unsatisfiability when
// every index outside `named` is kept as background. Minimal under deletion:
// removing any single returned index makes the rest satisfiable. Indices are
// returned in ascending order.
std::vector<size_t> minimize_core(const std::vector<TermPtr>& assertions,
                                  const Schema& schema,
                                  const std::vector<size_t>& named);

}  // namespace reqsmith::qflra
