// The four audit queries over an assembled model: global consistency,
// per-requirement vacuousness, violatability, and redundancy.
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reqsmith/model.hpp"
#include "reqsmith/session.hpp"

namespace reqsmith {

using Witness = Assignment;

struct ConsistencyOutcome {
  enum class Status { Yes, No, Inconclusive };
  Status status = Status::Inconclusive;
  std::optional<Witness> witness;                 // Yes: a model of M
  std::optional<std::set<std::string>> core;      // No: labels of an unsat subset
};

struct AuditOutcome {
  std::string req_id;

  enum class Vacuous { No, Yes, NotApplicable, Inconclusive };
  Vacuous vacuous = Vacuous::Inconclusive;
  std::optional<Witness> guard_witness;           // No: state where the guard fires

  enum class Violatable { Yes, No, Inconclusive };
  Violatable violatable = Violatable::Inconclusive;
  std::optional<Witness> violation_witness;       // Yes

  enum class Redundant { Yes, No, Inconclusive };
  Redundant redundant = Redundant::Inconclusive;
  std::optional<std::set<std::string>> redundancy_core;  // Yes: subsuming labels
  std::optional<Witness> independence_witness;           // No: state only this req rules out
};

// Is M = C ∧ ⋀ρᵢ satisfiable at all?
ConsistencyOutcome audit_consistency(const AssembledModel& m, SessionPool& pool);

// Conditional requirements only: can the guard fire under C? Checks C ∧ pᵢ
// in isolation from the other requirements.
AuditOutcome::Vacuous audit_vacuousness(const AssembledModel& m, const std::string& req_id,
                                        SessionPool& pool,
                                        std::optional<Witness>* guard_witness = nullptr);

// Can the requirement be violated under C? Conditional: C ∧ pᵢ ∧ ¬qᵢ;
// invariant: C ∧ ¬ρᵢ. SAT hands back the violating state.
AuditOutcome::Violatable audit_violatability(const AssembledModel& m,
                                             const std::string& req_id, SessionPool& pool,
                                             std::optional<Witness>* witness = nullptr);

// Do the remaining requirements already enforce this one? Conditional:
// M∖ᵢ ∧ pᵢ ∧ ¬qᵢ; invariant: M∖ᵢ ∧ ¬ρᵢ. UNSAT means redundant, and the core
// (with the probe assertions stripped) names the subsumers.
AuditOutcome::Redundant audit_redundancy(const AssembledModel& m, const std::string& req_id,
                                         SessionPool& pool,
                                         std::optional<std::set<std::string>>* core = nullptr,
                                         std::optional<Witness>* witness = nullptr);

// Consistency once, then all per-requirement audits, which run concurrently
// under distinct leases. Solver failures degrade to Inconclusive for the
// affected query; the batch always completes. Output sorted by req_id.
std::pair<ConsistencyOutcome, std::vector<AuditOutcome>> audit_all(const AssembledModel& m,
                                                                   SessionPool& pool);

}  // namespace reqsmith
