#include "reqsmith/audit.hpp"

#include <thread>

namespace reqsmith {

namespace {

using Labeled = std::vector<std::pair<std::string, TermPtr>>;

Labeled constraints_only(const AssembledModel& m) {
  Labeled out = m.constraints.items();
  return out;
}

// pᵢ ∧ ¬qᵢ for conditionals, ¬ρᵢ for invariants: the states the requirement
// forbids. Labels use the probe_ prefix so cores can be filtered.
void push_violation_probes(const Encoding& e, Labeled& out) {
  if (e.guard) {
    out.emplace_back("probe_guard", *e.guard);
    out.emplace_back("probe_neg_body", mk_not(e.body));
  } else {
    out.emplace_back("probe_neg_whole", mk_not(e.body));
  }
}

bool is_probe(const std::string& label) { return label.rfind("probe_", 0) == 0; }

const Encoding& encoding_of(const AssembledModel& m, const std::string& req_id) {
  auto it = m.encodings.find(req_id);
  if (it == m.encodings.end())
    throw ModelError(ModelError::Kind::MissingEncoding,
                     "no requirement '" + req_id + "' in the model");
  return it->second;
}

}  // namespace

ConsistencyOutcome audit_consistency(const AssembledModel& m, SessionPool& pool) {
  auto lease = pool.acquire();
  CheckResult r = lease->check_under(lower(m));
  ConsistencyOutcome out;
  if (r.verdict == Verdict::Sat) {
    out.status = ConsistencyOutcome::Status::Yes;
    out.witness = r.model;
  } else if (r.verdict == Verdict::Unsat) {
    out.status = ConsistencyOutcome::Status::No;
    out.core = r.unsat_core;
  }
  return out;
}

AuditOutcome::Vacuous audit_vacuousness(const AssembledModel& m, const std::string& req_id,
                                        SessionPool& pool,
                                        std::optional<Witness>* guard_witness) {
  const Encoding& e = encoding_of(m, req_id);
  if (!e.guard) return AuditOutcome::Vacuous::NotApplicable;

  Labeled q = constraints_only(m);
  q.emplace_back("probe_guard", *e.guard);
  auto lease = pool.acquire();
  CheckResult r = lease->check_under(q);
  if (r.verdict == Verdict::Unsat) return AuditOutcome::Vacuous::Yes;
  if (r.verdict == Verdict::Sat) {
    if (guard_witness) *guard_witness = r.model;
    return AuditOutcome::Vacuous::No;
  }
  return AuditOutcome::Vacuous::Inconclusive;
}

AuditOutcome::Violatable audit_violatability(const AssembledModel& m,
                                             const std::string& req_id, SessionPool& pool,
                                             std::optional<Witness>* witness) {
  const Encoding& e = encoding_of(m, req_id);
  Labeled q = constraints_only(m);
  push_violation_probes(e, q);
  auto lease = pool.acquire();
  CheckResult r = lease->check_under(q);
  if (r.verdict == Verdict::Sat) {
    if (witness) *witness = r.model;
    return AuditOutcome::Violatable::Yes;
  }
  if (r.verdict == Verdict::Unsat) return AuditOutcome::Violatable::No;
  return AuditOutcome::Violatable::Inconclusive;
}

AuditOutcome::Redundant audit_redundancy(const AssembledModel& m, const std::string& req_id,
                                         SessionPool& pool,
                                         std::optional<std::set<std::string>>* core,
                                         std::optional<Witness>* witness) {
  const Encoding& e = encoding_of(m, req_id);
  Labeled q = constraints_only(m);
  for (const auto& [id, other] : m.encodings)
    if (id != req_id) q.emplace_back("req_" + id, whole(other));
  push_violation_probes(e, q);

  auto lease = pool.acquire();
  CheckResult r = lease->check_under(q);
  if (r.verdict == Verdict::Unsat) {
    if (core && r.unsat_core) {
      std::set<std::string> filtered;
      for (const std::string& label : *r.unsat_core)
        if (!is_probe(label)) filtered.insert(label);
      *core = std::move(filtered);
    }
    return AuditOutcome::Redundant::Yes;
  }
  if (r.verdict == Verdict::Sat) {
    if (witness) *witness = r.model;
    return AuditOutcome::Redundant::No;
  }
  return AuditOutcome::Redundant::Inconclusive;
}

std::pair<ConsistencyOutcome, std::vector<AuditOutcome>> audit_all(const AssembledModel& m,
                                                                   SessionPool& pool) {
  ConsistencyOutcome consistency;
  try {
    consistency = audit_consistency(m, pool);
  } catch (const SessionError&) {
    consistency.status = ConsistencyOutcome::Status::Inconclusive;
  }

  std::vector<AuditOutcome> outcomes(m.requirements.size());
  std::vector<std::thread> workers;
  size_t slot = 0;
  for (const auto& [id, _] : m.requirements) {
    workers.emplace_back([&m, &pool, &out = outcomes[slot], id = id] {
      out.req_id = id;
      try {
        out.vacuous = audit_vacuousness(m, id, pool, &out.guard_witness);
      } catch (const SessionError&) {
        out.vacuous = AuditOutcome::Vacuous::Inconclusive;
      }
      try {
        out.violatable = audit_violatability(m, id, pool, &out.violation_witness);
      } catch (const SessionError&) {
        out.violatable = AuditOutcome::Violatable::Inconclusive;
      }
      try {
        out.redundant = audit_redundancy(m, id, pool, &out.redundancy_core,
                                         &out.independence_witness);
      } catch (const SessionError&) {
        out.redundant = AuditOutcome::Redundant::Inconclusive;
      }
    });
    ++slot;
  }
  for (auto& w : workers) w.join();
  // m.requirements iterates sorted by id, so outcomes are already ordered.
  return {std::move(consistency), std::move(outcomes)};
}

}  // namespace reqsmith
