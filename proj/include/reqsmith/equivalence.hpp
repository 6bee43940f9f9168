// Semantic comparison of encodings: bidirectional agreement, clustering of
// sampled encodings into equivalence classes, and mutation detection.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reqsmith/audit.hpp"
#include "reqsmith/model.hpp"
#include "reqsmith/session.hpp"

namespace reqsmith {

// a and b agree when neither permits a state the other forbids, relative to
// the domain constraints: both C ∧ ρᵃ ∧ ¬ρᵇ and C ∧ ρᵇ ∧ ¬ρᵃ unsatisfiable.
struct AgreementVerdict {
  enum class Status { Agree, Disagree };
  Status status = Status::Agree;
  std::optional<Witness> a_not_b;  // state allowed by a, ruled out by b
  std::optional<Witness> b_not_a;
  // Either direction came back UNKNOWN. Never reported as Agree.
  bool inconclusive = false;
};

AgreementVerdict check_agreement(const DomainConstraints& c, const Encoding& a,
                                 const Encoding& b, SessionPool& pool);

struct EncodingClusters {
  struct Class {
    size_t representative;        // sample index
    std::vector<size_t> members;  // includes the representative
  };
  struct Disagreement {
    size_t class_a;
    size_t class_b;
    Witness witness;
  };
  std::string req_id;
  std::vector<Class> classes;
  std::vector<Disagreement> witnesses;  // one per inter-class representative pair
  bool inconclusive = false;
};

// Greedy clustering: each sample joins the first class whose representative
// it agrees with, else founds a new one. A post-pass re-verifies members
// against their representatives and falls back to full pairwise closure if
// that ever disagrees.
EncodingClusters cluster_samples(const DomainConstraints& c,
                                 const std::vector<Encoding>& samples, SessionPool& pool);

struct MutationVerdict {
  enum class Via { GlobalInconsistency, Distinguishable, Undetected };
  enum class Direction { MutantPermits, OriginalPermits };
  std::string req_id;
  bool detected = false;
  Via via = Via::Undetected;
  std::optional<Direction> direction;  // Distinguishable only
  std::optional<Witness> witness;      // Distinguishable only
  bool inconclusive = false;           // solver UNKNOWN on some leg, nothing fired
  std::string category;
};

// A mutant is detected when swapping it into the model makes M globally
// inconsistent, or when it is semantically distinguishable from the original
// in either direction under C.
MutationVerdict detect_mutation(const AssembledModel& m, const Encoding& mutant,
                                SessionPool& pool);

// Mutation corpus entries: a mutated rewrite of one requirement.
struct MutationSpec {
  std::string req_id;
  std::string category;  // false_alarm | mode_transition | value_mismatch | limit_violation
  std::string mutated_text;
  Encoding encoding;
};

std::vector<MutationSpec> load_mutations_json(const nlohmann::json& j, const Schema& schema);

}  // namespace reqsmith
