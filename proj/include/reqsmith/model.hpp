// Requirements, their formal encodings, domain constraints, and the assembled
// model that the audit queries run against.
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "reqsmith/term.hpp"

namespace reqsmith {

enum class ReqKind { Conditional, Invariant };
const char* req_kind_name(ReqKind k);

struct Requirement {
  std::string id;
  std::string text;
  ReqKind kind = ReqKind::Invariant;
};

struct Provenance {
  enum class Kind { Manual, Generated };
  Kind kind = Kind::Manual;
  int sample_index = -1;      // Generated only
  std::string provider_tag;   // Generated only

  static Provenance manual() { return {}; }
  static Provenance generated(int sample_index, std::string provider_tag) {
    return {Kind::Generated, sample_index, std::move(provider_tag)};
  }
};

// A conditional requirement encodes as guard => body; an invariant has no
// guard and encodes as body alone.
struct Encoding {
  std::string req_id;
  std::optional<TermPtr> guard;
  TermPtr body;
  Provenance provenance;
};

// guard => body for conditionals, body for invariants.
TermPtr whole(const Encoding& e);

struct ModelError : std::runtime_error {
  enum class Kind {
    MissingEncoding,
    ExtraEncoding,
    GuardKindMismatch,
    UnknownSymbol,
    Invalid,  // duplicate ids, empty text, bad labels, sort violations, bad JSON
  };
  Kind kind;
  ModelError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Background facts C, each labeled "dom_*".
class DomainConstraints {
 public:
  void add(std::string label, TermPtr t);  // throws ModelError on bad label / sort
  const std::vector<std::pair<std::string, TermPtr>>& items() const { return items_; }
  bool empty() const { return items_.empty(); }

 private:
  std::vector<std::pair<std::string, TermPtr>> items_;
};

// Immutable after assemble(); freely shareable across threads.
struct AssembledModel {
  Schema schema;
  DomainConstraints constraints;
  std::map<std::string, Requirement> requirements;  // keyed and ordered by id
  std::map<std::string, Encoding> encodings;        // exactly one per requirement
};

// Validates coverage (one encoding per requirement), guard/kind agreement,
// and schema closure of every term.
AssembledModel assemble(Schema schema, DomainConstraints constraints,
                        std::vector<Requirement> reqs,
                        std::vector<Encoding> encodings);

// The model as labeled assertions: dom_* constraints (sorted by label), then
// req_<id> |-> whole(encoding) sorted by id. Pure; identical models render
// byte-identically under print_term.
std::vector<std::pair<std::string, TermPtr>> lower(const AssembledModel& m);

// Input file loaders. Each takes the parsed JSON document and throws
// ModelError(Invalid) on shape violations, with element indices in messages.
Schema load_schema_json(const nlohmann::json& j);
std::vector<Requirement> load_requirements_json(const nlohmann::json& j);
DomainConstraints load_constraints_json(const nlohmann::json& j, const Schema& schema);
std::vector<Encoding> load_encodings_json(const nlohmann::json& j, const Schema& schema);

}  // namespace reqsmith
