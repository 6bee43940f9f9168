#include "reqsmith/model.hpp"

#include <algorithm>

#include "reqsmith/parser.hpp"

namespace reqsmith {

const char* req_kind_name(ReqKind k) {
  return k == ReqKind::Conditional ? "conditional" : "invariant";
}

TermPtr whole(const Encoding& e) {
  if (e.guard) return mk_implies(*e.guard, e.body);
  return e.body;
}

void DomainConstraints::add(std::string label, TermPtr t) {
  if (label.rfind("dom_", 0) != 0)
    throw ModelError(ModelError::Kind::Invalid,
                     "domain constraint label '" + label + "' must start with 'dom_'");
  if (!is_simple_symbol(label))
    throw ModelError(ModelError::Kind::Invalid,
                     "domain constraint label '" + label + "' is not a valid symbol");
  for (const auto& [existing, _] : items_)
    if (existing == label)
      throw ModelError(ModelError::Kind::Invalid,
                       "duplicate domain constraint label '" + label + "'");
  if (t->sort != Sort::Bool)
    throw ModelError(ModelError::Kind::Invalid,
                     "domain constraint '" + label + "' is not Bool-sorted");
  items_.emplace_back(std::move(label), std::move(t));
}

namespace {

void require_closed(const TermPtr& t, const Schema& schema, const std::string& where) {
  for (const std::string& v : free_vars(t))
    if (!schema.find(v))
      throw ModelError(ModelError::Kind::UnknownSymbol,
                       where + " references unknown symbol '" + v + "'");
}

}  // namespace

AssembledModel assemble(Schema schema, DomainConstraints constraints,
                        std::vector<Requirement> reqs,
                        std::vector<Encoding> encodings) {
  AssembledModel m;
  m.schema = std::move(schema);

  for (Requirement& r : reqs) {
    if (r.id.empty() || !is_simple_symbol(r.id))
      throw ModelError(ModelError::Kind::Invalid,
                       "requirement id '" + r.id + "' is not a valid symbol");
    if (r.text.empty())
      throw ModelError(ModelError::Kind::Invalid,
                       "requirement '" + r.id + "' has empty text");
    std::string id = r.id;
    if (!m.requirements.emplace(id, std::move(r)).second)
      throw ModelError(ModelError::Kind::Invalid, "duplicate requirement id '" + id + "'");
  }

  for (const auto& [label, t] : constraints.items())
    require_closed(t, m.schema, "domain constraint '" + label + "'");
  m.constraints = std::move(constraints);

  for (Encoding& e : encodings) {
    auto req = m.requirements.find(e.req_id);
    if (req == m.requirements.end())
      throw ModelError(ModelError::Kind::ExtraEncoding,
                       "encoding for unknown requirement '" + e.req_id + "'");
    bool conditional = req->second.kind == ReqKind::Conditional;
    if (conditional != e.guard.has_value())
      throw ModelError(ModelError::Kind::GuardKindMismatch,
                       "requirement '" + e.req_id + "' is " +
                           req_kind_name(req->second.kind) +
                           (conditional ? " but its encoding has no guard"
                                        : " but its encoding has a guard"));
    if (e.guard) {
      if ((*e.guard)->sort != Sort::Bool)
        throw ModelError(ModelError::Kind::Invalid,
                         "guard of '" + e.req_id + "' is not Bool-sorted");
      require_closed(*e.guard, m.schema, "guard of '" + e.req_id + "'");
    }
    if (e.body->sort != Sort::Bool)
      throw ModelError(ModelError::Kind::Invalid,
                       "body of '" + e.req_id + "' is not Bool-sorted");
    require_closed(e.body, m.schema, "body of '" + e.req_id + "'");
    std::string id = e.req_id;
    if (!m.encodings.emplace(id, std::move(e)).second)
      throw ModelError(ModelError::Kind::ExtraEncoding,
                       "requirement '" + id + "' has more than one encoding");
  }

  for (const auto& [id, _] : m.requirements)
    if (!m.encodings.count(id))
      throw ModelError(ModelError::Kind::MissingEncoding,
                       "requirement '" + id + "' has no encoding");
  return m;
}

std::vector<std::pair<std::string, TermPtr>> lower(const AssembledModel& m) {
  std::vector<std::pair<std::string, TermPtr>> out = m.constraints.items();
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [id, e] : m.encodings) out.emplace_back("req_" + id, whole(e));
  return out;
}

// ---------------------------------------------------------------------------
// JSON loaders

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what, size_t index) {
  throw ModelError(ModelError::Kind::Invalid,
                   what + " (element " + std::to_string(index) + ")");
}

const json& field(const json& obj, const char* key, size_t index) {
  auto it = obj.find(key);
  if (it == obj.end()) bad(std::string("missing field '") + key + "'", index);
  return *it;
}

std::string str_field(const json& obj, const char* key, size_t index) {
  const json& v = field(obj, key, index);
  if (!v.is_string()) bad(std::string("field '") + key + "' must be a string", index);
  return v.get<std::string>();
}

void require_array(const json& j, const char* what) {
  if (!j.is_array())
    throw ModelError(ModelError::Kind::Invalid,
                     std::string(what) + " file must be a JSON array");
}

TermPtr parse_smt(const std::string& text, const Schema& schema,
                  const std::string& where) {
  try {
    return parse_term(text, schema);
  } catch (const TermError& e) {
    if (e.error_kind == TermError::Kind::UnknownSymbol)
      throw ModelError(ModelError::Kind::UnknownSymbol, where + ": " + e.what());
    throw ModelError(ModelError::Kind::Invalid, where + ": " + e.what());
  }
}

}  // namespace

Schema load_schema_json(const json& j) {
  require_array(j, "schema");
  Schema schema;
  for (size_t i = 0; i < j.size(); ++i) {
    const json& entry = j[i];
    if (!entry.is_object()) bad("schema entry must be an object", i);
    VarDecl decl;
    decl.name = str_field(entry, "name", i);
    std::string sort = str_field(entry, "sort", i);
    if (sort == "Bool")
      decl.sort = Sort::Bool;
    else if (sort == "Real")
      decl.sort = Sort::Real;
    else
      bad("sort must be \"Bool\" or \"Real\", got \"" + sort + "\"", i);
    if (entry.contains("description")) decl.description = str_field(entry, "description", i);
    try {
      schema.add(std::move(decl));
    } catch (const TermError& e) {
      bad(e.what(), i);
    }
  }
  return schema;
}

std::vector<Requirement> load_requirements_json(const json& j) {
  require_array(j, "requirements");
  std::vector<Requirement> reqs;
  for (size_t i = 0; i < j.size(); ++i) {
    const json& entry = j[i];
    if (!entry.is_object()) bad("requirement entry must be an object", i);
    Requirement r;
    r.id = str_field(entry, "id", i);
    r.text = str_field(entry, "text", i);
    std::string kind = str_field(entry, "kind", i);
    if (kind == "conditional")
      r.kind = ReqKind::Conditional;
    else if (kind == "invariant")
      r.kind = ReqKind::Invariant;
    else
      bad("kind must be \"conditional\" or \"invariant\", got \"" + kind + "\"", i);
    reqs.push_back(std::move(r));
  }
  return reqs;
}

DomainConstraints load_constraints_json(const json& j, const Schema& schema) {
  require_array(j, "constraints");
  DomainConstraints c;
  for (size_t i = 0; i < j.size(); ++i) {
    const json& entry = j[i];
    if (!entry.is_object()) bad("constraint entry must be an object", i);
    std::string label = str_field(entry, "label", i);
    std::string smt = str_field(entry, "smt", i);
    c.add(label, parse_smt(smt, schema, "constraint '" + label + "'"));
  }
  return c;
}

std::vector<Encoding> load_encodings_json(const json& j, const Schema& schema) {
  require_array(j, "encodings");
  std::vector<Encoding> encodings;
  for (size_t i = 0; i < j.size(); ++i) {
    const json& entry = j[i];
    if (!entry.is_object()) bad("encoding entry must be an object", i);
    Encoding e;
    e.req_id = str_field(entry, "req_id", i);
    const json& guard = field(entry, "guard", i);
    if (guard.is_string())
      e.guard = parse_smt(guard.get<std::string>(), schema, "guard of '" + e.req_id + "'");
    else if (!guard.is_null())
      bad("field 'guard' must be a string or null", i);
    e.body = parse_smt(str_field(entry, "body", i), schema, "body of '" + e.req_id + "'");
    if (e.guard && (*e.guard)->sort != Sort::Bool)
      bad("guard of '" + e.req_id + "' must be Bool-sorted", i);
    if (e.body->sort != Sort::Bool) bad("body of '" + e.req_id + "' must be Bool-sorted", i);
    e.provenance = Provenance::manual();
    encodings.push_back(std::move(e));
  }
  return encodings;
}

}  // namespace reqsmith
