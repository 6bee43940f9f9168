// Quantifier-free Boolean + linear real arithmetic terms: the common currency
// for encodings, domain constraints, scenarios, and witnesses.
#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "reqsmith/rational.hpp"

namespace reqsmith {

enum class Sort { Bool, Real };

const char* sort_name(Sort s);

struct TermError : std::runtime_error {
  enum class Kind { Syntax, UnknownSymbol, SortError, NonLinear, UnboundVariable };
  Kind error_kind;
  TermError(Kind k, const std::string& msg) : std::runtime_error(msg), error_kind(k) {}
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

enum class TermKind { BoolConst, RealConst, Var, Not, And, Or, Implies, Iff, Ite, Cmp, Arith };
enum class CmpOp { Lt, Le, Gt, Ge, Eq };
enum class ArithOp { Add, Sub, Mul };  // Sub with one operand is unary negation

struct Term {
  TermKind kind;
  Sort sort = Sort::Bool;
  bool bval = false;           // BoolConst
  Rat num{0};                  // RealConst
  std::string var;             // Var
  CmpOp cmp = CmpOp::Eq;       // Cmp
  ArithOp arith = ArithOp::Add;  // Arith
  std::vector<TermPtr> args;
};

bool term_eq(const Term& a, const Term& b);
inline bool term_eq(const TermPtr& a, const TermPtr& b) { return term_eq(*a, *b); }

// Factory functions. All construction goes through these; they enforce
// well-sortedness and linearity, and normalize the constant sugar forms
// (unary minus of a constant, constant division) so the canonical printer
// round-trips every constructible term.
TermPtr mk_bool(bool v);
TermPtr mk_true();
TermPtr mk_false();
TermPtr mk_real(Rat v);
TermPtr mk_var(const std::string& name, Sort sort);
TermPtr mk_not(TermPtr t);
TermPtr mk_and(std::vector<TermPtr> args);
TermPtr mk_or(std::vector<TermPtr> args);
TermPtr mk_implies(TermPtr a, TermPtr b);
TermPtr mk_iff(TermPtr a, TermPtr b);
TermPtr mk_ite(TermPtr cond, TermPtr then_t, TermPtr else_t);
TermPtr mk_cmp(CmpOp op, TermPtr lhs, TermPtr rhs);
TermPtr mk_add(std::vector<TermPtr> args);
TermPtr mk_sub(std::vector<TermPtr> args);
TermPtr mk_neg(TermPtr t);
TermPtr mk_mul(std::vector<TermPtr> args);

// Canonical single-line SMT-LIB2 rendering. parse_term(print_term(t)) is
// structurally equal to t for every factory-constructed term.
std::string print_term(const Term& t);
inline std::string print_term(const TermPtr& t) { return print_term(*t); }

std::set<std::string> free_vars(const Term& t);
inline std::set<std::string> free_vars(const TermPtr& t) { return free_vars(*t); }

// ---------------------------------------------------------------------------

struct VarDecl {
  std::string name;
  Sort sort = Sort::Bool;
  std::string description;
};

// True iff `name` is an SMT-LIB2 simple symbol (symbol characters only, not
// starting with a digit, non-empty).
bool is_simple_symbol(const std::string& name);

class Schema {
 public:
  Schema() = default;
  void add(VarDecl decl);  // throws TermError on duplicates / bad names
  const VarDecl* find(const std::string& name) const;
  const std::vector<VarDecl>& vars() const { return vars_; }
  size_t size() const { return vars_.size(); }

 private:
  std::vector<VarDecl> vars_;
  std::map<std::string, size_t> index_;
};

struct Value {
  Sort sort = Sort::Bool;
  bool b = false;
  Rat r{0};

  static Value of_bool(bool v) { return Value{Sort::Bool, v, Rat{0}}; }
  static Value of_real(Rat v) { return Value{Sort::Real, false, std::move(v)}; }
  bool operator==(const Value& o) const {
    return sort == o.sort && (sort == Sort::Bool ? b == o.b : r == o.r);
  }
};

std::string value_to_display(const Value& v);

struct Assignment {
  std::map<std::string, Value> values;

  bool has(const std::string& name) const { return values.count(name) != 0; }
  void set_bool(const std::string& name, bool v) { values[name] = Value::of_bool(v); }
  void set_real(const std::string& name, Rat v) { values[name] = Value::of_real(std::move(v)); }

  // Checks every bound name against the schema; throws TermError on unknown
  // names or sort mismatches.
  void validate_against(const Schema& schema) const;
};

// Standard semantics over exact rationals; throws TermError(UnboundVariable)
// when a free variable of t is missing from a.
Value evaluate(const Term& t, const Assignment& a);
inline Value evaluate(const TermPtr& t, const Assignment& a) { return evaluate(*t, a); }

inline bool evaluate_bool(const TermPtr& t, const Assignment& a) {
  Value v = evaluate(*t, a);
  if (v.sort != Sort::Bool)
    throw TermError(TermError::Kind::SortError, "expected Bool-sorted term");
  return v.b;
}

}  // namespace reqsmith
