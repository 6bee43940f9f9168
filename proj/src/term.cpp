#include "reqsmith/term.hpp"

#include <algorithm>
#include <cctype>

namespace reqsmith {

namespace {

TermPtr make(Term t) { return std::make_shared<const Term>(std::move(t)); }

[[noreturn]] void sort_error(const std::string& msg) {
  throw TermError(TermError::Kind::SortError, msg);
}

void require_bool(const TermPtr& t, const char* where) {
  if (t->sort != Sort::Bool) sort_error(std::string(where) + " expects Bool operands");
}

void require_real(const TermPtr& t, const char* where) {
  if (t->sort != Sort::Real) sort_error(std::string(where) + " expects Real operands");
}

bool is_real_const(const TermPtr& t) { return t->kind == TermKind::RealConst; }

}  // namespace

const char* sort_name(Sort s) { return s == Sort::Bool ? "Bool" : "Real"; }

bool term_eq(const Term& a, const Term& b) {
  if (a.kind != b.kind || a.sort != b.sort) return false;
  switch (a.kind) {
    case TermKind::BoolConst: return a.bval == b.bval;
    case TermKind::RealConst: return a.num == b.num;
    case TermKind::Var: return a.var == b.var;
    case TermKind::Cmp:
      if (a.cmp != b.cmp) return false;
      break;
    case TermKind::Arith:
      if (a.arith != b.arith) return false;
      break;
    default: break;
  }
  if (a.args.size() != b.args.size()) return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!term_eq(*a.args[i], *b.args[i])) return false;
  return true;
}

TermPtr mk_bool(bool v) {
  Term t;
  t.kind = TermKind::BoolConst;
  t.sort = Sort::Bool;
  t.bval = v;
  return make(std::move(t));
}

TermPtr mk_true() { return mk_bool(true); }
TermPtr mk_false() { return mk_bool(false); }

TermPtr mk_real(Rat v) {
  v.canonicalize();
  Term t;
  t.kind = TermKind::RealConst;
  t.sort = Sort::Real;
  t.num = std::move(v);
  return make(std::move(t));
}

TermPtr mk_var(const std::string& name, Sort sort) {
  Term t;
  t.kind = TermKind::Var;
  t.sort = sort;
  t.var = name;
  return make(std::move(t));
}

TermPtr mk_not(TermPtr a) {
  require_bool(a, "not");
  Term t;
  t.kind = TermKind::Not;
  t.sort = Sort::Bool;
  t.args = {std::move(a)};
  return make(std::move(t));
}

static TermPtr mk_nary_bool(TermKind kind, const char* name, std::vector<TermPtr> args) {
  if (args.empty()) sort_error(std::string(name) + " needs at least one operand");
  for (const auto& a : args) require_bool(a, name);
  Term t;
  t.kind = kind;
  t.sort = Sort::Bool;
  t.args = std::move(args);
  return make(std::move(t));
}

TermPtr mk_and(std::vector<TermPtr> args) { return mk_nary_bool(TermKind::And, "and", std::move(args)); }
TermPtr mk_or(std::vector<TermPtr> args) { return mk_nary_bool(TermKind::Or, "or", std::move(args)); }

TermPtr mk_implies(TermPtr a, TermPtr b) {
  require_bool(a, "=>");
  require_bool(b, "=>");
  Term t;
  t.kind = TermKind::Implies;
  t.sort = Sort::Bool;
  t.args = {std::move(a), std::move(b)};
  return make(std::move(t));
}

TermPtr mk_iff(TermPtr a, TermPtr b) {
  require_bool(a, "=");
  require_bool(b, "=");
  Term t;
  t.kind = TermKind::Iff;
  t.sort = Sort::Bool;
  t.args = {std::move(a), std::move(b)};
  return make(std::move(t));
}

TermPtr mk_ite(TermPtr cond, TermPtr then_t, TermPtr else_t) {
  require_bool(cond, "ite");
  if (then_t->sort != else_t->sort) sort_error("ite branches must share a sort");
  Term t;
  t.kind = TermKind::Ite;
  t.sort = then_t->sort;
  t.args = {std::move(cond), std::move(then_t), std::move(else_t)};
  return make(std::move(t));
}

TermPtr mk_cmp(CmpOp op, TermPtr lhs, TermPtr rhs) {
  require_real(lhs, "comparison");
  require_real(rhs, "comparison");
  Term t;
  t.kind = TermKind::Cmp;
  t.sort = Sort::Bool;
  t.cmp = op;
  t.args = {std::move(lhs), std::move(rhs)};
  return make(std::move(t));
}

static TermPtr mk_arith(ArithOp op, const char* name, std::vector<TermPtr> args,
                        size_t min_arity) {
  if (args.size() < min_arity)
    sort_error(std::string(name) + " needs at least " + std::to_string(min_arity) + " operands");
  for (const auto& a : args) require_real(a, name);
  // Constant folding keeps the printer's constant forms (decimals, unary
  // minus, constant division) unambiguous.
  bool all_const = std::all_of(args.begin(), args.end(), is_real_const);
  if (all_const) {
    Rat acc = args[0]->num;
    switch (op) {
      case ArithOp::Add:
        for (size_t i = 1; i < args.size(); ++i) acc += args[i]->num;
        break;
      case ArithOp::Sub:
        if (args.size() == 1) {
          acc = -acc;
        } else {
          for (size_t i = 1; i < args.size(); ++i) acc -= args[i]->num;
        }
        break;
      case ArithOp::Mul:
        for (size_t i = 1; i < args.size(); ++i) acc *= args[i]->num;
        break;
    }
    return mk_real(std::move(acc));
  }
  if (op == ArithOp::Mul) {
    size_t non_const = 0;
    for (const auto& a : args)
      if (!is_real_const(a)) ++non_const;
    if (non_const > 1)
      throw TermError(TermError::Kind::NonLinear,
                      "multiplication of two non-constant terms is not linear");
  }
  Term t;
  t.kind = TermKind::Arith;
  t.sort = Sort::Real;
  t.arith = op;
  t.args = std::move(args);
  return make(std::move(t));
}

TermPtr mk_add(std::vector<TermPtr> args) { return mk_arith(ArithOp::Add, "+", std::move(args), 2); }
TermPtr mk_sub(std::vector<TermPtr> args) { return mk_arith(ArithOp::Sub, "-", std::move(args), 1); }
TermPtr mk_neg(TermPtr t) { return mk_sub({std::move(t)}); }
TermPtr mk_mul(std::vector<TermPtr> args) { return mk_arith(ArithOp::Mul, "*", std::move(args), 2); }

// --------------------------------------------------------------------------
// Printer

namespace {

std::string print_real_const(const Rat& r) {
  if (r < 0) return "(- " + print_real_const(Rat(-r)) + ")";
  if (rat_has_finite_decimal(r)) return rat_to_decimal(r);
  return "(/ " + rat_to_decimal(Rat(r.get_num())) + " " + rat_to_decimal(Rat(r.get_den())) + ")";
}

const char* cmp_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Eq: return "=";
  }
  return "=";
}

const char* arith_symbol(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
  }
  return "+";
}

void print_into(const Term& t, std::string& out) {
  switch (t.kind) {
    case TermKind::BoolConst:
      out += t.bval ? "true" : "false";
      return;
    case TermKind::RealConst:
      out += print_real_const(t.num);
      return;
    case TermKind::Var:
      out += t.var;
      return;
    default:
      break;
  }
  out += '(';
  switch (t.kind) {
    case TermKind::Not: out += "not"; break;
    case TermKind::And: out += "and"; break;
    case TermKind::Or: out += "or"; break;
    case TermKind::Implies: out += "=>"; break;
    case TermKind::Iff: out += "="; break;
    case TermKind::Ite: out += "ite"; break;
    case TermKind::Cmp: out += cmp_symbol(t.cmp); break;
    case TermKind::Arith: out += arith_symbol(t.arith); break;
    default: break;
  }
  for (const auto& a : t.args) {
    out += ' ';
    print_into(*a, out);
  }
  out += ')';
}

}  // namespace

std::string print_term(const Term& t) {
  std::string out;
  print_into(t, out);
  return out;
}

void collect_free_vars(const Term& t, std::set<std::string>& out) {
  if (t.kind == TermKind::Var) {
    out.insert(t.var);
    return;
  }
  for (const auto& a : t.args) collect_free_vars(*a, out);
}

std::set<std::string> free_vars(const Term& t) {
  std::set<std::string> out;
  collect_free_vars(t, out);
  return out;
}

// --------------------------------------------------------------------------
// Schema / Assignment / evaluation

bool is_simple_symbol(const std::string& name) {
  if (name.empty()) return false;
  if (std::isdigit(static_cast<unsigned char>(name[0]))) return false;
  for (char c : name) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) ||
              std::string_view("~!@$%^&*_-+=<>.?/").find(c) != std::string_view::npos;
    if (!ok) return false;
  }
  return true;
}

void Schema::add(VarDecl decl) {
  if (!is_simple_symbol(decl.name))
    throw TermError(TermError::Kind::Syntax,
                    "schema name '" + decl.name + "' is not a simple symbol");
  if (index_.count(decl.name))
    throw TermError(TermError::Kind::Syntax, "duplicate schema name '" + decl.name + "'");
  index_[decl.name] = vars_.size();
  vars_.push_back(std::move(decl));
}

const VarDecl* Schema::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &vars_[it->second];
}

std::string value_to_display(const Value& v) {
  if (v.sort == Sort::Bool) return v.b ? "true" : "false";
  return rat_to_display(v.r);
}

void Assignment::validate_against(const Schema& schema) const {
  for (const auto& [name, value] : values) {
    const VarDecl* decl = schema.find(name);
    if (!decl)
      throw TermError(TermError::Kind::UnknownSymbol,
                      "assignment binds '" + name + "' which is not in the schema");
    if (decl->sort != value.sort)
      throw TermError(TermError::Kind::SortError,
                      "assignment value for '" + name + "' has sort " +
                          sort_name(value.sort) + ", schema says " + sort_name(decl->sort));
  }
}

namespace {

bool eval_bool(const Term& t, const Assignment& a);
Rat eval_real(const Term& t, const Assignment& a);

bool eval_bool(const Term& t, const Assignment& a) {
  Value v = evaluate(t, a);
  if (v.sort != Sort::Bool) sort_error("expected Bool");
  return v.b;
}

Rat eval_real(const Term& t, const Assignment& a) {
  Value v = evaluate(t, a);
  if (v.sort != Sort::Real) sort_error("expected Real");
  return v.r;
}

}  // namespace

Value evaluate(const Term& t, const Assignment& a) {
  switch (t.kind) {
    case TermKind::BoolConst:
      return Value::of_bool(t.bval);
    case TermKind::RealConst:
      return Value::of_real(t.num);
    case TermKind::Var: {
      auto it = a.values.find(t.var);
      if (it == a.values.end())
        throw TermError(TermError::Kind::UnboundVariable, "unbound variable '" + t.var + "'");
      if (it->second.sort != t.sort) sort_error("assignment sort mismatch for '" + t.var + "'");
      return it->second;
    }
    case TermKind::Not:
      return Value::of_bool(!eval_bool(*t.args[0], a));
    case TermKind::And: {
      bool r = true;
      for (const auto& x : t.args) r = eval_bool(*x, a) && r;
      return Value::of_bool(r);
    }
    case TermKind::Or: {
      bool r = false;
      for (const auto& x : t.args) r = eval_bool(*x, a) || r;
      return Value::of_bool(r);
    }
    case TermKind::Implies:
      return Value::of_bool(!eval_bool(*t.args[0], a) || eval_bool(*t.args[1], a));
    case TermKind::Iff:
      return Value::of_bool(eval_bool(*t.args[0], a) == eval_bool(*t.args[1], a));
    case TermKind::Ite:
      return eval_bool(*t.args[0], a) ? evaluate(*t.args[1], a) : evaluate(*t.args[2], a);
    case TermKind::Cmp: {
      Rat l = eval_real(*t.args[0], a);
      Rat r = eval_real(*t.args[1], a);
      switch (t.cmp) {
        case CmpOp::Lt: return Value::of_bool(l < r);
        case CmpOp::Le: return Value::of_bool(l <= r);
        case CmpOp::Gt: return Value::of_bool(l > r);
        case CmpOp::Ge: return Value::of_bool(l >= r);
        case CmpOp::Eq: return Value::of_bool(l == r);
      }
      break;
    }
    case TermKind::Arith: {
      Rat acc = eval_real(*t.args[0], a);
      switch (t.arith) {
        case ArithOp::Add:
          for (size_t i = 1; i < t.args.size(); ++i) acc += eval_real(*t.args[i], a);
          break;
        case ArithOp::Sub:
          if (t.args.size() == 1) {
            acc = -acc;
          } else {
            for (size_t i = 1; i < t.args.size(); ++i) acc -= eval_real(*t.args[i], a);
          }
          break;
        case ArithOp::Mul:
          for (size_t i = 1; i < t.args.size(); ++i) acc *= eval_real(*t.args[i], a);
          break;
      }
      return Value::of_real(std::move(acc));
    }
  }
  sort_error("unreachable term kind");
}

}  // namespace reqsmith
