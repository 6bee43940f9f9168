#include "reqsmith/parser.hpp"

#include <cctype>
#include <functional>

namespace reqsmith {

namespace {

[[noreturn]] void syntax(const std::string& msg, size_t offset) {
  throw TermError(TermError::Kind::Syntax, msg + " at byte " + std::to_string(offset));
}

bool looks_numeric(const std::string& s) {
  return !s.empty() && std::isdigit(static_cast<unsigned char>(s[0]));
}

using Env = std::map<std::string, TermPtr>;

TermPtr convert(const Sexpr& e, const Schema& schema, const Env& env);

std::vector<TermPtr> convert_args(const Sexpr& e, const Schema& schema, const Env& env,
                                  size_t from = 1) {
  std::vector<TermPtr> out;
  for (size_t i = from; i < e.items.size(); ++i)
    out.push_back(convert(e.items[i], schema, env));
  return out;
}

void check_arity(const Sexpr& e, const char* op, size_t exact) {
  if (e.items.size() != exact + 1)
    syntax(std::string("'") + op + "' expects " + std::to_string(exact) + " operands", e.offset);
}

TermPtr convert_eq(std::vector<TermPtr> args, size_t offset) {
  if (args[0]->sort != args[1]->sort)
    throw TermError(TermError::Kind::SortError,
                    "'=' operands have different sorts at byte " + std::to_string(offset));
  if (args[0]->sort == Sort::Bool) return mk_iff(args[0], args[1]);
  return mk_cmp(CmpOp::Eq, args[0], args[1]);
}

TermPtr convert_div(const Sexpr& e, const Schema& schema, const Env& env) {
  check_arity(e, "/", 2);
  TermPtr lhs = convert(e.items[1], schema, env);
  TermPtr rhs = convert(e.items[2], schema, env);
  if (rhs->kind != TermKind::RealConst)
    throw TermError(TermError::Kind::NonLinear,
                    "division by a non-constant at byte " + std::to_string(e.offset));
  if (rhs->num == 0) syntax("division by zero constant", e.offset);
  Rat inv = Rat(1) / rhs->num;
  if (lhs->kind == TermKind::RealConst) return mk_real(lhs->num * inv);
  return mk_mul({mk_real(inv), lhs});
}

TermPtr convert(const Sexpr& e, const Schema& schema, const Env& env) {
  if (e.kind == Sexpr::Kind::String) syntax("unexpected string literal", e.offset);
  if (e.kind == Sexpr::Kind::Atom) {
    const std::string& s = e.atom;
    if (s == "true") return mk_true();
    if (s == "false") return mk_false();
    if (looks_numeric(s)) {
      auto r = rat_from_literal(s);
      if (!r) syntax("malformed numeric literal '" + s + "'", e.offset);
      return mk_real(*r);
    }
    if (auto it = env.find(s); it != env.end()) return it->second;
    const VarDecl* decl = schema.find(s);
    if (!decl)
      throw TermError(TermError::Kind::UnknownSymbol,
                      "unknown symbol '" + s + "' at byte " + std::to_string(e.offset));
    return mk_var(decl->name, decl->sort);
  }

  if (e.items.empty()) syntax("empty application", e.offset);
  if (e.items[0].kind != Sexpr::Kind::Atom) syntax("expected operator symbol", e.items[0].offset);
  const std::string& op = e.items[0].atom;

  try {
    if (op == "let") {
      // Inlined at ingestion; the AST has no let nodes.
      if (e.items.size() != 3 || !e.items[1].is_list())
        syntax("'let' expects a binding list and a body", e.offset);
      Env inner = env;
      for (const Sexpr& binding : e.items[1].items) {
        if (!binding.is_list() || binding.items.size() != 2 ||
            binding.items[0].kind != Sexpr::Kind::Atom)
          syntax("malformed let binding", binding.offset);
        // Bindings are simultaneous: each body is read in the outer scope.
        inner[binding.items[0].atom] = convert(binding.items[1], schema, env);
      }
      return convert(e.items[2], schema, inner);
    }
    if (op == "not") {
      check_arity(e, "not", 1);
      return mk_not(convert(e.items[1], schema, env));
    }
    if (op == "and") {
      auto args = convert_args(e, schema, env);
      if (args.empty()) syntax("'and' needs at least one operand", e.offset);
      return mk_and(std::move(args));
    }
    if (op == "or") {
      auto args = convert_args(e, schema, env);
      if (args.empty()) syntax("'or' needs at least one operand", e.offset);
      return mk_or(std::move(args));
    }
    if (op == "=>") {
      auto args = convert_args(e, schema, env);
      if (args.size() < 2) syntax("'=>' needs at least two operands", e.offset);
      TermPtr acc = args.back();
      for (size_t i = args.size() - 1; i-- > 0;) acc = mk_implies(args[i], acc);
      return acc;
    }
    if (op == "ite") {
      check_arity(e, "ite", 3);
      return mk_ite(convert(e.items[1], schema, env), convert(e.items[2], schema, env),
                    convert(e.items[3], schema, env));
    }
    if (op == "=") {
      check_arity(e, "=", 2);
      return convert_eq(convert_args(e, schema, env), e.offset);
    }
    if (op == "distinct") {
      check_arity(e, "distinct", 2);
      return mk_not(convert_eq(convert_args(e, schema, env), e.offset));
    }
    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
      check_arity(e, op.c_str(), 2);
      CmpOp c = op == "<" ? CmpOp::Lt : op == "<=" ? CmpOp::Le : op == ">" ? CmpOp::Gt : CmpOp::Ge;
      auto args = convert_args(e, schema, env);
      return mk_cmp(c, args[0], args[1]);
    }
    if (op == "+") {
      auto args = convert_args(e, schema, env);
      if (args.size() < 2) syntax("'+' needs at least two operands", e.offset);
      return mk_add(std::move(args));
    }
    if (op == "-") {
      auto args = convert_args(e, schema, env);
      if (args.empty()) syntax("'-' needs at least one operand", e.offset);
      return mk_sub(std::move(args));
    }
    if (op == "*") {
      auto args = convert_args(e, schema, env);
      if (args.size() < 2) syntax("'*' needs at least two operands", e.offset);
      return mk_mul(std::move(args));
    }
    if (op == "/") return convert_div(e, schema, env);
  } catch (const TermError& err) {
    if (err.error_kind == TermError::Kind::SortError ||
        err.error_kind == TermError::Kind::NonLinear) {
      throw TermError(err.error_kind,
                      std::string(err.what()) + " (near byte " + std::to_string(e.offset) + ")");
    }
    throw;
  }
  throw TermError(TermError::Kind::UnknownSymbol,
                  "unknown operator '" + op + "' at byte " + std::to_string(e.offset));
}

}  // namespace

TermPtr parse_term_sexpr(const Sexpr& e, const Schema& schema) {
  return convert(e, schema, Env{});
}

TermPtr parse_term_sexpr(const Sexpr& e, const Schema& schema,
                         const std::map<std::string, TermPtr>& defs) {
  return convert(e, schema, defs);
}

TermPtr parse_term(std::string_view input, const Schema& schema) {
  Sexpr e;
  try {
    e = parse_single_sexpr(input);
  } catch (const SexprError& err) {
    throw TermError(TermError::Kind::Syntax, err.what());
  }
  return parse_term_sexpr(e, schema);
}

}  // namespace reqsmith
