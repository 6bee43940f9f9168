#include "reqsmith/smt_repl.hpp"

#include <cctype>

#include "reqsmith/parser.hpp"
#include "reqsmith/qflra.hpp"

namespace reqsmith {

// --------------------------------------------------------------------------
// CommandScanner

void CommandScanner::feed(std::string_view bytes) {
  buf_.append(bytes);
  scan();
}

std::optional<std::string> CommandScanner::take() {
  if (ready_.empty()) return std::nullopt;
  std::string out = std::move(ready_.front());
  ready_.erase(ready_.begin());
  return out;
}

void CommandScanner::scan() {
  auto emit = [&](size_t end) {
    ready_.push_back(buf_.substr(start_, end - start_));
    start_ = std::string::npos;
  };
  while (pos_ < buf_.size()) {
    char c = buf_[pos_];
    if (in_comment_) {
      if (c == '\n') in_comment_ = false;
      ++pos_;
      continue;
    }
    if (in_string_) {
      if (c == '"') {
        if (pos_ + 1 >= buf_.size()) break;  // "" escape needs lookahead
        if (buf_[pos_ + 1] == '"') {
          pos_ += 2;
          continue;
        }
        in_string_ = false;
      }
      ++pos_;
      continue;
    }
    if (in_quote_) {
      if (c == '|') in_quote_ = false;
      ++pos_;
      continue;
    }
    switch (c) {
      case ';':
        if (depth_ == 0 && start_ != std::string::npos) emit(pos_);
        in_comment_ = true;
        ++pos_;
        break;
      case '(':
        if (start_ == std::string::npos)
          start_ = pos_;
        else if (depth_ == 0)
          emit(pos_);  // bare token ran into a new list
        if (start_ == std::string::npos) start_ = pos_;
        ++depth_;
        ++pos_;
        break;
      case ')':
        ++pos_;
        if (depth_ > 0) {
          --depth_;
          if (depth_ == 0 && start_ != std::string::npos) emit(pos_);
        }
        break;
      case '"':
        if (start_ == std::string::npos) start_ = pos_;
        in_string_ = true;
        ++pos_;
        break;
      case '|':
        if (start_ == std::string::npos) start_ = pos_;
        in_quote_ = true;
        ++pos_;
        break;
      default:
        if (std::isspace(static_cast<unsigned char>(c))) {
          if (depth_ == 0 && start_ != std::string::npos) emit(pos_);
        } else if (start_ == std::string::npos) {
          start_ = pos_;
        }
        ++pos_;
        break;
    }
  }
  // Drop consumed bytes so long sessions stay bounded.
  size_t keep = start_ == std::string::npos ? pos_ : start_;
  if (keep > 0) {
    buf_.erase(0, keep);
    pos_ -= keep;
    if (start_ != std::string::npos) start_ -= keep;
  }
}

// --------------------------------------------------------------------------
// SmtRepl

namespace {

std::string escape_quotes(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += c;
    if (c == '"') out += c;
  }
  return out;
}

bool parse_count(const Sexpr& e, size_t& out) {
  if (e.kind != Sexpr::Kind::Atom || e.atom.empty()) return false;
  for (char c : e.atom)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  out = std::stoul(e.atom);
  return true;
}

}  // namespace

SmtRepl::Step SmtRepl::ok() const { return {print_success_ ? "success\n" : "", false}; }

SmtRepl::Step SmtRepl::error(const std::string& msg) {
  return {"(error \"" + escape_quotes(msg) + "\")\n", false};
}

void SmtRepl::invalidate() {
  last_ = Last::None;
  model_ = Assignment{};
  core_.reset();
}

void SmtRepl::rebuild_schema() {
  schema_ = Schema{};
  for (const VarDecl& d : decls_) schema_.add(d);
}

Sort SmtRepl::parse_sort(const Sexpr& e) const {
  if (e.kind == Sexpr::Kind::Atom) {
    if (e.atom == "Bool") return Sort::Bool;
    // Integer-sorted declarations are admitted and widened to Real; the
    // engine's theory is linear real arithmetic.
    if (e.atom == "Real" || e.atom == "Int") return Sort::Real;
  }
  throw TermError(TermError::Kind::SortError, "unsupported sort " + sexpr_to_string(e));
}

SmtRepl::Step SmtRepl::handle_text(std::string_view command) {
  Sexpr cmd;
  try {
    cmd = parse_single_sexpr(command);
  } catch (const SexprError& e) {
    return error(e.what());
  }
  return handle(cmd);
}

SmtRepl::Step SmtRepl::handle(const Sexpr& cmd) {
  if (!cmd.is_list() || cmd.items.empty() || cmd.items[0].kind != Sexpr::Kind::Atom)
    return error("expected a command list");
  const std::string& op = cmd.items[0].atom;
  const size_t argc = cmd.items.size() - 1;

  try {
    if (op == "set-logic") {
      if (argc != 1) return error("set-logic expects one argument");
      return ok();
    }
    if (op == "set-info") return ok();
    if (op == "set-option") {
      if (argc == 2 && cmd.items[1].is_atom(":print-success")) {
        if (cmd.items[2].is_atom("true"))
          print_success_ = true;
        else if (cmd.items[2].is_atom("false"))
          print_success_ = false;
        else
          return error("option :print-success expects true or false");
      }
      return ok();
    }
    if (op == "declare-const") {
      if (argc != 2 || cmd.items[1].kind != Sexpr::Kind::Atom)
        return error("declare-const expects a name and a sort");
      return do_declare(cmd.items[1].atom, parse_sort(cmd.items[2]));
    }
    if (op == "declare-fun") {
      if (argc != 3 || cmd.items[1].kind != Sexpr::Kind::Atom)
        return error("declare-fun expects a name, a parameter list, and a sort");
      if (!cmd.items[2].is_list() || !cmd.items[2].items.empty())
        return error("only zero-arity declarations are supported");
      return do_declare(cmd.items[1].atom, parse_sort(cmd.items[3]));
    }
    if (op == "define-fun") {
      if (argc != 4 || cmd.items[1].kind != Sexpr::Kind::Atom)
        return error("define-fun expects a name, a parameter list, a sort, and a body");
      if (!cmd.items[2].is_list() || !cmd.items[2].items.empty())
        return error("only zero-arity definitions are supported");
      const std::string& name = cmd.items[1].atom;
      if (schema_.find(name) || defs_.count(name))
        return error("symbol '" + name + "' is already in use");
      Sort sort = parse_sort(cmd.items[3]);
      TermPtr body = parse_term_sexpr(cmd.items[4], schema_, defs_);
      if (body->sort != sort) return error("definition body sort mismatch for '" + name + "'");
      defs_list_.emplace_back(name, body);
      defs_[name] = body;
      invalidate();
      return ok();
    }
    if (op == "assert") {
      if (argc != 1) return error("assert expects one term");
      return do_assert(cmd.items[1]);
    }
    if (op == "check-sat") return do_check_sat();
    if (op == "get-model") return do_get_model();
    if (op == "get-unsat-core") return do_get_unsat_core();
    if (op == "push" || op == "pop") {
      size_t n = 1;
      if (argc == 1 && !parse_count(cmd.items[1], n))
        return error(op + " expects a numeral");
      if (argc > 1) return error(op + " expects at most one argument");
      return op == "push" ? do_push(n) : do_pop(n);
    }
    if (op == "echo") {
      if (argc != 1 || cmd.items[1].kind != Sexpr::Kind::String)
        return error("echo expects one string literal");
      return {cmd.items[1].atom + "\n", false};
    }
    if (op == "reset") {
      *this = SmtRepl{};
      return {"", false};
    }
    if (op == "exit") return {"", true};
  } catch (const TermError& e) {
    return error(e.what());
  } catch (const SexprError& e) {
    return error(e.what());
  }
  return error("unsupported command '" + op + "'");
}

SmtRepl::Step SmtRepl::do_declare(const std::string& name, Sort sort) {
  if (defs_.count(name)) return error("symbol '" + name + "' is already in use");
  try {
    schema_.add({name, sort, ""});
  } catch (const TermError& e) {
    return error(e.what());
  }
  decls_.push_back({name, sort, ""});
  invalidate();
  return ok();
}

SmtRepl::Step SmtRepl::do_assert(const Sexpr& body) {
  const Sexpr* term_expr = &body;
  std::string label;
  if (body.is_list() && !body.items.empty() && body.items[0].is_atom("!")) {
    if (body.items.size() != 4 || !body.items[2].is_atom(":named") ||
        body.items[3].kind != Sexpr::Kind::Atom)
      return error("only the (! <term> :named <label>) annotation is supported");
    term_expr = &body.items[1];
    label = body.items[3].atom;
    if (!is_simple_symbol(label)) return error("assertion label must be a simple symbol");
    for (const Assertion& a : asserts_)
      if (a.label == label) return error("assertion label '" + label + "' is already in use");
  }
  TermPtr t = parse_term_sexpr(*term_expr, schema_, defs_);
  if (t->sort != Sort::Bool) return error("asserted term is not Bool-sorted");
  asserts_.push_back({std::move(t), std::move(label)});
  invalidate();
  return ok();
}

SmtRepl::Step SmtRepl::do_check_sat() {
  std::vector<TermPtr> terms;
  terms.reserve(asserts_.size());
  for (const Assertion& a : asserts_) terms.push_back(a.term);
  qflra::SolveResult res = qflra::solve(terms, schema_);
  core_.reset();
  if (res.sat) {
    last_ = Last::Sat;
    model_ = std::move(res.model);
    return {"sat\n", false};
  }
  last_ = Last::Unsat;
  model_ = Assignment{};
  return {"unsat\n", false};
}

SmtRepl::Step SmtRepl::do_get_model() const {
  if (last_ != Last::Sat) return error("model is not available");
  std::string out = "(\n";
  for (const VarDecl& d : decls_) {
    auto it = model_.values.find(d.name);
    std::string value;
    if (it == model_.values.end())
      value = d.sort == Sort::Bool ? "false" : "0.0";
    else if (d.sort == Sort::Bool)
      value = it->second.b ? "true" : "false";
    else
      value = print_term(mk_real(it->second.r));
    out += "  (define-fun " + d.name + " () " + sort_name(d.sort) + " " + value + ")\n";
  }
  out += ")\n";
  return {out, false};
}

SmtRepl::Step SmtRepl::do_get_unsat_core() {
  if (last_ != Last::Unsat) return error("unsat core is not available");
  if (!core_) {
    std::vector<TermPtr> terms;
    std::vector<size_t> named;
    for (size_t i = 0; i < asserts_.size(); ++i) {
      terms.push_back(asserts_[i].term);
      if (!asserts_[i].label.empty()) named.push_back(i);
    }
    std::vector<std::string> labels;
    for (size_t i : qflra::minimize_core(terms, schema_, named))
      labels.push_back(asserts_[i].label);
    core_ = std::move(labels);
  }
  std::string out = "(";
  for (size_t i = 0; i < core_->size(); ++i) {
    if (i) out += ' ';
    out += (*core_)[i];
  }
  out += ")\n";
  return {out, false};
}

SmtRepl::Step SmtRepl::do_push(size_t n) {
  for (size_t i = 0; i < n; ++i)
    stack_.push_back({decls_.size(), defs_list_.size(), asserts_.size()});
  return ok();
}

SmtRepl::Step SmtRepl::do_pop(size_t n) {
  if (n > stack_.size()) return error("pop exceeds the current stack depth");
  if (n == 0) return ok();
  Frame target = stack_[stack_.size() - n];
  stack_.resize(stack_.size() - n);
  decls_.resize(target.decls);
  defs_list_.resize(target.defs);
  asserts_.resize(target.asserts);
  defs_.clear();
  for (const auto& [name, term] : defs_list_) defs_[name] = term;
  rebuild_schema();
  invalidate();
  return ok();
}

}  // namespace reqsmith
