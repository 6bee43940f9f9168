// SMT-LIB2 command interpreter for the bundled solver binary. Kept in the
// library so the protocol can be tested without spawning a process.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reqsmith/sexpr.hpp"
#include "reqsmith/term.hpp"

namespace reqsmith {

// Splits a byte stream into complete top-level s-expressions, tolerating
// arbitrary chunk boundaries (the solver reads from a pipe). Strings with
// doubled-quote escapes, |quoted| symbols, and ; comments are respected.
class CommandScanner {
 public:
  void feed(std::string_view bytes);
  std::optional<std::string> take();

 private:
  void scan();
  std::string buf_;
  size_t pos_ = 0;
  size_t start_ = std::string::npos;
  int depth_ = 0;
  bool in_string_ = false;
  bool in_quote_ = false;
  bool in_comment_ = false;
  std::vector<std::string> ready_;
};

class SmtRepl {
 public:
  struct Step {
    std::string out;
    bool exit = false;
  };

  Step handle_text(std::string_view command);
  Step handle(const Sexpr& cmd);

 private:
  struct Assertion {
    TermPtr term;
    std::string label;  // empty = unnamed
  };
  struct Frame {
    size_t decls = 0;
    size_t defs = 0;
    size_t asserts = 0;
  };
  enum class Last { None, Sat, Unsat };

  Step ok() const;
  static Step error(const std::string& msg);
  void invalidate();
  void rebuild_schema();
  Sort parse_sort(const Sexpr& e) const;
  Step do_declare(const std::string& name, Sort sort);
  Step do_assert(const Sexpr& body);
  Step do_check_sat();
  Step do_get_model() const;
  Step do_get_unsat_core();
  Step do_push(size_t n);
  Step do_pop(size_t n);

  bool print_success_ = false;
  std::vector<VarDecl> decls_;
  Schema schema_;
  std::vector<std::pair<std::string, TermPtr>> defs_list_;
  std::map<std::string, TermPtr> defs_;
  std::vector<Assertion> asserts_;
  std::vector<Frame> stack_;
  Last last_ = Last::None;
  Assignment model_;
  std::optional<std::vector<std::string>> core_;
};

}  // namespace reqsmith
