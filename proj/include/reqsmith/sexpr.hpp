// Minimal s-expression reader shared by the term parser, the solver session's
// reply parsing, and the bundled solver's command loop.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace reqsmith {

struct SexprError : std::runtime_error {
  size_t offset;
  SexprError(const std::string& msg, size_t off)
      : std::runtime_error(msg + " at byte " + std::to_string(off)), offset(off) {}
};

struct Sexpr {
  enum class Kind { Atom, String, List };
  Kind kind = Kind::Atom;
  std::string atom;            // Atom: symbol/numeral/keyword, String: contents
  std::vector<Sexpr> items;    // List
  size_t offset = 0;           // byte offset of the node start

  bool is_atom(const std::string& s) const { return kind == Kind::Atom && atom == s; }
  bool is_list() const { return kind == Kind::List; }
};

class SexprReader {
 public:
  explicit SexprReader(std::string_view input) : in_(input) {}

  // Reads the next s-expression. Throws SexprError on malformed input,
  // returns false at end of input.
  bool next(Sexpr& out);

  // Position after the last read (for detecting trailing garbage).
  size_t pos() const { return pos_; }

  // Skips whitespace and ; comments; true if input is exhausted.
  bool at_end();

 private:
  Sexpr read_one();
  std::string_view in_;
  size_t pos_ = 0;
};

// Parses exactly one s-expression and rejects trailing content.
Sexpr parse_single_sexpr(std::string_view input);

// Renders an s-expression back to text (diagnostics only; terms have their
// own canonical printer).
std::string sexpr_to_string(const Sexpr& e);

}  // namespace reqsmith
