#include "reqsmith/sexpr.hpp"

#include <cctype>

namespace reqsmith {

namespace {
bool is_symbol_char(char c) {
  if (std::isalnum(static_cast<unsigned char>(c))) return true;
  return std::string_view("~!@$%^&*_-+=<>.?/").find(c) != std::string_view::npos;
}
}  // namespace

bool SexprReader::at_end() {
  while (pos_ < in_.size()) {
    char c = in_[pos_];
    if (c == ';') {
      while (pos_ < in_.size() && in_[pos_] != '\n') ++pos_;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos_;
    } else {
      return false;
    }
  }
  return true;
}

bool SexprReader::next(Sexpr& out) {
  if (at_end()) return false;
  out = read_one();
  return true;
}

Sexpr SexprReader::read_one() {
  if (at_end()) throw SexprError("unexpected end of input", pos_);
  size_t start = pos_;
  char c = in_[pos_];
  if (c == '(') {
    ++pos_;
    Sexpr list;
    list.kind = Sexpr::Kind::List;
    list.offset = start;
    while (true) {
      if (at_end()) throw SexprError("unterminated list", start);
      if (in_[pos_] == ')') {
        ++pos_;
        return list;
      }
      list.items.push_back(read_one());
    }
  }
  if (c == ')') throw SexprError("unexpected ')'", pos_);
  if (c == '"') {
    ++pos_;
    Sexpr s;
    s.kind = Sexpr::Kind::String;
    s.offset = start;
    while (pos_ < in_.size()) {
      if (in_[pos_] == '"') {
        // SMT-LIB escapes a quote by doubling it.
        if (pos_ + 1 < in_.size() && in_[pos_ + 1] == '"') {
          s.atom += '"';
          pos_ += 2;
          continue;
        }
        ++pos_;
        return s;
      }
      s.atom += in_[pos_++];
    }
    throw SexprError("unterminated string", start);
  }
  if (c == '|') {
    ++pos_;
    Sexpr s;
    s.kind = Sexpr::Kind::Atom;
    s.offset = start;
    while (pos_ < in_.size() && in_[pos_] != '|') s.atom += in_[pos_++];
    if (pos_ >= in_.size()) throw SexprError("unterminated quoted symbol", start);
    ++pos_;
    return s;
  }
  if (c == ':' || is_symbol_char(c)) {
    Sexpr s;
    s.kind = Sexpr::Kind::Atom;
    s.offset = start;
    if (c == ':') {
      s.atom += c;
      ++pos_;
    }
    while (pos_ < in_.size() && is_symbol_char(in_[pos_])) s.atom += in_[pos_++];
    if (s.atom.empty() || s.atom == ":")
      throw SexprError("empty token", start);
    return s;
  }
  throw SexprError(std::string("unexpected character '") + c + "'", pos_);
}

Sexpr parse_single_sexpr(std::string_view input) {
  SexprReader reader(input);
  Sexpr e;
  if (!reader.next(e)) throw SexprError("empty input", 0);
  if (!reader.at_end()) throw SexprError("trailing content after s-expression", reader.pos());
  return e;
}

std::string sexpr_to_string(const Sexpr& e) {
  switch (e.kind) {
    case Sexpr::Kind::Atom:
      return e.atom;
    case Sexpr::Kind::String:
      return "\"" + e.atom + "\"";
    case Sexpr::Kind::List: {
      std::string out = "(";
      for (size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ' ';
        out += sexpr_to_string(e.items[i]);
      }
      out += ')';
      return out;
    }
  }
  return {};
}

}  // namespace reqsmith
