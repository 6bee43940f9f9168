#include "reqsmith/rational.hpp"

#include <cctype>

namespace reqsmith {

std::optional<Rat> rat_from_literal(const std::string& text) {
  if (text.empty()) return std::nullopt;
  auto dot = text.find('.');
  std::string digits;
  size_t frac_len = 0;
  if (dot == std::string::npos) {
    digits = text;
  } else {
    if (dot == 0 || dot + 1 >= text.size()) return std::nullopt;
    digits = text.substr(0, dot) + text.substr(dot + 1);
    frac_len = text.size() - dot - 1;
  }
  for (char c : digits)
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  mpz_class num(digits, 10);
  mpz_class den = 1;
  for (size_t i = 0; i < frac_len; ++i) den *= 10;
  Rat r(num, den);
  r.canonicalize();
  return r;
}

bool rat_has_finite_decimal(const Rat& r) {
  mpz_class den = r.get_den();
  for (int p : {2, 5})
    while (mpz_divisible_ui_p(den.get_mpz_t(), p)) den /= p;
  return den == 1;
}

std::string rat_to_decimal(const Rat& r) {
  mpz_class num = r.get_num();
  mpz_class den = r.get_den();
  // Scale denominator up to a power of ten: den = 2^a * 5^b, pad with the
  // missing factor so den becomes 10^max(a,b).
  unsigned a = 0, b = 0;
  mpz_class d = den;
  while (mpz_divisible_ui_p(d.get_mpz_t(), 2)) { d /= 2; ++a; }
  while (mpz_divisible_ui_p(d.get_mpz_t(), 5)) { d /= 5; ++b; }
  unsigned k = a > b ? a : b;
  for (unsigned i = a; i < k; ++i) num *= 2;
  for (unsigned i = b; i < k; ++i) num *= 5;
  std::string digits = num.get_str();
  if (k == 0) return digits + ".0";
  if (digits.size() <= k) digits.insert(0, k + 1 - digits.size(), '0');
  digits.insert(digits.size() - k, ".");
  return digits;
}

std::string rat_to_display(const Rat& r) {
  if (r < 0) return "-" + rat_to_display(Rat(-r));
  if (rat_has_finite_decimal(r)) return rat_to_decimal(r);
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

}  // namespace reqsmith
