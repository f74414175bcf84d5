#include "tilelab/rational.hpp"

#include <cctype>
#include <cmath>
#include <limits>

#include "tilelab/errors.hpp"

namespace tilelab {

Rational ratio(const BigInt& num, const BigInt& den) {
  if (den == 0) throw NumericError("zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

namespace {

BigInt pow10(long exponent) {
  BigInt result;
  mpz_ui_pow_ui(result.get_mpz_t(), 10, static_cast<unsigned long>(exponent));
  return result;
}

Rational parse_decimal(std::string_view text) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    negative = text[pos] == '-';
    ++pos;
  }
  std::string digits;
  long scale = 0;
  bool seen_digit = false;
  bool seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) ++scale;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw StructuralError("not a number: '" + std::string(text) + "'");
  long exponent = 0;
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    ++pos;
    std::string exp_text(text.substr(pos));
    if (exp_text.empty()) throw StructuralError("bad exponent in '" + std::string(text) + "'");
    std::size_t used = 0;
    try {
      exponent = std::stol(exp_text, &used);
    } catch (const std::exception&) {
      throw StructuralError("bad exponent in '" + std::string(text) + "'");
    }
    pos += used;
  }
  if (pos != text.size()) throw StructuralError("trailing characters in '" + std::string(text) + "'");

  Rational value(BigInt(digits, 10), 1);
  const long shift = exponent - scale;
  if (shift > 0) {
    value *= pow10(shift);
  } else if (shift < 0) {
    value /= pow10(-shift);
  }
  value.canonicalize();
  return negative ? Rational(-value) : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw StructuralError("empty rational literal");
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_decimal(text);
  const Rational num = parse_decimal(text.substr(0, slash));
  const Rational den = parse_decimal(text.substr(slash + 1));
  if (den == 0) throw StructuralError("zero denominator in '" + std::string(text) + "'");
  Rational out = num / den;
  out.canonicalize();
  return out;
}

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw StructuralError("non-finite coordinate");
  Rational out(value);
  out.canonicalize();
  return out;
}

double to_double(const Rational& value) { return value.get_d(); }

double to_double(const BigInt& value) { return value.get_d(); }

double log_abs(const BigInt& value) {
  if (value == 0) return -std::numeric_limits<double>::infinity();
  long exp2 = 0;
  const double mantissa = mpz_get_d_2exp(&exp2, value.get_mpz_t());
  return std::log(std::fabs(mantissa)) + static_cast<double>(exp2) * std::log(2.0);
}

double log_abs(const Rational& value) {
  if (value == 0) return -std::numeric_limits<double>::infinity();
  return log_abs(BigInt(value.get_num())) - log_abs(BigInt(value.get_den()));
}

std::string to_string(const Rational& value) { return value.get_str(); }

Rational abs(const Rational& value) { return value < 0 ? Rational(-value) : value; }

}  // namespace tilelab
