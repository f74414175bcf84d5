#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>
#include <vector>

namespace tilelab {

using Rational = mpq_class;
using BigInt = mpz_class;

using RationalVector = std::vector<Rational>;
using BigVector = std::vector<BigInt>;

/// num/den in canonical form. The two-argument Rational constructor leaves
/// common factors in place, which gmp arithmetic does not tolerate.
Rational ratio(const BigInt& num, const BigInt& den);

/// Parses "p/q", an integer, or a decimal literal ("0.125", "-1e-3") exactly.
Rational parse_rational(std::string_view text);

/// Exact conversion: every finite double is a dyadic rational.
Rational rational_from_double(double value);

double to_double(const Rational& value);
double to_double(const BigInt& value);

/// log|value| without converting to double first, so huge numerators and
/// denominators do not overflow. Returns -inf for zero.
double log_abs(const Rational& value);
double log_abs(const BigInt& value);

std::string to_string(const Rational& value);

Rational abs(const Rational& value);

}  // namespace tilelab
