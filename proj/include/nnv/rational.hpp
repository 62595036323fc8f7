#pragma once

// Exact rational scalars used by every solver and abstract domain.

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nnv {

using Rational = mpq_class;
using RationalVec = std::vector<Rational>;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses "p/q", an integer, or a finite decimal ("-0.125", "1e-3") exactly.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  if (s.empty()) throw ParseError("empty rational literal");

  if (s.find('/') != std::string::npos) {
    Rational r;
    if (r.set_str(s, 10) != 0) throw ParseError("bad rational literal '" + s + "'");
    if (r.get_den() == 0) throw ParseError("zero denominator in '" + s + "'");
    r.canonicalize();
    return r;
  }

  // decimal with optional exponent
  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') {
    negative = s[pos] == '-';
    ++pos;
  }
  std::string digits;
  long long frac_digits = 0;
  bool seen_point = false;
  bool any_digit = false;
  for (; pos < s.size(); ++pos) {
    char c = s[pos];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      any_digit = true;
      if (seen_point) ++frac_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) throw ParseError("bad rational literal '" + s + "'");
  long long exponent = 0;
  if (pos < s.size()) {
    if (s[pos] != 'e' && s[pos] != 'E') throw ParseError("bad rational literal '" + s + "'");
    ++pos;
    std::string exp_text = s.substr(pos);
    if (exp_text.empty()) throw ParseError("bad exponent in '" + s + "'");
    try {
      std::size_t used = 0;
      exponent = std::stoll(exp_text, &used);
      if (used != exp_text.size()) throw ParseError("bad exponent in '" + s + "'");
    } catch (const std::logic_error&) {
      throw ParseError("bad exponent in '" + s + "'");
    }
  }
  mpz_class num(digits, 10);
  if (negative) num = -num;
  long long scale = exponent - frac_digits;
  mpz_class pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
  Rational r;
  if (scale >= 0) {
    r = Rational(num * pow10);
  } else {
    r = Rational(num, pow10);
  }
  r.canonicalize();
  return r;
}

/// Canonical "p/q" form; integers print without a denominator.
/// n/d in lowest terms. mpq_class(n, d) does not reduce.
inline Rational ratio(long n, long d) {
  if (d == 0) throw std::domain_error("zero denominator");
  Rational r(n, d);
  r.canonicalize();
  return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(10); }

inline double to_double(const Rational& r) { return r.get_d(); }

/// Exact conversion: every finite double is a dyadic rational.
inline Rational from_double(double d) {
  if (!std::isfinite(d)) throw std::domain_error("cannot convert non-finite double to rational");
  Rational r(d);
  r.canonicalize();
  return r;
}

inline Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

inline const Rational& rmax(const Rational& a, const Rational& b) { return a < b ? b : a; }
inline const Rational& rmin(const Rational& a, const Rational& b) { return b < a ? b : a; }

inline Rational relu(const Rational& x) { return x > 0 ? x : Rational(0); }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Rational enclosure of sigmoid(x): the double result widened by `ulps` on each side.
struct SigmoidEnclosure {
  Rational lo;
  Rational hi;
};

inline SigmoidEnclosure sigmoid_enclosure(const Rational& x, int ulps = 2) {
  double v = sigmoid(to_double(x));
  double lo = v;
  double hi = v;
  for (int i = 0; i < ulps; ++i) {
    lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
    hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
  }
  // to_double(x) is off by at most |x| eps / 2 and |x| sigmoid'(x) < 1/4, so a
  // constant slack covers it and keeps the bounds monotone in x
  const double slack = 0.25 * std::numeric_limits<double>::epsilon();
  lo -= slack;
  hi += slack;
  return {from_double(std::max(lo, 0.0)), from_double(std::min(hi, 1.0))};
}

}  // namespace nnv
