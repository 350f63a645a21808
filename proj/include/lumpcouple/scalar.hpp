#ifndef LUMPCOUPLE_SCALAR_HPP
#define LUMPCOUPLE_SCALAR_HPP

#include <gmpxx.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>

#include "lumpcouple/error.hpp"

namespace lumpcouple {

/// Exact rational probability. All library code is templated on the scalar
/// type and instantiated with either this or `double`.
using Rational = mpq_class;

/// Comparison tolerance used in float mode when none is given explicitly.
inline constexpr double kDefaultEps = 1e-12;

enum class NumericMode { Exact, Float };

/// Reads LUMPCOUPLE_NUMERIC (exact|float); anything else yields `fallback`.
inline NumericMode numeric_mode_from_env(NumericMode fallback = NumericMode::Float) {
  const char* v = std::getenv("LUMPCOUPLE_NUMERIC");
  if (v == nullptr) return fallback;
  std::string_view s(v);
  if (s == "exact") return NumericMode::Exact;
  if (s == "float") return NumericMode::Float;
  return fallback;
}

namespace detail {

inline std::string shortest_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// Parses an integer, decimal ("0.25", "-1.5e-3") or fraction ("3/8") exactly.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  s = s.substr(b);
  if (s.empty()) throw Error(ErrorKind::InvalidInput, "empty numeric literal");
  try {
    if (s.find('/') != std::string::npos) {
      Rational q(s, 10);
      if (q.get_den() == 0) throw Error(ErrorKind::InvalidInput, "zero denominator in '" + s + "'");
      q.canonicalize();
      return q;
    }
    std::string mant = s;
    long exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
      mant = s.substr(0, e);
      exp10 = std::stol(s.substr(e + 1));
    }
    bool neg = false;
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
      neg = mant[0] == '-';
      mant = mant.substr(1);
    }
    std::string digits;
    for (char c : mant) {
      if (c == '.') {
        continue;
      }
      if (!std::isdigit(static_cast<unsigned char>(c)))
        throw Error(ErrorKind::InvalidInput, "bad numeric literal '" + s + "'");
      digits.push_back(c);
    }
    if (auto dot = mant.find('.'); dot != std::string::npos)
      exp10 -= static_cast<long>(mant.size() - dot - 1);
    if (digits.empty()) throw Error(ErrorKind::InvalidInput, "bad numeric literal '" + s + "'");
    mpz_class num(digits, 10);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
    Rational q = exp10 >= 0 ? Rational(num * scale) : Rational(num, scale);
    q.canonicalize();
    return neg ? Rational(-q) : q;
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::InvalidInput, "bad numeric literal '" + s + "'");
  }
}

}  // namespace detail

/// Arithmetic policy for a scalar type.
template <class T>
struct Num;

template <>
struct Num<double> {
  static constexpr bool exact = false;
  static constexpr const char* name = "float";

  static double zero() { return 0.0; }
  static double one() { return 1.0; }
  static double ratio(long n, long d) { return static_cast<double>(n) / static_cast<double>(d); }
  static double parse(std::string_view s) { return detail::parse_rational(s).get_d(); }
  static double from_double(double x) { return x; }
  static double to_double(double x) { return x; }
  static double abs(double x) { return std::fabs(x); }
  static bool is_zero(double x, double eps) { return std::fabs(x) <= eps; }
  static bool is_positive(double x, double eps) { return x > eps; }
  static bool near(double a, double b, double eps) { return std::fabs(a - b) <= eps; }
  static std::string str(double x) { return detail::shortest_double(x); }
};

template <>
struct Num<Rational> {
  static constexpr bool exact = true;
  static constexpr const char* name = "exact";

  static Rational zero() { return Rational(0); }
  static Rational one() { return Rational(1); }
  static Rational ratio(long n, long d) {
    Rational q(n, d);
    q.canonicalize();
    return q;
  }
  static Rational parse(std::string_view s) { return detail::parse_rational(s); }
  // Bare floating literals are taken at their shortest decimal spelling, so
  // 0.1 becomes 1/10 rather than the nearest binary fraction.
  static Rational from_double(double x) { return detail::parse_rational(detail::shortest_double(x)); }
  static double to_double(const Rational& x) { return x.get_d(); }
  static Rational abs(const Rational& x) { return ::abs(x); }
  static bool is_zero(const Rational& x, double) { return sgn(x) == 0; }
  static bool is_positive(const Rational& x, double) { return sgn(x) > 0; }
  static bool near(const Rational& a, const Rational& b, double) { return a == b; }
  static std::string str(const Rational& x) { return x.get_str(); }
};

template <class T>
T max_of(const T& a, const T& b) {
  return a < b ? b : a;
}

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_SCALAR_HPP
