// Exact arithmetic support: GMP-backed integers and rationals, flooring
// division on every integer width used by the lattice code, integer square
// roots and rational parsing/printing.
#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace roundoff {

using Integer = mpz_class;
using Rational = mpq_class;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Precondition of an operation was not met by the caller.
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CriticalLevel : Error { using Error::Error; };
struct DegenerateTwist : Error { using Error::Error; };
struct NoSolution : Error { using Error::Error; };
struct LambdaTooLarge : Error { using Error::Error; };
struct CapExceeded : Error { using Error::Error; };
struct RegionTooLarge : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };

inline void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(what);
}

// ---------------------------------------------------------------------------
// Flooring division

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  require(b > 0, "floor_div: divisor must be positive");
  std::int64_t q = a / b;
  if ((a % b) != 0 && a < 0) --q;
  return q;
}

inline __int128 floor_div(__int128 a, __int128 b) {
  require(b > 0, "floor_div: divisor must be positive");
  __int128 q = a / b;
  if ((a % b) != 0 && a < 0) --q;
  return q;
}

inline Integer floor_div(const Integer& a, const Integer& b) {
  require(sgn(b) > 0, "floor_div: divisor must be positive");
  Integer q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

inline Integer ceil_div(const Integer& a, const Integer& b) {
  require(sgn(b) > 0, "ceil_div: divisor must be positive");
  Integer q;
  mpz_cdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

/// floor(p * x / q) without intermediate overflow.
inline std::int64_t mul_floor_div(std::int64_t p, std::int64_t x, std::int64_t q) {
  return static_cast<std::int64_t>(floor_div(static_cast<__int128>(p) * x, static_cast<__int128>(q)));
}

inline Integer mul_floor_div(const Integer& p, const Integer& x, const Integer& q) {
  return floor_div(Integer(p * x), q);
}

// ---------------------------------------------------------------------------
// Conversions between integer widths

template <class Int>
Int to_int(const Integer& v);

template <>
inline Integer to_int<Integer>(const Integer& v) { return v; }

template <>
inline std::int64_t to_int<std::int64_t>(const Integer& v) {
  if (!v.fits_slong_p()) throw Error("integer does not fit in 64 bits: " + v.get_str());
  return v.get_si();
}

inline Integer to_integer(const Integer& v) { return v; }
inline Integer to_integer(std::int64_t v) { return Integer(static_cast<long>(v)); }

// ---------------------------------------------------------------------------
// Square roots and rational helpers

inline Integer isqrt(const Integer& n) {
  require(sgn(n) >= 0, "isqrt: negative argument");
  Integer r;
  mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
  return r;
}

inline std::int64_t isqrt(std::int64_t n) {
  require(n >= 0, "isqrt: negative argument");
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

inline bool is_square(const Integer& n) { return sgn(n) >= 0 && mpz_perfect_square_p(n.get_mpz_t()) != 0; }

inline Integer floor(const Rational& x) {
  Integer r;
  mpz_fdiv_q(r.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return r;
}

inline Integer ceil(const Rational& x) {
  Integer r;
  mpz_cdiv_q(r.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return r;
}

/// Fractional part {x} in [0, 1).
inline Rational frac(const Rational& x) { return x - Rational(floor(x)); }

/// <x> = floor(sqrt(x)) for x >= 0. Uses floor(sqrt(x)) = floor(sqrt(floor(x))).
inline Integer floor_sqrt(const Rational& x) {
  require(sgn(x) >= 0, "floor_sqrt: negative argument");
  return isqrt(floor(x));
}

inline bool is_integer(const Rational& x) { return x.get_den() == 1; }

/// Reduce x into [-1/2, 1/2) modulo 1.
inline Rational wrap_unit(const Rational& x) {
  Rational shifted = x + Rational(1, 2);
  return shifted - Rational(floor(shifted)) - Rational(1, 2);
}

/// Distance from x to the nearest integer.
inline Rational dist_to_integer(const Rational& x) {
  Rational w = wrap_unit(x);
  return sgn(w) < 0 ? Rational(-w) : w;
}

inline Rational make_rational(long num, long den) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline Rational make_rational(const Integer& num, const Integer& den) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline double to_double(const Rational& x) { return x.get_d(); }

/// Exact "p/q" (or "p" when integral) rendering.
inline std::string to_string(const Rational& x) { return x.get_str(); }
inline std::string to_string(const Integer& x) { return x.get_str(); }

/// Decimal rendering with 15 significant digits.
inline std::string to_decimal(const Rational& x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", to_double(x));
  return buf;
}

inline std::string to_decimal(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

/// Parses "p/q", integers, and plain decimals ("0.0001", "1e-4") exactly.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw ContractViolation("empty rational");
  if (auto slash = s.find('/'); slash != std::string::npos) {
    Integer num, den;
    if (num.set_str(s.substr(0, slash), 10) != 0 || den.set_str(s.substr(slash + 1), 10) != 0 || den == 0)
      throw ContractViolation("malformed rational: " + s);
    return make_rational(num, den);
  }
  Integer exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string::npos) {
    if (exponent.set_str(s.substr(e + 1 + (s[e + 1] == '+' ? 1 : 0)), 10) != 0)
      throw ContractViolation("malformed exponent: " + s);
    s = s.substr(0, e);
  }
  bool negative = !s.empty() && s[0] == '-';
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) s = s.substr(1);
  std::string digits;
  long scale = 0;
  bool seen_point = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_point) throw ContractViolation("malformed decimal: " + std::string(text));
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_point) ++scale;
    } else {
      throw ContractViolation("malformed number: " + std::string(text));
    }
  }
  if (digits.empty()) throw ContractViolation("malformed number: " + std::string(text));
  Integer num(digits, 10);
  if (negative) num = -num;
  long exp10 = exponent.get_si() - scale;
  Integer p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
  return exp10 < 0 ? make_rational(num, p10) : Rational(num * p10);
}

/// pi truncated to 50 decimal places:
/// 3.14159265358979323846264338327950288419716939937510
inline const Rational& pi50() {
  static const Rational value = make_rational(Integer("314159265358979323846264338327950288419716939937510"),
                                              Integer("100000000000000000000000000000000000000000000000000"));
  return value;
}

}  // namespace roundoff
