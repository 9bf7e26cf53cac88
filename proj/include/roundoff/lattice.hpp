// The discretised rotation F(x, y) = (floor(lambda x) - y, x) on Z^2, its
// inverse, the reversing symmetry G and orbit iteration.
//
// Points are integer pairs (X, Y); the plane point they stand for is
// lambda * (X, Y). Rescaling never enters the iteration itself.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "roundoff/arith.hpp"

namespace roundoff {

/// Integer pair, used both for lattice points and lattice displacements.
template <class Int = Integer>
struct LatticePoint {
  Int x{};
  Int y{};

  friend bool operator==(const LatticePoint& a, const LatticePoint& b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(const LatticePoint& a, const LatticePoint& b) { return !(a == b); }
  friend bool operator<(const LatticePoint& a, const LatticePoint& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  }
  friend LatticePoint operator+(const LatticePoint& a, const LatticePoint& b) { return {Int(a.x + b.x), Int(a.y + b.y)}; }
  friend LatticePoint operator-(const LatticePoint& a, const LatticePoint& b) { return {Int(a.x - b.x), Int(a.y - b.y)}; }
  friend LatticePoint operator*(const Int& k, const LatticePoint& a) { return {Int(k * a.x), Int(k * a.y)}; }
};

using Point64 = LatticePoint<std::int64_t>;
using BigPoint = LatticePoint<Integer>;

template <class To, class From>
LatticePoint<To> convert_point(const LatticePoint<From>& z) {
  return {to_int<To>(to_integer(z.x)), to_int<To>(to_integer(z.y))};
}

/// lambda = p/q split into integers of the iteration width.
template <class Int>
struct Scale {
  Int p{};
  Int q{1};
};

/// The parameter lambda, a positive rational.
class Lambda {
 public:
  explicit Lambda(Rational value) : value_(std::move(value)) {
    value_.canonicalize();
    require(sgn(value_) > 0, "lambda must be positive");
  }

  const Rational& value() const { return value_; }
  Integer num() const { return value_.get_num(); }
  Integer den() const { return value_.get_den(); }

  template <class Int>
  Scale<Int> as() const {
    return {to_int<Int>(num()), to_int<Int>(den())};
  }

  friend bool operator==(const Lambda& a, const Lambda& b) { return a.value_ == b.value_; }

 private:
  Rational value_;
};

template <class Int>
LatticePoint<Int> map_F(const LatticePoint<Int>& z, const Scale<Int>& s) {
  return {Int(mul_floor_div(s.p, z.x, s.q) - z.y), z.x};
}

template <class Int>
LatticePoint<Int> map_F_inv(const LatticePoint<Int>& z, const Scale<Int>& s) {
  return {z.y, Int(mul_floor_div(s.p, z.y, s.q) - z.x)};
}

template <class Int>
LatticePoint<Int> map_F4(LatticePoint<Int> z, const Scale<Int>& s) {
  for (int i = 0; i < 4; ++i) z = map_F(z, s);
  return z;
}

template <class Int>
LatticePoint<Int> map_F_inv4(LatticePoint<Int> z, const Scale<Int>& s) {
  for (int i = 0; i < 4; ++i) z = map_F_inv(z, s);
  return z;
}

template <class Int>
LatticePoint<Int> map_F(const LatticePoint<Int>& z, const Lambda& lam) { return map_F(z, lam.as<Int>()); }

template <class Int>
LatticePoint<Int> map_F_inv(const LatticePoint<Int>& z, const Lambda& lam) { return map_F_inv(z, lam.as<Int>()); }

/// G(x, y) = (y, x).
template <class Int>
LatticePoint<Int> symmetry_G(const LatticePoint<Int>& z) {
  return {z.y, z.x};
}

/// F^4(z) - z, in lattice units.
template <class Int>
LatticePoint<Int> discrete_field_v(const LatticePoint<Int>& z, const Scale<Int>& s) {
  return map_F4(z, s) - z;
}

template <class Int>
LatticePoint<Int> discrete_field_v(const LatticePoint<Int>& z, const Lambda& lam) {
  return discrete_field_v(z, lam.as<Int>());
}

/// Result of a capped period search. `period` is empty when the cap was hit.
struct OrbitPeriod {
  std::optional<std::uint64_t> period;
  std::uint64_t cap = 0;

  bool resolved() const { return period.has_value(); }
};

inline constexpr std::uint64_t kDefaultOrbitCap = 1'000'000'000;

/// Minimal t >= 1 with F^t(z) = z, searched up to `cap` single steps.
template <class Int>
OrbitPeriod orbit_period(const LatticePoint<Int>& z, const Scale<Int>& s, std::uint64_t cap = kDefaultOrbitCap) {
  require(cap >= 1, "orbit_period: cap must be at least 1");
  LatticePoint<Int> w = z;
  for (std::uint64_t t = 1; t <= cap; ++t) {
    w = map_F(w, s);
    if (w == z) return {t, cap};
  }
  return {std::nullopt, cap};
}

template <class Int>
OrbitPeriod orbit_period(const LatticePoint<Int>& z, const Lambda& lam, std::uint64_t cap = kDefaultOrbitCap) {
  return orbit_period(z, lam.as<Int>(), cap);
}

struct Point64Hash {
  std::size_t operator()(const Point64& z) const noexcept {
    auto h = static_cast<std::uint64_t>(z.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(z.y) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace roundoff
