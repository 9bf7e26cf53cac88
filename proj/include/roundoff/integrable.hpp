// The integrable limit: the Hamiltonian H(x, y) = P(x) + P(y), its
// piecewise-constant vector field w, the polygon classes indexed by sums of
// two squares, the exact flow on the invariant polygons and the period
// function with its derivative, twist and translation length.
//
// Sign convention: kappa(e) = -(1/2)(2<e/2> + 1)^2 T'(e) and the twist map is
// T(theta, rho) = (theta + kappa rho, rho), with theta increasing along the
// flow. This is the sign for which the unperturbed return map is conjugate
// to T exactly; T factors as H o G with G(theta, rho) = (-theta, rho) and
// H(theta, rho) = (-theta + kappa rho, rho).
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "roundoff/arith.hpp"
#include "roundoff/lattice.hpp"

namespace roundoff {

struct PlanePoint {
  Rational x;
  Rational y;

  friend bool operator==(const PlanePoint& a, const PlanePoint& b) { return a.x == b.x && a.y == b.y; }
};

/// P(x) = floor(x)^2 + (2 floor(x) + 1) {x}.
inline Rational piecewise_P(const Rational& x) {
  Integer f = floor(x);
  return Rational(f * f) + Rational(2 * f + 1) * (x - Rational(f));
}

/// Non-negative branch of the inverse of P: (x + <x>(1 + <x>)) / (2<x> + 1).
inline Rational piecewise_P_inv(const Rational& x) {
  require(sgn(x) >= 0, "piecewise_P_inv: argument must be non-negative");
  Integer n = floor_sqrt(x);
  return (x + Rational(n * (1 + n))) / Rational(2 * n + 1);
}

inline Rational hamiltonian(const PlanePoint& z) { return piecewise_P(z.x) + piecewise_P(z.y); }

/// w(x, y) = (2 floor(y) + 1, -(2 floor(x) + 1)).
inline BigPoint field_w(const PlanePoint& z) {
  return {Integer(2 * floor(z.y) + 1), Integer(-(2 * floor(z.x) + 1))};
}

/// w on box B_{m,n}.
template <class Int>
LatticePoint<Int> field_w_box(const Int& m, const Int& n) {
  return {Int(2 * n + 1), Int(-(2 * m + 1))};
}

// ---------------------------------------------------------------------------
// Critical numbers

/// True iff n = a^2 + b^2 for some integers a, b (trial over a <= floor(sqrt(n))).
inline bool is_critical_number(const Integer& n) {
  if (sgn(n) < 0) return false;
  Integer r = isqrt(n);
  for (Integer a = 0; a <= r; ++a) {
    if (is_square(Integer(n - a * a))) return true;
  }
  return false;
}

inline bool is_critical_number(long n) { return is_critical_number(Integer(n)); }

/// Largest critical number <= n (n >= 0).
inline Integer prev_critical(Integer n) {
  require(sgn(n) >= 0, "prev_critical: argument must be non-negative");
  while (!is_critical_number(n)) --n;
  return n;
}

/// Smallest critical number > n.
inline Integer next_critical(Integer n) {
  do {
    ++n;
  } while (!is_critical_number(n));
  return n;
}

/// A critical number e together with its successor in the set of sums of
/// two squares; the open interval (e, next) is the critical interval of e.
struct CriticalNumber {
  Integer e;
  Integer next;

  static CriticalNumber of(const Integer& e) {
    require(is_critical_number(e), "CriticalNumber: not a sum of two squares");
    return {e, next_critical(e)};
  }

  bool contains(const Rational& alpha) const { return alpha > Rational(e) && alpha < Rational(next); }
};

// ---------------------------------------------------------------------------
// Period function

/// Exact period of the flow on the polygon H = alpha, alpha > 0.
inline Rational period_T(const Rational& alpha) {
  require(sgn(alpha) > 0, "period_T: alpha must be positive");
  Rational half = alpha / 2;
  Integer lo = floor_sqrt(half);
  Integer hi = floor_sqrt(alpha);
  Rational sum = 0;
  for (Integer n = lo + 1; n <= hi; ++n) {
    Integer n2 = n * n;
    sum += piecewise_P_inv(alpha - Rational(n2)) / Rational(4 * n2 - 1);
  }
  Rational eighth = piecewise_P_inv(half) / Rational(2 * lo + 1) - 2 * sum;
  return 8 * eighth;
}

/// T'(alpha), constant on the critical interval of e.
inline Rational period_T_prime(const CriticalNumber& c) {
  const Integer& e = c.e;
  Integer lo = floor_sqrt(Rational(e, 2));
  Integer hi = isqrt(e);
  Rational sum = 0;
  for (Integer n = lo + 1; n <= hi; ++n) {
    Integer n2 = n * n;
    sum += Rational(1, 1) / Rational((4 * n2 - 1) * (2 * isqrt(Integer(e - n2)) + 1));
  }
  Integer s = 2 * lo + 1;
  Rational quarter = Rational(1, 1) / Rational(s * s) - 4 * sum;
  return 4 * quarter;
}

/// kappa(e) = -(1/2)(2<e/2> + 1)^2 T'(e).
inline Rational twist_kappa(const CriticalNumber& c) {
  Integer s = 2 * floor_sqrt(Rational(c.e, 2)) + 1;
  return -Rational(s * s) * period_T_prime(c) / 2;
}

/// rho* = 1 / kappa(e).
inline Rational rho_star(const CriticalNumber& c) {
  Rational k = twist_kappa(c);
  if (sgn(k) == 0) throw DegenerateTwist("rho_star: kappa(e) vanishes for e = " + c.e.get_str());
  return 1 / k;
}

// ---------------------------------------------------------------------------
// Polygon classes

struct PolygonClass {
  CriticalNumber e;
  Integer m_half;  ///< <e/2>
  Integer n_full;  ///< <e>
  Rational t_prime;
  Rational kappa;
  std::optional<Rational> rho_star_value;

  static PolygonClass of(const Integer& e) {
    PolygonClass c;
    c.e = CriticalNumber::of(e);
    c.m_half = floor_sqrt(Rational(e, 2));
    c.n_full = isqrt(e);
    c.t_prime = period_T_prime(c.e);
    Integer s = 2 * c.m_half + 1;
    c.kappa = -Rational(s * s) * c.t_prime / 2;
    if (sgn(c.kappa) != 0) c.rho_star_value = 1 / c.kappa;
    return c;
  }

  /// 2<e/2> + 1: strip half-width in lattice units and the field magnitude on the diagonal box.
  Integer strip() const { return 2 * m_half + 1; }

  const Rational& rho_star() const {
    if (!rho_star_value) throw DegenerateTwist("kappa(e) vanishes for e = " + e.e.get_str());
    return *rho_star_value;
  }

  Rational interval_length() const { return Rational(e.next - e.e); }
};

struct OnCriticalBoundary {
  Integer e;
};

using ClassLookup = std::variant<PolygonClass, OnCriticalBoundary>;

/// The class whose critical interval contains alpha, or the critical level alpha itself.
inline ClassLookup class_of(const Rational& alpha) {
  require(sgn(alpha) > 0, "class_of: alpha must be positive");
  if (is_integer(alpha) && is_critical_number(alpha.get_num())) return OnCriticalBoundary{alpha.get_num()};
  return PolygonClass::of(prev_critical(floor(alpha)));
}

/// The critical number e with (n + b)^2 in {e} union (e, next).
inline Integer class_at(const Integer& n, const Rational& b) {
  require(n >= 1, "class_at: n must be positive");
  require(sgn(b) >= 0 && b < 1, "class_at: b must lie in [0, 1)");
  Rational root = Rational(n) + b;
  return prev_critical(floor(Rational(root * root)));
}

/// Thread-safe cache of polygon classes with insert-if-absent semantics.
class ClassCache {
 public:
  const PolygonClass& get(const Integer& e) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = classes_.find(e); it != classes_.end()) return it->second;
    }
    PolygonClass built = PolygonClass::of(e);
    std::unique_lock lock(mutex_);
    return classes_.try_emplace(e, std::move(built)).first->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return classes_.size();
  }

 private:
  mutable std::shared_mutex mutex_;
  std::map<Integer, PolygonClass> classes_;
};

// ---------------------------------------------------------------------------
// Polygon geometry

inline void require_noncritical(const Rational& alpha) {
  if (sgn(alpha) <= 0) throw CriticalLevel("level set at the origin");
  if (is_integer(alpha) && is_critical_number(alpha.get_num()))
    throw CriticalLevel("critical polygon H = " + alpha.get_str());
}

namespace detail {

// 0..7 counterclockwise half-quadrant index used for exact angular sorting.
inline int angular_sector(const PlanePoint& p) {
  int sx = sgn(p.x), sy = sgn(p.y);
  if (sy == 0 && sx > 0) return 0;
  if (sx > 0 && sy > 0) return 1;
  if (sx == 0 && sy > 0) return 2;
  if (sx < 0 && sy > 0) return 3;
  if (sy == 0 && sx < 0) return 4;
  if (sx < 0 && sy < 0) return 5;
  if (sx == 0 && sy < 0) return 6;
  return 7;
}

inline bool angle_less(const PlanePoint& a, const PlanePoint& b) {
  int sa = angular_sector(a), sb = angular_sector(b);
  if (sa != sb) return sa < sb;
  return sgn(Rational(a.x * b.y - a.y * b.x)) > 0;
}

}  // namespace detail

/// Vertices of the polygon H = alpha in counterclockwise order, starting on the positive x-axis.
inline std::vector<PlanePoint> polygon_vertices(const Rational& alpha) {
  require_noncritical(alpha);
  Integer lo = floor_sqrt(Rational(alpha / 2));
  Integer hi = floor_sqrt(alpha);
  // Open first octant 0 < y < x: crossings of x = n and of y = k.
  std::vector<PlanePoint> octant;
  for (Integer n = lo + 1; n <= hi; ++n) octant.push_back({Rational(n), piecewise_P_inv(alpha - Rational(n * n))});
  for (Integer k = 1; k <= lo; ++k) octant.push_back({piecewise_P_inv(alpha - Rational(k * k)), Rational(k)});

  std::vector<PlanePoint> all;
  all.reserve(8 * octant.size() + 4);
  Rational axis = piecewise_P_inv(alpha);
  all.push_back({axis, 0});
  all.push_back({0, axis});
  all.push_back({-axis, 0});
  all.push_back({0, -axis});
  for (const auto& v : octant) {
    for (int sx : {1, -1}) {
      for (int sy : {1, -1}) {
        all.push_back({sx * v.x, sy * v.y});
        all.push_back({sx * v.y, sy * v.x});
      }
    }
  }
  std::sort(all.begin(), all.end(), detail::angle_less);
  return all;
}

// ---------------------------------------------------------------------------
// Exact flow

/// Box index (m, n) that the flow through z occupies, resolving points on box
/// edges by the direction of motion. Corners are critical contact.
inline std::pair<Integer, Integer> flow_box(const PlanePoint& z) {
  bool x_on = is_integer(z.x), y_on = is_integer(z.y);
  if (x_on && y_on) throw CriticalLevel("flow reached an integer point");
  Integer m, n;
  if (!x_on) {
    m = floor(z.x);
    n = floor(z.y);
    if (y_on && 2 * m + 1 > 0) n -= 1;  // moving down across y = n
  } else {
    n = floor(z.y);
    m = floor(z.x);
    if (2 * n + 1 < 0) m -= 1;  // moving left across x = m
  }
  return {m, n};
}

struct FlowLeg {
  PlanePoint exit;
  Rational time;
};

/// Exit point and transit time from z to the boundary of its current box.
inline FlowLeg flow_leg(const PlanePoint& z) {
  auto [m, n] = flow_box(z);
  Integer wx = 2 * n + 1, wy = -(2 * m + 1);
  Rational tx = wx > 0 ? (Rational(m + 1) - z.x) / Rational(wx) : (z.x - Rational(m)) / Rational(-wx);
  Rational ty = wy > 0 ? (Rational(n + 1) - z.y) / Rational(wy) : (z.y - Rational(n)) / Rational(-wy);
  if (tx == ty) throw CriticalLevel("flow reaches a box corner");
  Rational t = tx < ty ? tx : ty;
  return {{z.x + t * Rational(wx), z.y + t * Rational(wy)}, t};
}

namespace detail {

/// Walks the flow forward for time t >= 0 box by box without period reduction.
inline PlanePoint flow_walk(PlanePoint z, Rational t) {
  require(sgn(t) >= 0, "flow_walk: time must be non-negative");
  while (sgn(t) > 0) {
    auto [m, n] = flow_box(z);
    FlowLeg leg = flow_leg(z);
    if (t <= leg.time) {
      return {z.x + t * Rational(2 * n + 1), z.y - t * Rational(2 * m + 1)};
    }
    t -= leg.time;
    z = leg.exit;
  }
  return z;
}

}  // namespace detail

/// Time-t advance of the flow; t may be negative. Whole revolutions are
/// removed exactly before walking.
inline PlanePoint flow_advance(const PlanePoint& z, const Rational& t) {
  Rational alpha = hamiltonian(z);
  require_noncritical(alpha);
  if (sgn(t) == 0) return z;
  Rational period = period_T(alpha);
  Rational reduced = t - Rational(floor(Rational(t / period))) * period;
  return detail::flow_walk(z, reduced);
}

// ---------------------------------------------------------------------------
// Asymptotic overlays (floating point, comparison only)

/// b -> (1/3)(2b + 1)^{3/2} - sqrt(2b).
inline double asymptotic_profile(double b) {
  require(b >= 0.0 && b < 1.0, "asymptotic_profile: b must lie in [0, 1)");
  return std::pow(2.0 * b + 1.0, 1.5) / 3.0 - std::sqrt(2.0 * b);
}

/// rho*(alpha) ~ -(sqrt(n)/2) (sqrt(2b + 1) - 1/sqrt(2b))^{-1} for alpha = (n + b)^2, b != 0.
inline double approx_rho_star(long n, double b) {
  require(n >= 1, "approx_rho_star: n must be positive");
  require(b > 0.0 && b < 1.0, "approx_rho_star: b must lie in (0, 1)");
  double d = std::sqrt(2.0 * b + 1.0) - 1.0 / std::sqrt(2.0 * b);
  return -0.5 * std::sqrt(static_cast<double>(n)) / d;
}

}  // namespace roundoff
