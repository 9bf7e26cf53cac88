// First-return dynamics near the symmetry line x = y.
//
// Perturbed side (lattice): boxes, transition points, the strip map Psi, the
// return domain X^e, cylinder coordinates (theta, rho), the return map Phi,
// its reversing symmetry G^e, rotation numbers, and the sets A and A-bar.
//
// Unperturbed side (plane): the return map F_lambda = phi_{(lambda - T)/4},
// its first return to the section, and the linear twist map T^e.
//
// The return-domain condition is written with the Hamiltonian H; the same
// condition is sometimes printed with a different letter for the function.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "roundoff/arith.hpp"
#include "roundoff/integrable.hpp"
#include "roundoff/lattice.hpp"

namespace roundoff {

template <class Int>
using Wide = std::conditional_t<std::is_same_v<Int, std::int64_t>, __int128, Integer>;

template <class Int>
Wide<Int> to_wide(const Integer& v) {
  if constexpr (std::is_same_v<Int, std::int64_t>) {
    return static_cast<__int128>(to_int<std::int64_t>(v));
  } else {
    return v;
  }
}

// ---------------------------------------------------------------------------
// Boxes and transition points

template <class Int>
LatticePoint<Int> box_of(const LatticePoint<Int>& z, const Scale<Int>& s) {
  return {mul_floor_div(s.p, z.x, s.q), mul_floor_div(s.p, z.y, s.q)};
}

/// True iff F^4(z) lies in a different box from z.
template <class Int>
bool is_transition(const LatticePoint<Int>& z, const Scale<Int>& s) {
  require(!(z.x == 0 && z.y == 0), "is_transition: the origin is excluded");
  return box_of(map_F4(z, s), s) != box_of(z, s);
}

namespace detail {

// {v : floor(p v / q) = c} = [ceil(c q / p), ceil((c + 1) q / p) - 1].
template <class Int>
std::pair<Int, Int> floor_level(const Int& c, const Scale<Int>& s) {
  Int lo = ceil_div(Int(c * s.q), s.p);
  Int hi = Int(ceil_div(Int((c + 1) * s.q), s.p) - 1);
  return {lo, hi};
}

template <class Int>
bool within(const Int& v, const std::pair<Int, Int>& r) {
  return r.first <= v && v <= r.second;
}

// Largest i >= 0 with lo <= v + i d <= hi, given that v itself satisfies it.
template <class Int>
Int run_limit(const Int& v, const Int& d, const Int& lo, const Int& hi) {
  return d > 0 ? floor_div(Int(hi - v), d) : floor_div(Int(v - lo), Int(-d));
}

}  // namespace detail

/// Length K of the regular run starting at z: z + i w_{m,n} lies in box
/// (m, n) and satisfies F^4 = id + w_{m,n} for every 0 <= i <= K. Returns -1
/// when z itself is not covered by the four floor conditions that make F^4 a
/// pure translation.
template <class Int>
Int regular_run(const LatticePoint<Int>& z, const Scale<Int>& s) {
  using detail::floor_level;
  using detail::within;
  const Int m = mul_floor_div(s.p, z.x, s.q);
  const Int n = mul_floor_div(s.p, z.y, s.q);
  // floor(l x) = m, floor(l (-n-1-x)) = -m-1
  auto bx = floor_level(m, s);
  auto c3 = floor_level(Int(-m - 1), s);
  Int x_lo = std::max(bx.first, Int(-n - 1 - c3.second));
  Int x_hi = std::min(bx.second, Int(-n - 1 - c3.first));
  // floor(l y) = n, floor(l (m - y)) = -n-1, floor(l (y - 2m - 1)) = n
  auto by = floor_level(n, s);
  auto c2 = floor_level(Int(-n - 1), s);
  Int y_lo = std::max({by.first, Int(m - c2.second), Int(2 * m + 1 + by.first)});
  Int y_hi = std::min({by.second, Int(m - c2.first), Int(2 * m + 1 + by.second)});
  if (!within(z.x, {x_lo, x_hi}) || !within(z.y, {y_lo, y_hi})) return Int(-1);
  Int kx = detail::run_limit(z.x, Int(2 * n + 1), x_lo, x_hi);
  Int ky = detail::run_limit(z.y, Int(-(2 * m + 1)), y_lo, y_hi);
  return std::min(kx, ky);
}

/// One application of the strip map.
template <class Int>
struct StripHit {
  LatticePoint<Int> point;
  std::uint64_t transit_time = 0;  ///< number of F^4 blocks
  LatticePoint<Int> box;           ///< box of the starting point
  LatticePoint<Int> defect;        ///< point - start - transit_time * w_box
};

/// Psi(z): first arrival of the F^4-orbit of z in the transition set.
/// Regular runs are crossed in one step; everything else is iterated literally.
template <class Int>
StripHit<Int> strip_map(const LatticePoint<Int>& z, const Scale<Int>& s, std::uint64_t cap) {
  require(!(z.x == 0 && z.y == 0), "strip_map: the origin is excluded");
  const LatticePoint<Int> box = box_of(z, s);
  const LatticePoint<Int> w = field_w_box(box.x, box.y);
  LatticePoint<Int> u = z;
  std::uint64_t t = 0;
  while (true) {
    LatticePoint<Int> image = map_F4(u, s);
    if (box_of(image, s) != box) {
      return {u, t, box, u - z - LatticePoint<Int>{Int(w.x * Int(t)), Int(w.y * Int(t))}};
    }
    Int run = regular_run(u, s);
    if (run >= 1) {
      u = u + LatticePoint<Int>{Int(w.x * run), Int(w.y * run)};
      t += static_cast<std::uint64_t>(to_integer(run).get_ui());
    } else {
      u = image;
      t += 1;
    }
    if (t > cap) throw CapExceeded("strip_map: no transition within cap");
  }
}

// ---------------------------------------------------------------------------
// Return domain X^e

struct CylinderCoord {
  Rational theta;
  Rational rho;

  friend bool operator==(const CylinderCoord& a, const CylinderCoord& b) {
    return a.theta == b.theta && a.rho == b.rho;
  }
};

template <class Int = std::int64_t>
struct ReturnDomain {
  PolygonClass cls;
  Lambda lambda{Rational(1)};
  Scale<Int> scale;
  LatticePoint<Int> base_point;
  Rational lo, hi;  ///< H-interval in use (defaults to the critical interval)
  Int m{};          ///< <e/2>
  Int s{};          ///< 2<e/2> + 1
  Wide<Int> hq_min{}, hq_max{};  ///< integer bounds on q * H(lambda z)
  Rational h0;                   ///< H(lambda z0)
  std::uint64_t phi_cap = 0;     ///< default cap on F-steps for one return

  /// w_{m,m} = (s, -s).
  LatticePoint<Int> w() const { return {s, Int(-s)}; }

  /// rho-extent of the domain around the base point.
  Rational rho_min() const { return (lo - h0) / (2 * lambda.value() * Rational(to_integer(s) * to_integer(s))); }
  Rational rho_max() const { return (hi - h0) / (2 * lambda.value() * Rational(to_integer(s) * to_integer(s))); }
};

/// q * H(lambda z) as an exact integer.
template <class Int>
Wide<Int> scaled_hamiltonian(const LatticePoint<Int>& z, const Scale<Int>& s) {
  auto part = [&](const Int& v) {
    Wide<Int> pv = Wide<Int>(s.p) * Wide<Int>(v);
    Wide<Int> q = Wide<Int>(s.q);
    Wide<Int> f = floor_div(pv, q);
    return Wide<Int>(q * f * f + (2 * f + 1) * (pv - q * f));
  };
  return Wide<Int>(part(z.x) + part(z.y));
}

template <class Int>
Rational lattice_hamiltonian(const LatticePoint<Int>& z, const Lambda& lam) {
  return hamiltonian({lam.value() * Rational(to_integer(z.x)), lam.value() * Rational(to_integer(z.y))});
}

template <class Int>
bool is_regular(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom) {
  LatticePoint<Int> v = discrete_field_v(z, dom.scale);
  return v.x == dom.s && v.y == -dom.s;
}

/// Membership in X^e: strip condition on X - Y, first-quadrant branch,
/// H in the domain interval, and F^4(z) = z + w_{m,m}.
template <class Int>
bool in_domain_Xe(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom) {
  Int d = z.x - z.y;
  if (d < -dom.s || d >= dom.s) return false;
  if (z.x + z.y <= 0) return false;
  Wide<Int> hq = scaled_hamiltonian(z, dom.scale);
  if (hq < dom.hq_min || hq > dom.hq_max) return false;
  return is_regular(z, dom);
}

namespace detail {

inline Rational period_bound(const PolygonClass& cls) {
  Rational top = period_T(Rational(cls.e.next));
  if (sgn(cls.e.e) > 0) top = std::max(top, period_T(Rational(cls.e.e)));
  return top;
}

}  // namespace detail

/// Builds a return domain around the diagonal lattice point base = (X0, X0).
template <class Int = std::int64_t>
ReturnDomain<Int> make_return_domain(const PolygonClass& cls, const Lambda& lam, const LatticePoint<Int>& base,
                                     std::optional<std::pair<Rational, Rational>> interval = std::nullopt) {
  ReturnDomain<Int> dom;
  dom.cls = cls;
  dom.lambda = lam;
  dom.lo = interval ? interval->first : Rational(cls.e.e);
  dom.hi = interval ? interval->second : Rational(cls.e.next);
  require(dom.lo >= Rational(cls.e.e) && dom.hi <= Rational(cls.e.next) && dom.lo < dom.hi,
          "return domain interval must lie inside the critical interval");
  // Coordinates stay within (P^-1(hi) + 2) / lambda; keep p * X well inside 64 bits.
  Rational bound = (piecewise_P_inv(dom.hi) + 2) / lam.value();
  if constexpr (std::is_same_v<Int, std::int64_t>) {
    Integer limit = Integer(1) << 60;
    if (ceil(bound) * lam.num() >= limit || lam.den() >= limit)
      throw Error("lambda too small for 64-bit iteration; use arbitrary-precision coordinates");
  }
  dom.scale = lam.as<Int>();
  dom.m = to_int<Int>(cls.m_half);
  dom.s = to_int<Int>(cls.strip());
  Rational qlo = dom.lo * Rational(lam.den());
  Rational qhi = dom.hi * Rational(lam.den());
  dom.hq_min = to_wide<Int>(Integer(floor(qlo) + 1));
  dom.hq_max = to_wide<Int>(Integer(ceil(qhi) - 1));
  dom.base_point = base;
  dom.h0 = lattice_hamiltonian(base, lam);
  dom.phi_cap = static_cast<std::uint64_t>(
      to_double(Rational(Rational(5, 4) * detail::period_bound(cls) / lam.value())) + 64.0);
  require(base.x == base.y, "base point must lie on the diagonal");
  require(in_domain_Xe(base, dom), "base point must lie in the return domain");
  return dom;
}

template <class Int>
CylinderCoord eta(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom) {
  require(in_domain_Xe(z, dom), "eta: point outside the return domain");
  Integer two_s = 2 * to_integer(dom.s);
  return {make_rational(to_integer(Int(z.x - z.y)), two_s),
          make_rational(to_integer(Int(z.x + z.y - 2 * dom.base_point.x)), two_s)};
}

/// rho of a lattice point (no domain check): (X + Y - 2 X0) / (2s).
template <class Int>
Rational rho_of(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom) {
  return make_rational(to_integer(Int(z.x + z.y - 2 * dom.base_point.x)), 2 * to_integer(dom.s));
}

/// Reversing symmetry of Phi on X^e.
template <class Int>
LatticePoint<Int> symmetry_Ge(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom) {
  Int d = z.x - z.y;
  if (d == -dom.s) return z;
  return {z.y, z.x};
}

template <class Int>
bool is_fixed_Ge(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom) {
  Int d = z.x - z.y;
  return d == 0 || d == -dom.s;
}

/// nu = rho / rho* split as index + nu with nu in [-1/2, 1/2).
struct RotationNumber {
  Rational nu;
  Integer index;
};

inline RotationNumber rotation_number(const Rational& rho, const PolygonClass& cls) {
  Rational raw = rho / cls.rho_star();
  Rational nu = wrap_unit(raw);
  return {nu, Rational(raw - nu).get_num()};
}

template <class Int>
RotationNumber rotation_number(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom) {
  return rotation_number(eta(z, dom).rho, dom.cls);
}

// ---------------------------------------------------------------------------
// Base point and lambda selection

/// rho-window [lo, hi] (relative to the base point) that the domain must contain.
struct RhoWindow {
  Rational lo;
  Rational hi;
};

namespace detail {

struct BaseCandidate {
  Integer x0;
  Rational residual;
};

template <class Int>
std::vector<BaseCandidate> base_candidates(const PolygonClass& cls, const Lambda& lam,
                                           const std::optional<RhoWindow>& window) {
  if (sgn(cls.kappa) == 0) throw DegenerateTwist("base point: kappa(e) vanishes");
  const Rational& l = lam.value();
  Rational x_lo = piecewise_P_inv(Rational(cls.e.e, 2)) / l;
  Rational x_hi = piecewise_P_inv(Rational(cls.e.next, 2)) / l;
  Integer first = floor(x_lo) + 1;
  Integer last = ceil(x_hi) - 1;
  Integer s = cls.strip();
  Rational two_l_s2 = 2 * l * Rational(s * s);
  Scale<Int> scale = lam.as<Int>();

  std::vector<BaseCandidate> out;
  std::optional<Rational> f;  // 1/4 - T(H0) / (4 lambda), an arithmetic progression in X0
  Rational step = cls.kappa / Rational(s);
  Integer f_at;
  for (Integer x0 = first; x0 <= last; ++x0) {
    LatticePoint<Int> z{to_int<Int>(x0), to_int<Int>(x0)};
    LatticePoint<Int> v = discrete_field_v(z, scale);
    if (!(to_integer(v.x) == s && to_integer(v.y) == -s)) continue;
    Rational h0 = 2 * piecewise_P(l * Rational(x0));
    if (!(h0 > Rational(cls.e.e) && h0 < Rational(cls.e.next))) continue;
    if (window) {
      if (!(Rational(cls.e.e) < h0 + two_l_s2 * window->lo && h0 + two_l_s2 * window->hi < Rational(cls.e.next)))
        continue;
    }
    if (!f) {
      f = Rational(1, 4) - period_T(h0) / (4 * l);
      f_at = x0;
    }
    Rational value = *f + Rational(x0 - f_at) * step;
    out.push_back({x0, dist_to_integer(value)});
  }
  return out;
}

}  // namespace detail

/// The `count` admissible diagonal lattice points with the smallest residual
/// |1/4 - T(z0)/(4 lambda) mod 1|; ties go to the smaller X0.
template <class Int = std::int64_t>
std::vector<LatticePoint<Int>> choose_base_points(const PolygonClass& cls, const Lambda& lam, std::size_t count,
                                                  const std::optional<RhoWindow>& window = std::nullopt) {
  auto cands = detail::base_candidates<Int>(cls, lam, window);
  if (cands.empty()) throw NoSolution("no admissible diagonal lattice point in class e = " + cls.e.e.get_str());
  std::stable_sort(cands.begin(), cands.end(),
                   [](const auto& a, const auto& b) { return a.residual < b.residual; });
  std::vector<LatticePoint<Int>> out;
  for (std::size_t i = 0; i < cands.size() && out.size() < count; ++i)
    out.push_back({to_int<Int>(cands[i].x0), to_int<Int>(cands[i].x0)});
  return out;
}

template <class Int = std::int64_t>
LatticePoint<Int> choose_base_point(const PolygonClass& cls, const Lambda& lam,
                                    const std::optional<RhoWindow>& window = std::nullopt) {
  return choose_base_points<Int>(cls, lam, 1, window).front();
}

/// Residual |1/4 - T(H(lambda z0)) / (4 lambda)| to the nearest integer.
template <class Int>
Rational base_point_residual(const LatticePoint<Int>& z0, const Lambda& lam) {
  Rational h0 = lattice_hamiltonian(z0, lam);
  return dist_to_integer(Rational(Rational(1, 4) - period_T(h0) / (4 * lam.value())));
}

/// rho-window covering nu in [-1/2, m - 1/2] plus half a fundamental domain on each side.
inline RhoWindow window_for_A(const PolygonClass& cls, long m) {
  const Rational& r = cls.rho_star();
  Rational a = -r, b = Rational(m) * r;  // nu in [-1, m]
  return a < b ? RhoWindow{a, b} : RhoWindow{b, a};
}

/// Automatic lambda = 1/(2q + variant * 5): q is the smallest integer giving a
/// rho-extent of at least (m + 1)|rho*|, then halved for safety.
inline Lambda select_lambda(const PolygonClass& cls, long m, long variant = 0) {
  Rational r = cls.rho_star();
  if (sgn(r) < 0) r = -r;
  Integer s = cls.strip();
  Integer q = ceil(Rational(2 * Rational(s * s) * Rational(m + 1) * r / cls.interval_length()));
  return Lambda(make_rational(Integer(1), Integer(2 * q + 5 * variant)));
}

// ---------------------------------------------------------------------------
// The return map Phi

enum class PhiMethod {
  Direct,  ///< literal F iteration, membership tested at every step
  Jump,    ///< F then F^4 blocks, regular runs crossed in one step
  Strip,   ///< Psi^{2<e>+2} o F, reduced modulo w_{m,m} into the strip
};

template <class Int>
struct PhiResult {
  std::optional<LatticePoint<Int>> point;  ///< empty when the orbit escaped
  std::uint64_t steps = 0;                 ///< number of F steps (or steps taken before escaping)

  bool escaped() const { return !point.has_value(); }
};

namespace detail {

template <class Int>
PhiResult<Int> phi_direct(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom, std::uint64_t cap) {
  LatticePoint<Int> u = z;
  for (std::uint64_t k = 1; k <= cap; ++k) {
    u = map_F(u, dom.scale);
    if (in_domain_Xe(u, dom)) return {u, k};
  }
  return {std::nullopt, cap};
}

template <class Int>
PhiResult<Int> phi_jump(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom, std::uint64_t cap) {
  const Scale<Int>& sc = dom.scale;
  LatticePoint<Int> u = map_F(z, sc);
  std::uint64_t k = 1;
  while (k <= cap) {
    if (in_domain_Xe(u, dom)) return {u, k};
    Int run = regular_run(u, sc);
    if (run >= 1) {
      LatticePoint<Int> b = box_of(u, sc);
      LatticePoint<Int> w = field_w_box(b.x, b.y);
      Int jump = run;
      if (b.x == dom.m && b.y == dom.m) {
        // X - Y grows by 2s per block; stop at the first block that reaches the strip.
        Int d = u.x - u.y;
        if (d < -dom.s) {
          Int i = ceil_div(Int(-dom.s - d), Int(2 * dom.s));
          if (i <= run) jump = i;
        }
      }
      u = u + LatticePoint<Int>{Int(w.x * jump), Int(w.y * jump)};
      k += 4 * static_cast<std::uint64_t>(to_integer(jump).get_ui());
    } else {
      u = map_F4(u, sc);
      k += 4;
    }
  }
  return {std::nullopt, k};
}

template <class Int>
PhiResult<Int> phi_strip(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom, std::uint64_t cap) {
  const Scale<Int>& sc = dom.scale;
  const std::uint64_t hits = 2 * static_cast<std::uint64_t>(dom.cls.n_full.get_ui()) + 2;
  std::uint64_t blocks = 0;
  LatticePoint<Int> u = map_F(z, sc);
  try {
    for (std::uint64_t j = 0; j < hits; ++j) {
      if (j > 0) {
        LatticePoint<Int> from = box_of(u, sc);
        u = map_F4(u, sc);
        ++blocks;
        // A step across a box corner passes two transitions at once.
        LatticePoint<Int> to = box_of(u, sc);
        if (from.x != to.x && from.y != to.y) ++j;
      }
      if (u.x == 0 && u.y == 0) return {std::nullopt, 1 + 4 * blocks};
      StripHit<Int> hit = strip_map(u, sc, cap / 4 + 1);
      u = hit.point;
      blocks += hit.transit_time;
      if (1 + 4 * blocks > cap) return {std::nullopt, cap};
    }
  } catch (const CapExceeded&) {
    return {std::nullopt, cap};
  }
  // Slide back along w_{m,m} into -s <= X - Y < s.
  Int d = u.x - u.y;
  Int back = floor_div(Int(d + dom.s), Int(2 * dom.s));
  u = u - LatticePoint<Int>{Int(back * dom.s), Int(-back * dom.s)};
  Int total = Int(4 * Int(static_cast<long>(blocks)) - 4 * back + 1);
  if (total < 1 || !in_domain_Xe(u, dom)) return {std::nullopt, 1 + 4 * blocks};
  return {u, static_cast<std::uint64_t>(to_integer(total).get_ui())};
}

}  // namespace detail

/// First return of the F-orbit of z to X^e. An empty result marks an
/// escaped (critical) seed: no return within `cap` F-steps, or, for the
/// strip composition, a landing point outside X^e.
template <class Int>
PhiResult<Int> return_map_Phi(const LatticePoint<Int>& z, const ReturnDomain<Int>& dom,
                              PhiMethod method = PhiMethod::Jump, std::uint64_t cap = 0) {
  require(in_domain_Xe(z, dom), "return_map_Phi: seed outside the return domain");
  if (cap == 0) cap = dom.phi_cap;
  switch (method) {
    case PhiMethod::Direct: return detail::phi_direct(z, dom, cap);
    case PhiMethod::Strip: return detail::phi_strip(z, dom, cap);
    case PhiMethod::Jump: break;
  }
  return detail::phi_jump(z, dom, cap);
}

// ---------------------------------------------------------------------------
// Invariant sets A and A-bar

/// Lattice points of X^e with rho / rho* in [-1/2, m - 1/2], sorted.
template <class Int>
std::vector<LatticePoint<Int>> build_A(const ReturnDomain<Int>& dom, long m) {
  require(m >= 1, "build_A: m must be positive");
  const Rational& r = dom.cls.rho_star();
  Rational a = -r / 2, b = Rational(m - Rational(1, 2)) * r;
  if (a > b) std::swap(a, b);
  RhoWindow need = window_for_A(dom.cls, m);
  if (!(dom.rho_min() < need.lo && need.hi < dom.rho_max()))
    throw LambdaTooLarge("build_A: return domain does not cover m + 1 fundamental domains");
  Integer two_s = 2 * to_integer(dom.s);
  Integer base2 = 2 * to_integer(dom.base_point.x);
  Integer sum_lo = base2 + ceil(Rational(Rational(two_s) * a));
  Integer sum_hi = base2 + floor(Rational(Rational(two_s) * b));
  std::vector<LatticePoint<Int>> out;
  Int s = dom.s;
  for (Integer sum = sum_lo; sum <= sum_hi; ++sum) {
    Int si = to_int<Int>(sum);
    Int start = (((si + s) % 2) == 0) ? Int(-s) : Int(-s + 1);
    for (Int d = start; d < s; d += 2) {
      LatticePoint<Int> z{Int((si + d) / 2), Int((si - d) / 2)};
      if (in_domain_Xe(z, dom)) out.push_back(z);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// One Phi-orbit of A-bar, in Phi order starting from its smallest seed in A.
template <class Int>
struct PhiOrbit {
  std::vector<LatticePoint<Int>> points;
  std::uint64_t f_steps = 0;  ///< total F-steps around the orbit
};

struct ClosureStats {
  std::size_t size = 0;              ///< #A-bar
  std::size_t g = 0;                 ///< #(Fix G^e within A-bar)
  std::size_t h = 0;                 ///< #(Fix(Phi o G^e) within A-bar)
  std::size_t unresolved = 0;        ///< seeds of A whose orbit escaped or hit the cap
  std::size_t unresolved_points = 0; ///< points discarded with those orbits
};

template <class Int>
struct Closure {
  std::vector<PhiOrbit<Int>> orbits;
  std::vector<char> symmetric;  ///< per orbit: G^e maps the orbit onto itself
  ClosureStats stats;
};

namespace detail {

template <class Int>
std::optional<PhiOrbit<Int>> trace_orbit(const LatticePoint<Int>& seed, const ReturnDomain<Int>& dom,
                                         std::uint64_t period_cap, PhiMethod method) {
  PhiOrbit<Int> orbit;
  orbit.points.push_back(seed);
  LatticePoint<Int> u = seed;
  while (true) {
    PhiResult<Int> r = return_map_Phi(u, dom, method);
    if (r.escaped()) return std::nullopt;
    orbit.f_steps += r.steps;
    if (*r.point == seed) return orbit;
    if (orbit.points.size() >= period_cap) return std::nullopt;
    u = *r.point;
    orbit.points.push_back(u);
  }
}

}  // namespace detail

/// A-bar: union of the Phi-orbits through A, with fixed-set counts. Orbits
/// are traced in seed order; with threads > 1 a batch of seeds is traced
/// concurrently and merged in seed order, so the result does not depend on
/// the thread count.
template <class Int>
Closure<Int> closure_A_bar(const ReturnDomain<Int>& dom, const std::vector<LatticePoint<Int>>& A,
                           std::uint64_t period_cap = 10'000'000, unsigned threads = 1,
                           PhiMethod method = PhiMethod::Jump) {
  static_assert(std::is_same_v<Int, std::int64_t>, "closure_A_bar uses hashed 64-bit points");
  Closure<Int> out;
  std::unordered_map<Point64, std::pair<std::uint32_t, std::uint32_t>, Point64Hash> where;  // orbit, position
  std::unordered_map<Point64, char, Point64Hash> dead;
  where.reserve(A.size() * 2);
  threads = std::max(1u, threads);
  const std::size_t batch = threads == 1 ? 1 : 64 * threads;

  for (std::size_t start = 0; start < A.size(); start += batch) {
    std::size_t end = std::min(A.size(), start + batch);
    std::vector<std::size_t> todo;
    for (std::size_t i = start; i < end; ++i)
      if (!where.count(A[i]) && !dead.count(A[i])) todo.push_back(i);
    std::vector<std::optional<PhiOrbit<Int>>> traced(todo.size());
    if (threads == 1 || todo.size() <= 1) {
      for (std::size_t j = 0; j < todo.size(); ++j) traced[j] = detail::trace_orbit(A[todo[j]], dom, period_cap, method);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (std::size_t j = next++; j < todo.size(); j = next++)
            traced[j] = detail::trace_orbit(A[todo[j]], dom, period_cap, method);
        });
      }
      for (auto& th : pool) th.join();
    }
    for (std::size_t j = 0; j < todo.size(); ++j) {
      const auto& seed = A[todo[j]];
      if (where.count(seed) || dead.count(seed)) continue;
      if (!traced[j]) {
        ++out.stats.unresolved;
        dead.emplace(seed, 1);
        continue;
      }
      auto idx = static_cast<std::uint32_t>(out.orbits.size());
      const auto& pts = traced[j]->points;
      for (std::uint32_t pos = 0; pos < pts.size(); ++pos) where.emplace(pts[pos], std::make_pair(idx, pos));
      out.orbits.push_back(std::move(*traced[j]));
    }
  }
  // Points of escaped orbits are not re-traced: count what the dead seeds stand for.
  out.stats.unresolved_points = dead.size();

  out.symmetric.assign(out.orbits.size(), 1);
  for (std::uint32_t idx = 0; idx < out.orbits.size(); ++idx) {
    const auto& pts = out.orbits[idx].points;
    out.stats.size += pts.size();
    for (std::size_t pos = 0; pos < pts.size(); ++pos) {
      const auto& z = pts[pos];
      auto ge = symmetry_Ge(z, dom);
      if (ge == z) ++out.stats.g;
      const auto& prev = pts[(pos + pts.size() - 1) % pts.size()];
      if (ge == prev) ++out.stats.h;  // Phi(G^e z) = z  <=>  G^e z = Phi^{-1} z
      auto it = where.find(ge);
      if (it == where.end() || it->second.first != idx) out.symmetric[idx] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unperturbed return map on the plane

/// Continuum section: class, lambda and an exact base point z0 = (x0, x0)
/// solving 0 = 1/4 - T(z0)/(4 lambda) mod 1.
struct ContinuumSection {
  PolygonClass cls;
  Lambda lambda{Rational(1)};
  PlanePoint base;
};

/// Exact z0 with T(H(z0)) = lambda (1 + 4k), taking k so that H(z0) is closest to the middle of the class.
inline ContinuumSection make_continuum_section(const PolygonClass& cls, const Lambda& lam) {
  if (sgn(cls.t_prime) == 0) throw DegenerateTwist("continuum base point: T'(e) vanishes");
  const Rational& l = lam.value();
  Rational mid = (Rational(cls.e.e) + Rational(cls.e.next)) / 2;
  Rational t_mid = period_T(mid);
  Integer k = floor(Rational((t_mid / l - 1) / 4 + Rational(1, 2)));
  Rational alpha0 = mid + (l * Rational(1 + 4 * k) - t_mid) / cls.t_prime;
  if (!cls.e.contains(alpha0)) throw NoSolution("continuum base point outside the class");
  Rational x0 = piecewise_P_inv(alpha0 / 2);
  return {cls, lam, {x0, x0}};
}

/// Cylinder coordinates of a plane point relative to the section.
inline CylinderCoord eta_plane(const PlanePoint& z, const ContinuumSection& sec) {
  Rational denom = 2 * Rational(sec.cls.strip()) * sec.lambda.value();
  return {(z.x - z.y) / denom, (z.x + z.y - 2 * sec.base.x) / denom};
}

/// Membership in the unperturbed section X^e: z = phi_{lambda theta}(d, d)
/// with theta in [-1/2, 1/2), H(z) in the class, and the segment from
/// z - lambda w / 2 to z + lambda w inside box (m, m).
inline bool in_section(const PlanePoint& z, const ContinuumSection& sec) {
  Rational alpha = hamiltonian(z);
  if (!sec.cls.e.contains(alpha)) return false;
  if (sgn(z.x + z.y) <= 0) return false;
  Rational theta = eta_plane(z, sec).theta;
  if (theta < Rational(-1, 2) || theta >= Rational(1, 2)) return false;
  Rational d = piecewise_P_inv(alpha / 2);
  Rational shift = sec.lambda.value() * Rational(sec.cls.strip()) * theta;
  if (!(z.x == d + shift && z.y == d - shift)) return false;
  Rational m(sec.cls.m_half);
  Rational reach = sec.lambda.value() * Rational(sec.cls.strip());
  auto inside = [&](const Rational& v) { return v > m && v < m + 1; };
  return inside(d - reach) && inside(d + reach);
}

/// F_lambda(z) = phi_{(lambda - T(z))/4}(z).
inline PlanePoint unperturbed_return(const PlanePoint& z, const Lambda& lam) {
  Rational alpha = hamiltonian(z);
  require_noncritical(alpha);
  return flow_advance(z, (lam.value() - period_T(alpha)) / 4);
}

struct UnperturbedReturn {
  PlanePoint point;
  Integer time;  ///< number of F_lambda steps
};

/// First return of F_lambda to the section, with t = 4 ceil(T/(4 lambda) - theta - 3/4) + 1.
inline UnperturbedReturn unperturbed_first_return(const PlanePoint& z, const ContinuumSection& sec) {
  require(in_section(z, sec), "unperturbed_first_return: point outside the section");
  Rational alpha = hamiltonian(z);
  Rational period = period_T(alpha);
  const Rational& l = sec.lambda.value();
  Rational theta = eta_plane(z, sec).theta;
  Integer t = 4 * ceil(Rational(period / (4 * l) - theta - Rational(3, 4))) + 1;
  PlanePoint image = flow_advance(z, Rational(t) * (l - period) / 4);
  return {image, t};
}

/// T^e(theta, rho) = (theta + kappa rho mod 1, rho).
inline CylinderCoord twist_T(const CylinderCoord& c, const PolygonClass& cls) {
  return {wrap_unit(c.theta + cls.kappa * c.rho), c.rho};
}

/// H^e(theta, rho) = (-theta + kappa rho mod 1, rho); T^e = H^e o G.
inline CylinderCoord involution_H(const CylinderCoord& c, const PolygonClass& cls) {
  return {wrap_unit(-c.theta + cls.kappa * c.rho), c.rho};
}

}  // namespace roundoff
