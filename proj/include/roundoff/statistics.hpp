// Period statistics of the return map: the gamma-scaled distribution D,
// the reference law R for random reversible maps, orbit excursions, the
// symmetric-orbit density, and the density of lattice points on which F^4
// agrees with the time-advance map of the integrable flow.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "roundoff/arith.hpp"
#include "roundoff/lattice.hpp"
#include "roundoff/return_map.hpp"

namespace roundoff {

/// R(x) = 1 - e^{-x} (1 + x).
inline double gamma_law(double x) {
  require(x >= 0, "gamma_law: x must be non-negative");
  return 1.0 - std::exp(-x) * (1.0 + x);
}

struct OrbitRecord {
  Point64 seed;
  std::optional<std::uint64_t> period;  ///< Phi-steps; empty when unresolved
  bool symmetric = false;
  Rational rho_range;  ///< max rho - min rho along the orbit
  Rational nu_range;   ///< rho_range / |rho*|, before any mod-1 reduction
  bool critical = false;
};

/// One record per orbit of a closure, in seed order, plus one unresolved
/// record per escaped seed.
template <class Int>
std::vector<OrbitRecord> orbit_records(const Closure<Int>& closure, const ReturnDomain<Int>& dom) {
  std::vector<OrbitRecord> out;
  out.reserve(closure.orbits.size());
  Rational abs_rho_star = dom.cls.rho_star();
  if (sgn(abs_rho_star) < 0) abs_rho_star = -abs_rho_star;
  Integer two_s = 2 * to_integer(dom.s);
  for (std::size_t i = 0; i < closure.orbits.size(); ++i) {
    const auto& pts = closure.orbits[i].points;
    Int lo = pts.front().x + pts.front().y, hi = lo;
    for (const auto& z : pts) {
      Int sum = z.x + z.y;
      lo = std::min(lo, sum);
      hi = std::max(hi, sum);
    }
    OrbitRecord r;
    r.seed = pts.front();
    r.period = pts.size();
    r.symmetric = closure.symmetric[i] != 0;
    r.rho_range = make_rational(to_integer(Int(hi - lo)), two_s);
    r.nu_range = r.rho_range / abs_rho_star;
    out.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < closure.stats.unresolved; ++i) {
    OrbitRecord r;
    r.critical = true;
    out.push_back(std::move(r));
  }
  return out;
}

struct DistributionReport {
  std::size_t count_A = 0;
  std::size_t count_A_bar = 0;
  std::size_t g = 0;
  std::size_t h = 0;
  Rational gamma;
  std::vector<std::pair<double, double>> samples;  ///< (x, D(x)) on the grid
  double l1_gap = 0;      ///< integral over [0, 16] of R - D (signed)
  double abs_l1_gap = 0;  ///< integral over [0, 16] of |R - D|
  double symmetric_fraction = 0;
  std::size_t unresolved = 0;
};

inline constexpr int kDistributionGridPoints = 321;
inline constexpr double kDistributionGridEnd = 16.0;

/// D(x) = #{z in A-bar : tau(z) <= gamma x} / #A-bar with gamma = 2 #A-bar / (g + h),
/// sampled on 321 equally spaced points of [0, 16].
inline DistributionReport period_distribution(const std::vector<OrbitRecord>& records, std::size_t g,
                                              std::size_t h) {
  DistributionReport rep;
  std::vector<std::uint64_t> periods;
  for (const auto& r : records) {
    if (!r.period) {
      ++rep.unresolved;
      continue;
    }
    periods.push_back(*r.period);
    rep.count_A_bar += *r.period;
  }
  if (periods.empty()) throw EmptyInput("period_distribution: no resolved orbits");
  require(g + h > 0, "period_distribution: g + h must be positive");
  rep.g = g;
  rep.h = h;
  rep.gamma = make_rational(Integer(2 * static_cast<unsigned long>(rep.count_A_bar)),
                            Integer(static_cast<unsigned long>(g + h)));
  std::sort(periods.begin(), periods.end());

  // Points in orbits of period <= t, for t running through the sorted periods.
  std::vector<std::uint64_t> cumulative(periods.size());
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < periods.size(); ++i) cumulative[i] = acc += periods[i];

  const double total = static_cast<double>(rep.count_A_bar);
  const double step = kDistributionGridEnd / (kDistributionGridPoints - 1);
  for (int i = 0; i < kDistributionGridPoints; ++i) {
    Rational x = make_rational(Integer(i), Integer(kDistributionGridPoints - 1)) * Rational(16);
    Integer bound = floor(Rational(rep.gamma * x));  // tau <= gamma x  <=>  tau <= floor(gamma x)
    auto it = std::upper_bound(periods.begin(), periods.end(), bound.get_ui());
    std::size_t k = static_cast<std::size_t>(it - periods.begin());
    double d = k == 0 ? 0.0 : static_cast<double>(cumulative[k - 1]) / total;
    rep.samples.emplace_back(i * step, d);
  }
  for (int i = 1; i < kDistributionGridPoints; ++i) {
    double a = gamma_law(rep.samples[i - 1].first) - rep.samples[i - 1].second;
    double b = gamma_law(rep.samples[i].first) - rep.samples[i].second;
    rep.l1_gap += 0.5 * step * (a + b);
    rep.abs_l1_gap += 0.5 * step * (std::fabs(a) + std::fabs(b));
  }
  return rep;
}

enum class Weighting { Points, Orbits };

struct ExcursionStats {
  Rational median_rho_range, max_rho_range;
  Rational median_nu_range, max_nu_range;
};

namespace detail {

// Smallest value whose cumulative weight reaches half of the total.
inline Rational weighted_median(std::vector<std::pair<Rational, std::uint64_t>> v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::uint64_t total = 0;
  for (const auto& [_, w] : v) total += w;
  std::uint64_t acc = 0;
  for (const auto& [value, w] : v) {
    acc += w;
    if (2 * acc >= total) return value;
  }
  return v.back().first;
}

}  // namespace detail

inline ExcursionStats excursion_stats(const std::vector<OrbitRecord>& records,
                                      Weighting weighting = Weighting::Points) {
  std::vector<std::pair<Rational, std::uint64_t>> rho, nu;
  ExcursionStats st;
  for (const auto& r : records) {
    if (!r.period) continue;
    std::uint64_t w = weighting == Weighting::Points ? *r.period : 1;
    rho.emplace_back(r.rho_range, w);
    nu.emplace_back(r.nu_range, w);
    if (rho.size() == 1 || r.rho_range > st.max_rho_range) st.max_rho_range = r.rho_range;
    if (nu.size() == 1 || r.nu_range > st.max_nu_range) st.max_nu_range = r.nu_range;
  }
  if (rho.empty()) throw EmptyInput("excursion_stats: no resolved orbits");
  st.median_rho_range = detail::weighted_median(std::move(rho));
  st.median_nu_range = detail::weighted_median(std::move(nu));
  return st;
}

/// #S / #A-bar, where S is the union of G^e-invariant orbits.
inline double symmetric_fraction(const std::vector<OrbitRecord>& records) {
  std::uint64_t total = 0, sym = 0;
  for (const auto& r : records) {
    if (!r.period) continue;
    total += *r.period;
    if (r.symmetric) sym += *r.period;
  }
  if (total == 0) throw EmptyInput("symmetric_fraction: no resolved orbits");
  return static_cast<double>(sym) / static_cast<double>(total);
}

struct AgreementCount {
  Integer total;
  Integer agree;

  double fraction() const { return to_double(make_rational(agree, total)); }
};

inline const Integer& default_region_budget() {
  static const Integer budget("100000000000");
  return budget;
}

/// Exact count of lattice points with |lambda X|, |lambda Y| < r on which
/// F^4(z) = z + w_{m,n}, (m, n) the box of z.
///
/// With m = floor(lambda X) the conditions are floor(lambda (f2 - X)) = -m - 1
/// and floor(lambda (Y - 2m - 1)) - f2 = 2n + 1, where f2 = floor(lambda (m - Y))
/// and n = floor(lambda Y). The second depends on Y and m only and the first
/// cuts an interval of X, so each (Y, m) pair is counted in O(1).
inline AgreementCount agreement_density(const Rational& r, const Lambda& lam,
                                        const Integer& budget = default_region_budget()) {
  require(sgn(r) > 0, "agreement_density: r must be positive");
  Integer radius = ceil(Rational(r / lam.value())) - 1;  // largest |X| with |lambda X| < r
  Integer side = 2 * radius + 1;
  AgreementCount out{side * side, 0};
  if (out.total > budget) throw RegionTooLarge("agreement_density: region exceeds the point budget");
  const Scale<std::int64_t> s = lam.as<std::int64_t>();
  const std::int64_t R = to_int<std::int64_t>(radius);
  auto level = [&](std::int64_t c) { return detail::floor_level<std::int64_t>(c, s); };
  const std::int64_t m_lo = mul_floor_div(s.p, -R, s.q), m_hi = mul_floor_div(s.p, R, s.q);
  __int128 agree = 0;
  for (std::int64_t y = -R; y <= R; ++y) {
    std::int64_t n = mul_floor_div(s.p, y, s.q);
    for (std::int64_t m = m_lo; m <= m_hi; ++m) {
      std::int64_t f2 = mul_floor_div(s.p, m - y, s.q);
      std::int64_t f4 = mul_floor_div(s.p, y - 2 * m - 1, s.q);
      if (f4 - f2 != 2 * n + 1) continue;
      auto box = level(m);
      auto c3 = level(-m - 1);
      std::int64_t lo = std::max({box.first, f2 - c3.second, -R});
      std::int64_t hi = std::min({box.second, f2 - c3.first, R});
      if (hi >= lo) agree += hi - lo + 1;
    }
  }
  out.agree = to_integer(static_cast<std::int64_t>(agree));
  return out;
}

}  // namespace roundoff
