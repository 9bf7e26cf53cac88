// Experiment pipelines behind the command-line tool: twist table, period
// profile, period distribution, phase plots and agreement counts.
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "roundoff/arith.hpp"
#include "roundoff/integrable.hpp"
#include "roundoff/io.hpp"
#include "roundoff/return_map.hpp"
#include "roundoff/statistics.hpp"

namespace roundoff {

// ---------------------------------------------------------------------------
// Twist table

struct TwistRow {
  long n = 0;
  Rational b;
  PolygonClass cls;
};

inline std::vector<TwistRow> twist_table(const std::vector<long>& ns, const std::vector<Rational>& bs) {
  std::vector<TwistRow> rows;
  for (long n : ns)
    for (const auto& b : bs) rows.push_back({n, b, PolygonClass::of(class_at(Integer(n), b))});
  return rows;
}

// ---------------------------------------------------------------------------
// Period profile

struct ProfileRow {
  Rational b;
  Rational alpha;
  Rational period;
  double scaled = 0;   ///< n^{3/2} (T(alpha) - pi) / 4
  double profile = 0;  ///< (1/3)(2b + 1)^{3/2} - sqrt(2b)
};

/// T((n + b)^2) on b = i / points, i = 0 .. points - 1.
inline std::vector<ProfileRow> period_profile(long n, int points) {
  require(n >= 1 && points >= 1, "period_profile: n and points must be positive");
  std::vector<ProfileRow> rows;
  const double scale = std::pow(static_cast<double>(n), 1.5) / 4.0;
  for (int i = 0; i < points; ++i) {
    ProfileRow r;
    r.b = make_rational(i, points);
    Rational root = Rational(n) + r.b;
    r.alpha = root * root;
    r.period = period_T(r.alpha);
    r.scaled = scale * to_double(Rational(r.period - pi50()));
    r.profile = asymptotic_profile(to_double(r.b));
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Period distribution

struct DistributionConfig {
  Integer e;
  long m = 1;
  std::optional<Rational> lambda;  ///< empty: automatic, lambda_count values
  int lambda_count = 3;
  int z0_count = 3;
  std::uint64_t period_cap = 10'000'000;
  unsigned threads = 1;
};

struct DistributionRun {
  Rational lambda;
  Point64 z0;
  Rational z0_residual;
  std::size_t count_A = 0;
  ClosureStats stats;
  DistributionReport report;
  ExcursionStats excursions;
  double seconds = 0;
};

inline std::vector<Lambda> distribution_lambdas(const PolygonClass& cls, const DistributionConfig& cfg) {
  if (cfg.lambda) return {Lambda(*cfg.lambda)};
  std::vector<Lambda> out;
  for (int j = 0; j < cfg.lambda_count; ++j) out.push_back(select_lambda(cls, cfg.m, j));
  return out;
}

inline DistributionRun run_distribution_once(const PolygonClass& cls, const Lambda& lam, const Point64& z0,
                                             const DistributionConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  DistributionRun run;
  run.lambda = lam.value();
  run.z0 = z0;
  run.z0_residual = base_point_residual(z0, lam);
  auto dom = make_return_domain(cls, lam, z0);
  auto A = build_A(dom, cfg.m);
  run.count_A = A.size();
  auto closure = closure_A_bar(dom, A, cfg.period_cap, cfg.threads);
  run.stats = closure.stats;
  auto records = orbit_records(closure, dom);
  run.report = period_distribution(records, closure.stats.g, closure.stats.h);
  run.report.count_A = A.size();
  run.report.symmetric_fraction = symmetric_fraction(records);
  run.excursions = excursion_stats(records);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

/// Every (lambda, z0) cell of the experiment, lambdas outermost.
inline std::vector<DistributionRun> run_distribution(const DistributionConfig& cfg) {
  require(cfg.m >= 1 && cfg.z0_count >= 1, "run_distribution: m and z0_count must be positive");
  auto cls = PolygonClass::of(cfg.e);
  std::vector<DistributionRun> runs;
  for (const auto& lam : distribution_lambdas(cls, cfg)) {
    auto bases = choose_base_points<std::int64_t>(cls, lam, static_cast<std::size_t>(cfg.z0_count),
                                                  window_for_A(cls, cfg.m));
    for (const auto& z0 : bases) runs.push_back(run_distribution_once(cls, lam, z0, cfg));
  }
  return runs;
}

struct GapSummary {
  double min = 0, mean = 0, max = 0;
};

inline GapSummary summarize_gaps(const std::vector<DistributionRun>& runs) {
  if (runs.empty()) throw EmptyInput("summarize_gaps: no runs");
  GapSummary s{runs.front().report.l1_gap, 0, runs.front().report.l1_gap};
  for (const auto& r : runs) {
    s.min = std::min(s.min, r.report.l1_gap);
    s.max = std::max(s.max, r.report.l1_gap);
    s.mean += r.report.l1_gap;
  }
  s.mean /= static_cast<double>(runs.size());
  return s;
}

// ---------------------------------------------------------------------------
// Phase plots

struct PhasePlotConfig {
  Integer e;
  std::optional<Rational> lambda;
  int width = 0;   ///< 0: one column per lattice site across the cylinder (s)
  int height = 0;  ///< 0: one row per lattice row X + Y in the window
  std::uint64_t orbit_cap = 200'000;  ///< Phi-steps per orbit
  long seed_stride = 1;               ///< keep every k-th seed row
  bool scan_h = true;                 ///< also seed from Fix(Phi o G^e)
};

struct PhasePlot {
  Rational lambda;
  Point64 z0;
  Rational rho_lo, rho_hi;  ///< plotted rho-window [rho_lo, rho_hi)
  int width = 0, height = 0;
  std::vector<char> lit;          ///< row-major, row 0 at rho_hi
  std::vector<Point64> points;    ///< plotted orbit points, sorted
  std::size_t seeds_g = 0, seeds_h = 0;
  std::size_t orbits = 0, escaped = 0;
};

namespace detail {

inline std::optional<int> bin(const Rational& v, const Rational& lo, const Rational& hi, int cells) {
  if (v < lo || v >= hi) return std::nullopt;
  return static_cast<int>(floor(Rational((v - lo) / (hi - lo) * cells)).get_si());
}

}  // namespace detail

/// Symmetric orbits of Phi launched from Fix G^e and Fix(Phi o G^e) inside the
/// window theta in [-1/2, 1/2), rho in [-|rho*|/2, |rho*|/2).
inline PhasePlot phase_plot(const PhasePlotConfig& cfg) {
  require((cfg.width == 0 || cfg.width >= 16) && (cfg.height == 0 || cfg.height >= 16),
          "phase_plot: resolution must be at least 16x16");
  require(cfg.seed_stride >= 1, "phase_plot: seed stride must be positive");
  auto cls = PolygonClass::of(cfg.e);
  Rational r = cls.rho_star();
  if (sgn(r) < 0) r = -r;
  RhoWindow need{-2 * r, 2 * r};
  Lambda lam = cfg.lambda ? Lambda(*cfg.lambda) : select_lambda(cls, 4);
  Point64 z0 = choose_base_point<std::int64_t>(cls, lam, need);
  auto dom = make_return_domain(cls, lam, z0);

  PhasePlot plot;
  plot.lambda = lam.value();
  plot.z0 = z0;
  plot.rho_lo = -r / 2;
  plot.rho_hi = r / 2;
  const std::int64_t s = dom.s;
  const Integer two_s = 2 * to_integer(s);
  Integer sum_lo = 2 * to_integer(z0.x) + ceil(Rational(Rational(two_s) * plot.rho_lo));
  Integer sum_hi = 2 * to_integer(z0.x) + ceil(Rational(Rational(two_s) * plot.rho_hi)) - 1;
  plot.width = cfg.width ? cfg.width : static_cast<int>(s);
  plot.height = cfg.height ? cfg.height : static_cast<int>(Integer(sum_hi - sum_lo + 1).get_si());
  plot.lit.assign(static_cast<std::size_t>(plot.width) * plot.height, 0);

  // Seeds in seed-row order: Fix G^e first, then Fix(Phi o G^e).
  std::vector<Point64> seeds;
  long row = 0;
  for (Integer sum = sum_lo; sum <= sum_hi; ++sum, ++row) {
    if (row % cfg.seed_stride != 0) continue;
    std::int64_t S = to_int<std::int64_t>(sum);
    for (std::int64_t d : {std::int64_t{0}, -s}) {
      if (((S - d) % 2) != 0) continue;
      Point64 z{(S + d) / 2, (S - d) / 2};
      if (in_domain_Xe(z, dom)) {
        seeds.push_back(z);
        ++plot.seeds_g;
      }
    }
    // Fix(Phi o G^e): the perturbation spreads these over the whole row, so every site is tested.
    if (!cfg.scan_h) continue;
    for (std::int64_t d = -s + 1; d < s; ++d) {
      if (((S - d) % 2) != 0 || d == 0) continue;
      Point64 z{(S + d) / 2, (S - d) / 2};
      if (!in_domain_Xe(z, dom)) continue;
      Point64 gz = symmetry_Ge(z, dom);
      auto img = return_map_Phi(gz, dom);
      if (!img.escaped() && *img.point == z) {
        seeds.push_back(z);
        ++plot.seeds_h;
      }
    }
  }

  std::unordered_map<Point64, char, Point64Hash> seen;
  for (const auto& seed : seeds) {
    if (seen.count(seed)) continue;
    auto orbit = detail::trace_orbit(seed, dom, cfg.orbit_cap, PhiMethod::Jump);
    if (!orbit) {
      ++plot.escaped;
      seen.emplace(seed, 1);
      continue;
    }
    ++plot.orbits;
    for (const auto& z : orbit->points) {
      if (!seen.emplace(z, 1).second) continue;
      CylinderCoord c = eta(z, dom);
      auto col = detail::bin(Rational(c.theta + Rational(1, 2)), Rational(0), Rational(1), plot.width);
      auto rrow = detail::bin(c.rho, plot.rho_lo, plot.rho_hi, plot.height);
      if (!col || !rrow) continue;
      plot.lit[static_cast<std::size_t>(plot.height - 1 - *rrow) * plot.width + *col] = 1;
      plot.points.push_back(z);
    }
  }
  std::sort(plot.points.begin(), plot.points.end());
  return plot;
}

inline io::Image render(const PhasePlot& plot) {
  io::Image img(plot.width, plot.height);
  for (int row = 0; row < plot.height; ++row)
    for (int col = 0; col < plot.width; ++col)
      if (plot.lit[static_cast<std::size_t>(row) * plot.width + col]) img.set(col, row, 255, 255, 255);
  return img;
}

namespace detail {

// Pixel centre in plot coordinates (theta, rho).
inline std::pair<double, double> pixel_centre(const PhasePlot& p, int col, int row) {
  double u = (col + 0.5) / p.width - 0.5;
  double lo = to_double(p.rho_lo), hi = to_double(p.rho_hi);
  double v = hi - (row + 0.5) / p.height * (hi - lo);
  return {u, v};
}

}  // namespace detail

/// Lit fraction over all pixels divided by the lit fraction of the pixels
/// whose centres lie within `radius` of (theta, rho) = (0, 0). Infinite when
/// no pixel in the disc is lit.
inline double disc_contrast(const PhasePlot& p, double radius) {
  std::size_t all = 0, lit = 0, disc = 0, disc_lit = 0;
  for (int row = 0; row < p.height; ++row) {
    for (int col = 0; col < p.width; ++col) {
      bool on = p.lit[static_cast<std::size_t>(row) * p.width + col] != 0;
      ++all;
      lit += on;
      auto [u, v] = detail::pixel_centre(p, col, row);
      if (u * u + v * v <= radius * radius) {
        ++disc;
        disc_lit += on;
      }
    }
  }
  require(disc > 0, "disc_contrast: disc contains no pixel centre");
  double avg = static_cast<double>(lit) / static_cast<double>(all);
  if (disc_lit == 0) return std::numeric_limits<double>::infinity();
  return avg / (static_cast<double>(disc_lit) / static_cast<double>(disc));
}

/// Lit fractions of the four quadrants theta < 0 / >= 0, rho < 0 / >= 0.
inline std::array<double, 4> quadrant_occupancy(const PhasePlot& p) {
  std::array<std::size_t, 4> lit{}, all{};
  for (int row = 0; row < p.height; ++row) {
    for (int col = 0; col < p.width; ++col) {
      auto [u, v] = detail::pixel_centre(p, col, row);
      int q = (u >= 0 ? 1 : 0) + (v >= 0 ? 2 : 0);
      ++all[q];
      lit[q] += p.lit[static_cast<std::size_t>(row) * p.width + col] != 0;
    }
  }
  std::array<double, 4> out{};
  for (int q = 0; q < 4; ++q) out[q] = all[q] ? static_cast<double>(lit[q]) / static_cast<double>(all[q]) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Agreement density

struct AgreementRow {
  Rational r;
  Rational lambda;
  AgreementCount count;
};

inline std::vector<AgreementRow> agreement_table(const Rational& r, const std::vector<Rational>& lambdas,
                                                 const Integer& budget = default_region_budget()) {
  std::vector<AgreementRow> rows;
  for (const auto& l : lambdas) rows.push_back({r, l, agreement_density(r, Lambda(l), budget)});
  return rows;
}

}  // namespace roundoff
