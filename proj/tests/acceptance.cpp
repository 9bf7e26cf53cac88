// Acceptance checks: one PASS/FAIL line per criterion. Tolerances are fixed
// here; `--criterion N` runs a single check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "roundoff/experiments.hpp"

using namespace roundoff;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Exact rounding to `digits` decimals, halves upward.
std::string rounded(const Rational& v, int digits) {
  Integer scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  std::string s = floor(Rational(v * Rational(scale) + Rational(1, 2))).get_str();
  if (digits == 0) return s;
  s.insert(0, static_cast<std::size_t>(std::max(0, digits + 1 - static_cast<int>(s.size()))), '0');
  return s.insert(s.size() - static_cast<std::size_t>(digits), ".");
}

Integer random_bits(std::mt19937_64& rng, int bits) {
  Integer v = 0;
  for (int i = 0; i < bits; i += 64) v = (v << 64) + Integer(std::to_string(rng()));
  if (bits % 64) v >>= 64 - bits % 64;
  return (rng() & 1) ? Integer(-v) : v;
}

Rational random_rational(std::mt19937_64& rng, long num_range, long den_max) {
  long den = 1 + static_cast<long>(rng() % static_cast<unsigned long>(den_max));
  long num = static_cast<long>(rng() % static_cast<unsigned long>(2 * num_range * den + 1)) - num_range * den;
  return make_rational(num, den);
}

// Quarter revolution from (0, r) to (r, 0), walked leg by leg; the flow is
// rightward and downward in the open first quadrant.
Rational traversal_period(const Rational& alpha) {
  Rational x = 0, y = piecewise_P_inv(alpha), t = 0;
  while (sgn(y) > 0) {
    Integer m = floor(x);
    Integer n = is_integer(y) ? Integer(floor(y) - 1) : floor(y);
    Rational vx(2 * n + 1), vy(2 * m + 1);
    Rational tx = (Rational(m + 1) - x) / vx;
    Rational ty = (y - Rational(n)) / vy;
    Rational dt = tx < ty ? tx : ty;
    x += vx * dt;
    y -= vy * dt;
    t += dt;
  }
  return 4 * t;
}

// ---------------------------------------------------------------------------

Outcome exactness() {
  std::mt19937_64 rng(1);
  const int cases = 10000;
  int bad = 0;
  for (int i = 0; i < cases; ++i) {
    Lambda lam(make_rational(Integer(abs(random_bits(rng, 128)) + 1), Integer(abs(random_bits(rng, 128)) + 1)));
    BigPoint z{random_bits(rng, 256), random_bits(rng, 256)};
    if (symmetry_G(map_F(symmetry_G(z), lam)) != map_F_inv(z, lam)) ++bad;
    if (map_F_inv(map_F(z, lam), lam) != z) ++bad;
  }
  for (int i = 0; i < cases; ++i) {
    Rational x = random_rational(rng, 1'000'000, 1'000'000);
    if (piecewise_P_inv(piecewise_P(x)) != abs(x)) ++bad;
    Rational a = abs(x);
    if (floor(piecewise_P_inv(a)) != isqrt(Integer(floor(a)))) ++bad;
  }
  int flows = 0;
  while (flows < cases) {
    PlanePoint z{random_rational(rng, 12, 500), random_rational(rng, 12, 500)};
    Rational a = hamiltonian(z);
    if (sgn(a) == 0 || (is_integer(a) && is_critical_number(a.get_num()))) continue;
    Rational t = random_rational(rng, 8, 97);
    if (hamiltonian(flow_advance(z, t)) != a) ++bad;
    ++flows;
  }
  return {bad == 0, std::to_string(4 * cases) + " cases, " + std::to_string(bad) + " mismatches"};
}

Outcome period_oracle() {
  std::mt19937_64 rng(2);
  int bad = 0;
  for (int i = 0; i < 50;) {
    long den = 1 + static_cast<long>(rng() % 1000);
    Rational a = make_rational(1 + static_cast<long>(rng() % static_cast<unsigned long>(1000 * den - 1)), den);
    if (is_integer(a) && is_critical_number(a.get_num())) continue;
    if (period_T(a) != traversal_period(a)) ++bad;
    ++i;
  }
  int intervals = 0, bad_slope = 0;
  for (Integer e = 0; e < 1000; e = next_critical(e)) {
    auto c = CriticalNumber::of(e);
    Rational len(c.next - c.e);
    Rational a1 = Rational(e) + len / 5, a2 = Rational(e) + len / 2, a3 = Rational(e) + len * Rational(7, 9);
    Rational t1 = traversal_period(a1), t2 = traversal_period(a2), t3 = traversal_period(a3);
    Rational s12 = (t2 - t1) / (a2 - a1), s23 = (t3 - t2) / (a3 - a2);
    if (s12 != s23 || s12 != period_T_prime(c)) ++bad_slope;
    ++intervals;
  }
  return {bad == 0 && bad_slope == 0, "50 levels: " + std::to_string(bad) + " mismatches; " + std::to_string(intervals) +
                                          " intervals: " + std::to_string(bad_slope) + " slope mismatches"};
}

Outcome table_one() {
  struct Row {
    long e;
    const char* shown;
    int digits;
  };
  const Row rows[] = {{10000, "0.266", 3}, {40000, "0.259", 3}, {160000, "0.257", 3}, {640000, "0.255", 3},
                      {10057, "163", 0},   {40113, "106", 0},   {160234, "4105", 0}};
  bool ok = true;
  std::string detail;
  for (const auto& r : rows) {
    Rational v = PolygonClass::of(Integer(r.e)).rho_star();
    if (sgn(v) < 0) v = -v;
    std::string got = rounded(v, r.digits);
    ok = ok && got == r.shown;
    detail += std::to_string(r.e) + ":" + got + " ";
  }
  return {ok, detail};
}

Outcome twist_dichotomy() {
  std::vector<double> k;
  std::string detail;
  for (long n : {100L, 200L, 400L, 800L}) {
    k.push_back(to_double(PolygonClass::of(Integer(n * n)).kappa));
    detail += "kappa(" + std::to_string(n) + "^2)=" + fmt("%.4f", k.back()) + " ";
  }
  bool trend = true;
  for (std::size_t i = 1; i < k.size(); ++i) trend = trend && std::fabs(k[i] - 4) < std::fabs(k[i - 1] - 4);
  double off = to_double(PolygonClass::of(class_at(Integer(400), Rational(3, 10))).kappa);
  detail += "kappa(e(400,0.3))=" + fmt("%.3e", off);
  return {std::fabs(k.back() - 4) <= 0.2 && trend && std::fabs(off) < 1e-3, detail};
}

// Minimal k >= 1 with F_lambda^k(z) on the section, found over k = 4l + r:
// the phase lambda theta + k (lambda - T)/4 must land in [-lambda/2, lambda/2) mod T.
Integer first_return_search(const Rational& theta, const Rational& period, const Rational& l) {
  std::optional<Integer> best;
  for (int r = 0; r < 4; ++r) {
    Rational c = l * theta + Rational(r) * (l - period) / 4;
    Integer l_min = r == 0 ? 1 : 0;
    for (Integer j = floor(Rational(c / period)) - 1;; ++j) {
      Integer li = ceil(Rational((Rational(j) * period - l / 2 - c) / l));
      if (li < l_min) continue;
      Integer k = 4 * li + r;
      if (!best || k < *best) best = k;
      break;
    }
  }
  return *best;
}

Outcome conjugacy() {
  std::mt19937_64 rng(5);
  int total = 0, bad = 0;
  for (long e : {2L, 5L, 10L, 25L}) {
    auto cls = PolygonClass::of(Integer(e));
    for (auto l : {Rational(1, 10000), Rational(1, 100000)}) {
      Lambda lam(l);
      auto sec = make_continuum_section(cls, lam);
      for (int i = 0; i < 100;) {
        Rational a = Rational(e) + cls.interval_length() * make_rational(50 + static_cast<long>(rng() % 900), 1000);
        Rational th = make_rational(static_cast<long>(rng() % 100000), 100000) - Rational(1, 2);
        Rational d = piecewise_P_inv(a / 2), shift = l * Rational(cls.strip()) * th;
        PlanePoint z{d + shift, d - shift};
        if (!in_section(z, sec)) continue;
        ++i;
        ++total;
        auto c = eta_plane(z, sec);
        auto ret = unperturbed_first_return(z, sec);
        Rational period = period_T(a);
        Integer formula = 4 * ceil(Rational(period / (4 * l) - th - Rational(3, 4))) + 1;
        bool ok = ret.time == formula && ret.time == first_return_search(th, period, l) &&
                  in_section(ret.point, sec) && eta_plane(ret.point, sec) == twist_T(c, cls);
        bad += !ok;
      }
    }
  }
  return {bad == 0, std::to_string(total) + " points, " + std::to_string(bad) + " mismatches"};
}

Outcome profile() {
  auto rows = period_profile(100, 100);
  double worst = 0;
  for (const auto& r : rows) worst = std::max(worst, std::fabs(r.scaled - r.profile));
  return {worst <= 0.05, "max error " + fmt("%.4f", worst)};
}

Outcome agreement() {
  auto rows = agreement_table(Rational(5), {Rational(1, 100), Rational(1, 1000), Rational(1, 10000)});
  double f2 = rows[0].count.fraction(), f3 = rows[1].count.fraction(), f4 = rows[2].count.fraction();
  return {f4 > f3 && f3 > f2 && f4 > 0.99,
          "fractions " + fmt("%.6f", f2) + " " + fmt("%.6f", f3) + " " + fmt("%.6f", f4)};
}

Outcome strip_direct() {
  bool ok = true;
  std::string detail;
  for (long e : {100L, 10000L}) {
    auto cls = PolygonClass::of(Integer(e));
    Lambda lam = select_lambda(cls, 1);
    auto dom = make_return_domain(cls, lam, choose_base_point<std::int64_t>(cls, lam, window_for_A(cls, 1)));
    auto A = build_A(dom, 1);
    const std::size_t seeds = 1000;
    std::size_t agree = 0, escaped = 0, rev = 0, rev_bad = 0;
    for (std::size_t i = 0; i < seeds; ++i) {
      const auto& z = A[i * A.size() / seeds];
      auto direct = return_map_Phi(z, dom, PhiMethod::Direct);
      auto strip = return_map_Phi(z, dom, PhiMethod::Strip);
      if (direct.point == strip.point && direct.steps == strip.steps) ++agree;
      if (direct.escaped()) {
        ++escaped;
        continue;
      }
      Point64 g = symmetry_Ge(*direct.point, dom);
      if (!in_domain_Xe(g, dom)) continue;
      auto back = return_map_Phi(g, dom, PhiMethod::Direct);
      ++rev;
      if (back.escaped() || *back.point != symmetry_Ge(z, dom)) ++rev_bad;
    }
    ok = ok && agree == seeds && rev_bad == 0 && rev > 0;
    detail += "e=" + std::to_string(e) + ": " + std::to_string(agree) + "/" + std::to_string(seeds) + " agree, " +
              std::to_string(escaped) + " escaped, reversibility " + std::to_string(rev - rev_bad) + "/" +
              std::to_string(rev) + "; ";
  }
  return {ok, detail};
}

struct Pooled {
  double mean_gap = 0, mean_abs_gap = 0, mean_size = 0, h_over_g = 0, symmetric = 0;
  std::size_t unresolved = 0;
};

Pooled pool(const std::vector<DistributionRun>& runs) {
  Pooled p;
  double g = 0, h = 0, sym = 0, size = 0;
  for (const auto& r : runs) {
    p.mean_gap += r.report.l1_gap;
    p.mean_abs_gap += r.report.abs_l1_gap;
    p.mean_size += static_cast<double>(r.stats.size);
    g += static_cast<double>(r.stats.g);
    h += static_cast<double>(r.stats.h);
    sym += r.report.symmetric_fraction * static_cast<double>(r.stats.size);
    size += static_cast<double>(r.stats.size);
    p.unresolved += r.stats.unresolved;
  }
  double n = static_cast<double>(runs.size());
  p.mean_gap /= n;
  p.mean_abs_gap /= n;
  p.mean_size /= n;
  p.h_over_g = h / g;
  p.symmetric = sym / size;
  return p;
}

Outcome distribution() {
  auto t0 = std::chrono::steady_clock::now();
  DistributionConfig cfg;
  cfg.e = 10000;
  cfg.m = 32;
  auto runs = run_distribution(cfg);
  auto p = pool(runs);
  auto span = summarize_gaps(runs);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = std::fabs(p.mean_gap) <= 0.05 && std::fabs(p.mean_size / 3.5e5 - 1) <= 0.1 &&
            std::fabs(p.h_over_g / std::sqrt(0.5) - 1) <= 0.1 && p.symmetric >= 0.9 && seconds <= 600;
  std::string detail = "9 cells: mean #Abar=" + fmt("%.0f", p.mean_size) + " mean gap=" + fmt("%+.4f", p.mean_gap) +
                       " (cells " + fmt("%+.3f", span.min) + ".." + fmt("%+.3f", span.max) + ")" +
                       " h/g=" + fmt("%.4f", p.h_over_g) + " symmetric=" + fmt("%.4f", p.symmetric) +
                       " unresolved=" + std::to_string(p.unresolved) + " time=" + fmt("%.0f", seconds) + "s";

  // D approaches the law as m grows, at <e> = 100 (nine cells) and 200 (three cells, one lambda).
  for (long e : {10000L, 40000L}) {
    std::vector<double> gaps;
    for (long m : {2L, 8L}) {
      DistributionConfig c;
      c.e = e;
      c.m = m;
      c.lambda_count = e == 10000 ? 3 : 1;
      gaps.push_back(pool(run_distribution(c)).mean_abs_gap);
    }
    ok = ok && gaps[1] < gaps[0];
    detail += "; e=" + std::to_string(e) + " mean |R-D| m=2:" + fmt("%.3f", gaps[0]) + " m=8:" + fmt("%.3f", gaps[1]);
  }
  return {ok, detail};
}

Outcome phase_plots() {
  PhasePlotConfig res;
  res.e = 40309;
  res.seed_stride = 4;
  auto a = phase_plot(res);
  double contrast = disc_contrast(a, 0.05);
  PhasePlotConfig flat;
  flat.e = 40000;
  flat.seed_stride = 4;
  auto b = phase_plot(flat);
  auto q = quadrant_occupancy(b);
  double lo = *std::min_element(q.begin(), q.end()), hi = *std::max_element(q.begin(), q.end());
  bool ok = contrast >= 5 && lo > 0 && hi / lo <= 2;
  return {ok, "e=40309 disc contrast " + fmt("%.2f", contrast) + " (need >= 5); e=40000 quadrants " +
                  fmt("%.3f", q[0]) + " " + fmt("%.3f", q[1]) + " " + fmt("%.3f", q[2]) + " " + fmt("%.3f", q[3]) +
                  " ratio " + fmt("%.2f", hi / lo)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "Run one criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"exactness", exactness},           {"period function", period_oracle},
      {"rho* table", table_one},          {"twist dichotomy", twist_dichotomy},
      {"conjugacy", conjugacy},           {"asymptotic profile", profile},
      {"agreement density", agreement},   {"strip vs direct return map", strip_direct},
      {"period distribution", distribution}, {"phase plots", phase_plots}};

  bool all = true;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("error: ") + ex.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " [" << checks[i].first << "] "
              << o.detail << " (" << fmt("%.1f", s) << "s)" << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
