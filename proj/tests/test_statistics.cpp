#include <gtest/gtest.h>

#include <cmath>

#include "roundoff/statistics.hpp"

using namespace roundoff;

TEST(GammaLaw, Values) {
  EXPECT_DOUBLE_EQ(gamma_law(0), 0.0);
  EXPECT_NEAR(gamma_law(1), 1.0 - 2.0 / std::exp(1.0), 1e-15);
  EXPECT_NEAR(gamma_law(16), 1.0, 1e-5);
  EXPECT_THROW(gamma_law(-1), ContractViolation);
}

namespace {

OrbitRecord record(std::uint64_t period, bool symmetric, Rational rho_range = 0) {
  OrbitRecord r;
  r.period = period;
  r.symmetric = symmetric;
  r.rho_range = rho_range;
  r.nu_range = rho_range * 2;
  return r;
}

}  // namespace

TEST(PeriodDistribution, StepFunction) {
  // Two orbits of periods 2 and 6; gamma = 2 * 8 / 4 = 4.
  std::vector<OrbitRecord> recs{record(2, true), record(6, true)};
  auto rep = period_distribution(recs, 2, 2);
  EXPECT_EQ(rep.gamma, Rational(4));
  EXPECT_EQ(rep.count_A_bar, 8u);
  ASSERT_EQ(rep.samples.size(), 321u);
  // x = 0.45: 4x = 1.8 < 2
  EXPECT_EQ(rep.samples[9].second, 0.0);
  // x = 0.5: tau <= 2
  EXPECT_EQ(rep.samples[10].second, 0.25);
  // x = 1.5: tau <= 6
  EXPECT_EQ(rep.samples[30].second, 1.0);
  EXPECT_EQ(rep.samples.back().first, 16.0);
}

TEST(PeriodDistribution, SingleFixedPoint) {
  std::vector<OrbitRecord> one{record(1, true)};
  auto rep = period_distribution(one, 1, 1);
  EXPECT_EQ(rep.gamma, Rational(1));
  // D jumps to 1 at x = 1; the trapezoid across the jump costs up to one half-step.
  EXPECT_NEAR(rep.l1_gap, -1.0, 0.03);
  EXPECT_NEAR(rep.abs_l1_gap, 6.0 / std::exp(1.0) - 1.0, 0.03);
}

TEST(PeriodDistribution, CountsUnresolvedAndRejectsEmpty) {
  OrbitRecord crit;
  crit.critical = true;
  std::vector<OrbitRecord> recs{record(3, false), crit};
  auto rep = period_distribution(recs, 1, 0);
  EXPECT_EQ(rep.unresolved, 1u);
  EXPECT_THROW(period_distribution({crit}, 1, 1), EmptyInput);
  EXPECT_THROW(period_distribution(recs, 0, 0), ContractViolation);
}

TEST(Excursion, MediansAndWeights) {
  std::vector<OrbitRecord> recs{record(1, true, 0), record(1, true, Rational(1, 3)), record(10, false, Rational(2))};
  auto pts = excursion_stats(recs);
  EXPECT_EQ(pts.median_rho_range, 2);
  EXPECT_EQ(pts.max_rho_range, 2);
  auto orb = excursion_stats(recs, Weighting::Orbits);
  EXPECT_EQ(orb.median_rho_range, Rational(1, 3));
  EXPECT_EQ(orb.median_nu_range, Rational(2, 3));
  EXPECT_EQ(excursion_stats({record(1, true, 0)}).max_rho_range, 0);
}

TEST(Symmetry, PointWeightedFraction) {
  std::vector<OrbitRecord> recs{record(3, true), record(1, false)};
  EXPECT_DOUBLE_EQ(symmetric_fraction(recs), 0.75);
  EXPECT_THROW(symmetric_fraction({}), EmptyInput);
}

namespace {

AgreementCount agreement_brute(const Rational& r, const Lambda& lam) {
  auto s = lam.as<std::int64_t>();
  std::int64_t R = to_int<std::int64_t>(Integer(ceil(Rational(r / lam.value())) - 1));
  AgreementCount out{0, 0};
  for (std::int64_t x = -R; x <= R; ++x) {
    for (std::int64_t y = -R; y <= R; ++y) {
      Point64 z{x, y};
      Point64 b = box_of(z, s);
      out.total += 1;
      if (map_F4(z, s) - z == field_w_box(b.x, b.y)) out.agree += 1;
    }
  }
  return out;
}

}  // namespace

TEST(Agreement, MatchesBruteForce) {
  for (auto [r, lam] : {std::pair{Rational(3), Rational(1, 100)}, std::pair{Rational(5, 2), Rational(3, 70)},
                        std::pair{Rational(4), Rational(7, 300)}}) {
    auto fast = agreement_density(r, Lambda(lam));
    auto slow = agreement_brute(r, Lambda(lam));
    EXPECT_EQ(fast.total, slow.total);
    EXPECT_EQ(fast.agree, slow.agree) << r << " " << lam;
  }
}

TEST(Agreement, BudgetAndDomain) {
  EXPECT_THROW(agreement_density(Rational(10), Lambda(Rational(1, 1000000)), Integer(1000)), RegionTooLarge);
  EXPECT_THROW(agreement_density(Rational(0), Lambda(Rational(1, 10))), ContractViolation);
  auto c = agreement_density(Rational(1), Lambda(Rational(1, 10)));
  EXPECT_EQ(c.total, 19 * 19);
}
