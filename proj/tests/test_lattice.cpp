#include <gtest/gtest.h>

#include <random>

#include "roundoff/arith.hpp"
#include "roundoff/lattice.hpp"

using namespace roundoff;

TEST(Arith, FloorDivRoundsTowardMinusInfinity) {
  EXPECT_EQ(floor_div(std::int64_t{7}, std::int64_t{2}), 3);
  EXPECT_EQ(floor_div(std::int64_t{-7}, std::int64_t{2}), -4);
  EXPECT_EQ(floor_div(std::int64_t{-8}, std::int64_t{2}), -4);
  EXPECT_EQ(ceil_div(std::int64_t{-7}, std::int64_t{2}), -3);
  EXPECT_EQ(floor_div(Integer(-7), Integer(2)), -4);
  EXPECT_EQ(ceil_div(Integer(7), Integer(2)), 4);
  EXPECT_THROW(floor_div(std::int64_t{1}, std::int64_t{0}), ContractViolation);
  EXPECT_THROW(floor_div(Integer(1), Integer(-3)), ContractViolation);
}

TEST(Arith, MulFloorDivAvoidsOverflow) {
  std::int64_t big = std::int64_t{1} << 62;
  EXPECT_EQ(mul_floor_div(big, std::int64_t{4}, std::int64_t{8}), big / 2);
  EXPECT_EQ(mul_floor_div(std::int64_t{3}, -big, std::int64_t{3}), -big);
}

TEST(Arith, ParseRational) {
  EXPECT_EQ(parse_rational("3/4"), Rational(3, 4));
  EXPECT_EQ(parse_rational("6/8"), Rational(3, 4));
  EXPECT_EQ(parse_rational("-12"), Rational(-12));
  EXPECT_EQ(parse_rational("0.0001"), Rational(1, 10000));
  EXPECT_EQ(parse_rational("1e-4"), Rational(1, 10000));
  EXPECT_EQ(parse_rational("2.5E+2"), Rational(250));
  EXPECT_THROW(parse_rational("1/0"), ContractViolation);
  EXPECT_THROW(parse_rational("abc"), ContractViolation);
  EXPECT_THROW(parse_rational(""), ContractViolation);
}

TEST(Arith, WrapAndDistance) {
  EXPECT_EQ(wrap_unit(Rational(1, 2)), Rational(-1, 2));
  EXPECT_EQ(wrap_unit(Rational(-1, 2)), Rational(-1, 2));
  EXPECT_EQ(wrap_unit(Rational(7, 4)), Rational(-1, 4));
  EXPECT_EQ(dist_to_integer(Rational(-9, 10)), Rational(1, 10));
  EXPECT_EQ(floor_sqrt(Rational(99, 4)), 4);
  EXPECT_EQ(floor_sqrt(Rational(25)), 5);
}

TEST(Arith, ToIntRejectsOverflow) {
  Integer huge = Integer(1) << 80;
  EXPECT_THROW(to_int<std::int64_t>(huge), Error);
  EXPECT_EQ(to_int<std::int64_t>(Integer(-5)), -5);
}

TEST(Lattice, MapDefinition) {
  Lambda lam(Rational(1, 10));
  EXPECT_EQ(map_F(Point64{25, 3}, lam), (Point64{-1, 25}));
  EXPECT_EQ(map_F(Point64{-1, 0}, lam), (Point64{-1, -1}));
  EXPECT_EQ(map_F_inv(map_F(Point64{25, 3}, lam), lam), (Point64{25, 3}));
}

TEST(Lattice, LambdaMustBePositive) {
  EXPECT_THROW(Lambda(Rational(0)), ContractViolation);
  EXPECT_THROW(Lambda(Rational(-1, 3)), ContractViolation);
  EXPECT_EQ(Lambda(Rational(2, 4)).den(), 2);
}

// Periods below come from a separate brute-force iteration of the map.
TEST(Lattice, OrbitPeriodsMatchOracle) {
  struct Case {
    Point64 z;
    long p, q;
    std::uint64_t period;
  };
  for (const auto& c : {Case{{1, 0}, 1, 10, 5}, Case{{5, 3}, 1, 10, 33}, Case{{17, 0}, 1, 100, 69},
                        Case{{100, 0}, 1, 1000, 401}, Case{{3, 4}, 2, 7, 31}}) {
    auto r = orbit_period(c.z, Lambda(make_rational(c.p, c.q)));
    ASSERT_TRUE(r.resolved());
    EXPECT_EQ(*r.period, c.period);
  }
}

TEST(Lattice, OrbitPeriodCap) {
  auto r = orbit_period(Point64{100, 0}, Lambda(Rational(1, 1000)), 50);
  EXPECT_FALSE(r.resolved());
  EXPECT_EQ(r.cap, 50u);
  EXPECT_THROW(orbit_period(Point64{1, 0}, Lambda(Rational(1, 2)), 0), ContractViolation);
}

TEST(Lattice, SixtyFourBitAndBigIntegerPathsAgree) {
  std::mt19937_64 rng(7);
  Lambda lam(Rational(355, 1131));
  for (int i = 0; i < 2000; ++i) {
    Point64 z{static_cast<std::int64_t>(rng() % 2000001) - 1000000, static_cast<std::int64_t>(rng() % 2000001) - 1000000};
    BigPoint b = convert_point<Integer>(z);
    EXPECT_EQ(convert_point<Integer>(map_F(z, lam)), map_F(b, lam));
    EXPECT_EQ(convert_point<Integer>(map_F_inv(z, lam)), map_F_inv(b, lam));
  }
}

namespace {

Integer random_bits(std::mt19937_64& rng, int bits) {
  Integer v = 0;
  for (int i = 0; i < bits; i += 64) v = (v << 64) + Integer(std::to_string(rng()));
  v >>= (bits % 64 == 0 ? 0 : 64 - bits % 64);
  return (rng() & 1) ? Integer(-v) : v;
}

}  // namespace

TEST(Lattice, ReversibilityOnRandom256BitPoints) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 10000; ++i) {
    Integer p = abs(random_bits(rng, 128)) + 1;
    Integer q = abs(random_bits(rng, 128)) + 1;
    Lambda lam(make_rational(p, q));
    BigPoint z{random_bits(rng, 256), random_bits(rng, 256)};
    auto fz = map_F(z, lam);
    ASSERT_EQ(symmetry_G(map_F(symmetry_G(z), lam)), map_F_inv(z, lam));
    ASSERT_EQ(map_F_inv(fz, lam), z);
  }
}
