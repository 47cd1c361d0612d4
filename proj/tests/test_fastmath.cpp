#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oscsync/fastmath.hpp"

using namespace oscsync;

TEST(FastMath, SinCosMatchLibmAcrossPhaseRange) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> angle(-4.0 * two_pi, 4.0 * two_pi);
  for (int i = 0; i < 200000; ++i) {
    const double x = angle(gen);
    double s, c;
    fast_sincos(x, s, c);
    EXPECT_NEAR(s, std::sin(x), 4e-16) << x;
    EXPECT_NEAR(c, std::cos(x), 4e-16) << x;
  }
}

TEST(FastMath, SinCosExactAtQuadrantPoints) {
  double s, c;
  fast_sincos(0.0, s, c);
  EXPECT_EQ(s, 0.0);
  EXPECT_EQ(c, 1.0);
  fast_sincos(std::numbers::pi / 2, s, c);
  EXPECT_EQ(s, 1.0);
  EXPECT_NEAR(c, 0.0, 1e-16);
  fast_sincos(std::numbers::pi, s, c);
  EXPECT_NEAR(s, 0.0, 1e-15);
  EXPECT_EQ(c, -1.0);
}

TEST(FastMath, LogMatchesLibm) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> mant(0.0, 1.0);
  for (int i = 0; i < 200000; ++i) {
    const double x = std::ldexp(0.5 + mant(gen), static_cast<int>(gen() % 2000) - 1000);
    const double ref = std::log(x);
    const double ulp = std::nextafter(std::abs(ref), INFINITY) - std::abs(ref);
    EXPECT_LE(std::abs(fast_log(x) - ref), ulp) << x;
  }
  EXPECT_EQ(fast_log(1.0), 0.0);
}

TEST(FastMath, WrapPhaseLandsInHalfOpenInterval) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> phi(-two_pi, 2.0 * two_pi);
  for (int i = 0; i < 100000; ++i) {
    const double x = phi(gen);
    const double w = wrap_phase(x);
    ASSERT_GE(w, 0.0);
    ASSERT_LT(w, two_pi);
    EXPECT_NEAR(std::remainder(w - x, two_pi), 0.0, 1e-14);
  }
  EXPECT_EQ(wrap_phase(two_pi), 0.0);
  EXPECT_LT(wrap_phase(std::nextafter(two_pi, 0.0)), two_pi);
  EXPECT_GE(wrap_phase(-1e-300), 0.0);
  EXPECT_LT(wrap_phase(-1e-300), two_pi);
}
