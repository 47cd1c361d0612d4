#pragma once

// Branch-free elementary functions used in the inner integration loops.
//
// They are written with plain arithmetic and bit operations only, so that a
// loop calling them auto-vectorizes and every lane produces the same IEEE
// result as the scalar path (build with -ffp-contract=off). The coefficient
// sets are the fdlibm kernels.

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace oscsync {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

namespace detail {

inline constexpr double pio2_hi = 1.57079632673412561417e+00;
inline constexpr double pio2_lo = 6.07710050650619224932e-11;
inline constexpr double pio2_lo2 = 2.02226624879595063154e-21;
inline constexpr double two_over_pi = 6.36619772367581382433e-01;

inline double sin_kernel(double x) {
  constexpr double s1 = -1.66666666666666324348e-01;
  constexpr double s2 = 8.33333333332248946124e-03;
  constexpr double s3 = -1.98412698298579493134e-04;
  constexpr double s4 = 2.75573137070700676789e-06;
  constexpr double s5 = -2.50507602534068634195e-08;
  constexpr double s6 = 1.58969099521155010221e-10;
  const double z = x * x;
  const double r = s2 + z * (s3 + z * (s4 + z * (s5 + z * s6)));
  return x + (x * z) * (s1 + z * r);
}

inline double cos_kernel(double x) {
  constexpr double c1 = 4.16666666666666019037e-02;
  constexpr double c2 = -1.38888888888741095749e-03;
  constexpr double c3 = 2.48015872894767294178e-05;
  constexpr double c4 = -2.75573143513906633035e-07;
  constexpr double c5 = 2.08757232129817482790e-09;
  constexpr double c6 = -1.13596475577881948265e-11;
  const double z = x * x;
  const double r = z * (c1 + z * (c2 + z * (c3 + z * (c4 + z * (c5 + z * c6)))));
  const double hz = 0.5 * z;
  const double w = 1.0 - hz;
  return w + (((1.0 - w) - hz) + z * r);
}

}  // namespace detail

/// sin and cos of an angle of moderate magnitude (|x| < ~1e5 rad keeps the
/// three-part Cody-Waite reduction accurate to a few ulp).
inline void fast_sincos(double x, double& s, double& c) {
  const double q = std::floor(x * detail::two_over_pi + 0.5);
  const double r = ((x - q * detail::pio2_hi) - q * detail::pio2_lo) - q * detail::pio2_lo2;
  const double ks = detail::sin_kernel(r);
  const double kc = detail::cos_kernel(r);
  // quadrant = q mod 4, computed in floating point to stay vectorizable
  const double quadrant = q - 4.0 * std::floor(q * 0.25);
  const bool odd = quadrant == 1.0 || quadrant == 3.0;
  const double sin_mag = odd ? kc : ks;
  const double cos_mag = odd ? ks : kc;
  s = quadrant >= 2.0 ? -sin_mag : sin_mag;
  c = (quadrant == 1.0 || quadrant == 2.0) ? -cos_mag : cos_mag;
}

/// Natural logarithm for finite, positive, normal arguments.
inline double fast_log(double x) {
  constexpr double ln2_hi = 6.93147180369123816490e-01;
  constexpr double ln2_lo = 1.90821492927058770002e-10;
  constexpr double lg1 = 6.666666666666735130e-01;
  constexpr double lg2 = 3.999999999940941908e-01;
  constexpr double lg3 = 2.857142874366239149e-01;
  constexpr double lg4 = 2.222219843214978396e-01;
  constexpr double lg5 = 1.818357216161805012e-01;
  constexpr double lg6 = 1.531383769920937332e-01;
  constexpr double lg7 = 1.479819860511658591e-01;
  constexpr std::uint64_t mantissa_mask = 0x000FFFFFFFFFFFFFull;
  constexpr std::uint64_t one_bits = 0x3FF0000000000000ull;
  constexpr double sqrt2 = 1.41421356237309504880;

  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  // exponent as a double without an int64 -> double conversion
  const double biased =
      std::bit_cast<double>((bits >> 52) | 0x4330000000000000ull) - 4503599627370496.0;
  double m = std::bit_cast<double>((bits & mantissa_mask) | one_bits);
  double k = biased - 1023.0;
  const bool high = m > sqrt2;
  m = high ? 0.5 * m : m;
  k = high ? k + 1.0 : k;

  const double f = m - 1.0;
  const double s = f / (2.0 + f);
  const double z = s * s;
  const double w = z * z;
  const double t1 = w * (lg2 + w * (lg4 + w * lg6));
  const double t2 = z * (lg1 + w * (lg3 + w * (lg5 + w * lg7)));
  const double r = t2 + t1;
  const double hfsq = 0.5 * f * f;
  return k * ln2_hi - ((hfsq - (s * (hfsq + r) + k * ln2_lo)) - f);
}

/// Maps a phase that drifted at most one turn out of [0, 2pi) back into it.
inline double wrap_phase(double phi) {
  double w = phi - two_pi * std::floor(phi * (1.0 / two_pi));
  w = w < 0.0 ? w + two_pi : w;
  return w >= two_pi ? 0.0 : w;
}

}  // namespace oscsync
