#pragma once

// Counter-based random streams.
//
// Every variate is a pure function of (master seed, stream id, step, slot),
// computed with Philox4x32-10. Runs therefore reproduce bit-exactly no matter
// how they are scheduled across workers, and a run truncated after k steps sees
// exactly the same noise as the first k steps of a longer run.

#include <array>
#include <cstdint>
#include <initializer_list>

#include "oscsync/fastmath.hpp"

namespace oscsync {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t m0 = 0xD2511F53u;
  constexpr std::uint32_t m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u;
  constexpr std::uint32_t w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += w0;
    key[1] += w1;
  }
  return ctr;
}

/// SplitMix64 finalizer; used to derive stream ids and sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Order-sensitive hash of a list of integers (grid index, repetition, ...).
constexpr std::uint64_t derive_id(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC908ull;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

/// Variate families drawn from one stream; kept disjoint in the counter.
enum class Draw : std::uint32_t { noise = 0, initial_phase = 1 };

/// Uniform on (0, 1) with 52 random bits; every value is exact, the largest
/// is 1 - 2^-53.
inline double uniform_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi >> 6} << 26) | (lo >> 6);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  PhiloxKey key() const {
    return {static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)};
  }

  /// Raw block for (family, step, slot). step < 2^44, slot < 2^16.
  PhiloxCounter block(Draw family, std::uint64_t step, std::uint32_t slot) const {
    const PhiloxCounter ctr = {
        static_cast<std::uint32_t>(step),
        (slot & 0xFFFFu) | (static_cast<std::uint32_t>(family) << 16) |
            (static_cast<std::uint32_t>(step >> 32) << 20),
        static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
    return philox4x32_10(ctr, key());
  }

  /// Two independent standard normals (Box-Muller) for (step, slot).
  void normal_pair(std::uint64_t step, std::uint32_t slot, double& z0, double& z1) const {
    const PhiloxCounter r = block(Draw::noise, step, slot);
    const double u1 = uniform_open(r[0], r[1]);
    const double u2 = uniform_open(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * fast_log(u1));
    double s, c;
    fast_sincos(two_pi * u2, s, c);
    z0 = radius * c;
    z1 = radius * s;
  }

  double uniform(Draw family, std::uint64_t step, std::uint32_t slot) const {
    const PhiloxCounter r = block(family, step, slot);
    return uniform_open(r[0], r[1]);
  }
};

}  // namespace oscsync
