#pragma once

// Many independent runs of one network advanced in lockstep, with the three
// pair detectors fused into the step loop.
//
// Every lane reproduces exactly what run() plus a PairDetectorObserver per
// core pair would compute for the same stream, but with all per-lane loops
// vectorized. Detector state is kept in doubles (edge and slip counts are
// exact integers far below 2^53) so the loops stay in one register type.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "oscsync/detectors.hpp"
#include "oscsync/integrator.hpp"
#include "oscsync/network.hpp"
#include "oscsync/rng.hpp"

namespace oscsync {

/// Lexicographic pairs over the given (sorted) oscillator indices.
inline std::vector<std::pair<std::size_t, std::size_t>> pairs_of(std::span<const std::size_t> idx) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) out.emplace_back(idx[a], idx[b]);
  return out;
}

struct LaneSetup {
  std::uint64_t stream_id = 0;
  std::vector<std::pair<std::size_t, double>> frequencies;  // overrides (osc index, Hz)
};

struct EnsembleRequest {
  std::uint64_t cooldown_steps = 0;
  /// Window lengths (steps) at which raw outputs are recorded; strictly
  /// increasing. A window of w steps covers the states cooldown+1 .. cooldown+w.
  std::vector<std::uint64_t> checkpoints;
  SchmittThresholds schmitt{};
  /// Saturation level for both counters; 0 means unbounded.
  std::int64_t counter_limit = 0;
};

/// Raw detector outputs, indexed [(lane * checkpoints + c) * pairs + p].
struct EnsembleResult {
  std::size_t lanes = 0;
  std::size_t checkpoints = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<PairRaw> raw;

  const PairRaw& at(std::size_t lane, std::size_t checkpoint, std::size_t pair) const {
    return raw[(lane * checkpoints + checkpoint) * pairs.size() + pair];
  }
};

namespace detail {

/// One step of the fused pair detectors over all lanes.
template <bool Saturate>
inline void pair_update(std::size_t L, const double* __restrict sa, const double* __restrict ca,
                        const double* __restrict sb, const double* __restrict cb,
                        const double* __restrict ra, const double* __restrict rb,
                        const double* __restrict sh, double* __restrict s1, double* __restrict s2,
                        double* __restrict dn, double* __restrict ff, double* __restrict ls,
                        double limit) {
  for (std::size_t r = 0; r < L; ++r) {
    const double d = pair_signal(sa[r], ca[r], sb[r], cb[r]) - sh[r];
    s1[r] += d;
    s2[r] += d * d;
    // same-step edges: lower oscillator index first
    double f = ff[r];
    double l = ls[r];
    f += (ra[r] == 1.0 && l == 0.0) ? 1.0 : 0.0;
    l = ra[r] == 1.0 ? 0.0 : l;
    f += (rb[r] == 1.0 && l == 1.0) ? 1.0 : 0.0;
    l = rb[r] == 1.0 ? 1.0 : l;
    double dd = dn[r] + ra[r] - rb[r];
    if constexpr (Saturate) {
      dd = std::clamp(dd, -limit, limit);
      f = std::min(f, limit);
    }
    dn[r] = dd;
    ff[r] = f;
    ls[r] = l;
  }
}

}  // namespace detail

inline EnsembleResult run_ensemble(const NetworkConfig& net, std::uint64_t master_seed,
                                   std::span<const LaneSetup> lanes, const EnsembleRequest& req) {
  if (lanes.empty()) throw std::invalid_argument("ensemble needs at least one lane");
  if (req.checkpoints.empty()) throw std::invalid_argument("ensemble needs a checkpoint");
  if (req.checkpoints.front() == 0) throw std::invalid_argument("empty evaluation window");
  for (std::size_t i = 1; i < req.checkpoints.size(); ++i)
    if (req.checkpoints[i] <= req.checkpoints[i - 1])
      throw std::invalid_argument("checkpoints must be strictly increasing");
  req.schmitt.validate();

  const std::size_t L = lanes.size();
  const std::size_t N = net.size();
  const std::vector<std::size_t> cores = net.core_indices();
  const std::size_t C = cores.size();
  const auto pairs = pairs_of(cores);
  const std::size_t P = pairs.size();
  const std::size_t K = req.checkpoints.size();

  LaneIntegrator engine(net, L, master_seed);
  for (std::size_t r = 0; r < L; ++r) {
    engine.set_stream(r, lanes[r].stream_id);
    for (const auto& [osc, f] : lanes[r].frequencies) {
      if (osc >= N || !(f > 0.0)) throw std::invalid_argument("bad frequency override");
      engine.set_frequency(r, osc, f, net.dt());
    }
    const auto init = random_initial_phases(N, RngStream{master_seed, lanes[r].stream_id});
    for (std::size_t o = 0; o < N; ++o) engine.phase(r, o) = init[o];
  }

  // detector state, core-major / pair-major, lane-minor
  std::vector<double> level(C * L, 0.0), rise(C * L, 0.0);
  std::vector<double> shift(P * L, 0.0), sum(P * L, 0.0), sum_sq(P * L, 0.0);
  std::vector<double> delta(P * L, 0.0), flips(P * L, 0.0), last(P * L, -1.0);
  std::vector<std::size_t> core_slot(N, 0);
  for (std::size_t c = 0; c < C; ++c) core_slot[cores[c]] = c;

  EnsembleResult result{L, K, pairs, std::vector<PairRaw>(L * K * P)};

  const double hi = req.schmitt.high;
  const double lo = req.schmitt.low;
  const double limit = static_cast<double>(req.counter_limit);
  const bool saturate = req.counter_limit > 0;
  const std::uint64_t cool = req.cooldown_steps;
  const std::uint64_t total = cool + req.checkpoints.back();
  std::size_t next_checkpoint = 0;

  const std::span<const double> sin_all = engine.sin_values();
  const std::span<const double> cos_all = engine.cos_values();

  for (std::uint64_t k = 0; k <= total; ++k) {
    engine.evaluate_signals();
    if (k > cool) {
      const std::uint64_t used = k - cool;  // samples including this one
      const bool first = used == 1;

      for (std::size_t c = 0; c < C; ++c) {
        const double* __restrict s = sin_all.data() + cores[c] * L;
        double* __restrict lv = level.data() + c * L;
        double* __restrict up = rise.data() + c * L;
        if (first) {
          for (std::size_t r = 0; r < L; ++r) {
            lv[r] = s[r] > hi ? 1.0 : 0.0;
            up[r] = 0.0;
          }
        } else {
          for (std::size_t r = 0; r < L; ++r) {
            const bool rising = lv[r] == 0.0 && s[r] > hi;
            const bool falling = lv[r] == 1.0 && s[r] < lo;
            up[r] = rising ? 1.0 : 0.0;
            lv[r] = rising ? 1.0 : (falling ? 0.0 : lv[r]);
          }
        }
      }

      for (std::size_t p = 0; p < P; ++p) {
        const std::size_t a = pairs[p].first, b = pairs[p].second;
        const double* __restrict sa = sin_all.data() + a * L;
        const double* __restrict ca = cos_all.data() + a * L;
        const double* __restrict sb = sin_all.data() + b * L;
        const double* __restrict cb = cos_all.data() + b * L;
        const double* __restrict ra = rise.data() + core_slot[a] * L;
        const double* __restrict rb = rise.data() + core_slot[b] * L;
        double* __restrict sh = shift.data() + p * L;
        double* __restrict s1 = sum.data() + p * L;
        double* __restrict s2 = sum_sq.data() + p * L;
        double* __restrict dn = delta.data() + p * L;
        double* __restrict ff = flips.data() + p * L;
        double* __restrict ls = last.data() + p * L;
        if (first) {
          for (std::size_t r = 0; r < L; ++r) sh[r] = pair_signal(sa[r], ca[r], sb[r], cb[r]);
        }
        if (saturate)
          detail::pair_update<true>(L, sa, ca, sb, cb, ra, rb, sh, s1, s2, dn, ff, ls, limit);
        else
          detail::pair_update<false>(L, sa, ca, sb, cb, ra, rb, sh, s1, s2, dn, ff, ls, limit);
      }

      if (used == req.checkpoints[next_checkpoint]) {
        const double n = static_cast<double>(used);
        for (std::size_t r = 0; r < L; ++r)
          for (std::size_t p = 0; p < P; ++p) {
            PairRaw& out = result.raw[(r * K + next_checkpoint) * P + p];
            out.variance = VarianceAccumulator::finish(sum[p * L + r], sum_sq[p * L + r], n);
            out.delta = static_cast<std::int64_t>(delta[p * L + r]);
            out.flips = static_cast<std::int64_t>(flips[p * L + r]);
          }
        ++next_checkpoint;
      }
    }
    if (k < total) engine.advance(k);
  }
  return result;
}

}  // namespace oscsync
