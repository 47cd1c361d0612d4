#pragma once

// Pairwise quasi-synchronization detectors.
//
// variance:  Var over the window of sin(phi_n - phi_m), sampled every step.
// direct:    |#rising edges of n - #rising edges of m| over the window.
// flip-flop: number of times two consecutive rising edges in the merged edge
//            stream come from the same oscillator.
//
// The counter schemes see the oscillators only through a Schmitt trigger on
// sin(phi) followed by rising-edge detection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oscsync/fastmath.hpp"
#include "oscsync/integrator.hpp"

namespace oscsync {

enum class Scheme { variance, direct_counter, flipflop_counter };

inline constexpr Scheme all_schemes[] = {Scheme::variance, Scheme::direct_counter,
                                         Scheme::flipflop_counter};

inline std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::variance: return "variance";
    case Scheme::direct_counter: return "direct";
    case Scheme::flipflop_counter: return "flipflop";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view name) {
  if (name == "variance") return Scheme::variance;
  if (name == "direct" || name == "direct_counter") return Scheme::direct_counter;
  if (name == "flipflop" || name == "flip-flop" || name == "flipflop_counter")
    return Scheme::flipflop_counter;
  throw std::invalid_argument("unknown detector scheme '" + std::string(name) + "'");
}

struct SchmittThresholds {
  double high = 0.5;
  double low = -0.5;

  void validate() const {
    if (!(low < high) || !(low > -1.0) || !(high < 1.0))
      throw std::invalid_argument("Schmitt thresholds need -1 < low < high < 1");
  }
};

/// Comparator with hysteresis. The first sample only sets the level.
class SchmittTrigger {
 public:
  explicit SchmittTrigger(SchmittThresholds t = {}) : t_(t) { t_.validate(); }

  /// Feeds one sample; returns true on a low -> high transition.
  bool update(double x) {
    if (!started_) {
      started_ = true;
      level_ = x > t_.high;
      return false;
    }
    if (!level_ && x > t_.high) {
      level_ = true;
      return true;
    }
    if (level_ && x < t_.low) level_ = false;
    return false;
  }

  bool level() const { return level_; }

 private:
  SchmittThresholds t_;
  bool started_ = false;
  bool level_ = false;
};

/// One-pass variance (population normalization) with the first sample as
/// shift, so a constant stream yields exactly zero.
class VarianceAccumulator {
 public:
  void add(double x) {
    if (n_ == 0) shift_ = x;
    const double d = x - shift_;
    sum_ += d;
    sum_sq_ += d * d;
    ++n_;
  }

  std::uint64_t count() const { return n_; }

  double variance() const {
    if (n_ == 0) throw std::logic_error("variance of an empty window");
    return finish(sum_, sum_sq_, static_cast<double>(n_));
  }

  /// Variance from shifted sums; shared with the lockstep ensemble.
  static double finish(double sum, double sum_sq, double n) {
    const double v = (sum_sq - sum * sum / n) / n;
    return v < 0.0 ? 0.0 : v;
  }

 private:
  double shift_ = 0.0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
  std::uint64_t n_ = 0;
};

/// Alternation violations in a merged edge stream. Edges of the same step
/// must be fed lower oscillator index first.
class FlipFlopCounter {
 public:
  void on_edge(int source) {
    if (source == last_) ++count_;
    last_ = source;
  }
  std::int64_t count() const { return count_; }

 private:
  int last_ = -1;
  std::int64_t count_ = 0;
};

/// Which scheme plus its threshold. Variance thresholds live in [0, 0.5];
/// counter thresholds are non-negative integers.
struct DetectorSpec {
  Scheme scheme = Scheme::variance;
  double threshold = 0.28;

  void validate() const {
    if (scheme == Scheme::variance) {
      if (!(threshold >= 0.0 && threshold <= 0.5))
        throw std::invalid_argument("variance threshold must lie in [0, 0.5]");
    } else if (!(threshold >= 0.0) || threshold != std::floor(threshold)) {
      throw std::invalid_argument("counter thresholds must be non-negative integers");
    }
  }

  /// Strict comparison for all three schemes.
  bool synchronized(double raw) const { return raw < threshold; }
};

/// Default thresholds, calibrated on the two-core reduced system.
struct Thresholds {
  double variance = 0.28;
  double direct = 6;
  double flipflop = 6;

  DetectorSpec spec(Scheme s) const {
    switch (s) {
      case Scheme::variance: return {s, variance};
      case Scheme::direct_counter: return {s, direct};
      case Scheme::flipflop_counter: return {s, flipflop};
    }
    return {};
  }
};

/// Raw outputs of all three schemes for one pair over one window.
struct PairRaw {
  double variance = 0.0;
  std::int64_t delta = 0;  // signed: edges(n) - edges(m)
  std::int64_t flips = 0;

  double value(Scheme s) const {
    switch (s) {
      case Scheme::variance: return variance;
      case Scheme::direct_counter: return static_cast<double>(delta < 0 ? -delta : delta);
      case Scheme::flipflop_counter: return static_cast<double>(flips);
    }
    return 0.0;
  }
  bool operator==(const PairRaw&) const = default;
};

struct PairReadout {
  std::pair<std::size_t, std::size_t> pair;
  double raw_value = 0.0;
  bool synchronized = false;
};

inline PairReadout make_readout(std::pair<std::size_t, std::size_t> pair, const PairRaw& raw,
                                const DetectorSpec& spec) {
  const double v = raw.value(spec.scheme);
  return {pair, v, spec.synchronized(v)};
}

/// sin(phi_n - phi_m) from precomputed sines and cosines.
inline double pair_signal(double sin_n, double cos_n, double sin_m, double cos_m) {
  return sin_n * cos_m - cos_n * sin_m;
}

// Batch forms over recorded samples.

inline double window_variance(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("empty evaluation window");
  VarianceAccumulator acc;
  for (double x : samples) acc.add(x);
  return acc.variance();
}

/// Sample indices at which the Schmitt output goes high.
inline std::vector<std::size_t> rising_edges(std::span<const double> signal,
                                             SchmittThresholds t = {}) {
  SchmittTrigger trig(t);
  std::vector<std::size_t> edges;
  for (std::size_t i = 0; i < signal.size(); ++i)
    if (trig.update(signal[i])) edges.push_back(i);
  return edges;
}

/// Signed edge-count difference n - m.
inline std::int64_t direct_count(std::span<const std::size_t> edges_n,
                                 std::span<const std::size_t> edges_m) {
  return static_cast<std::int64_t>(edges_n.size()) - static_cast<std::int64_t>(edges_m.size());
}

/// Alternation violations; on equal sample indices `edges_first` goes first.
inline std::int64_t flipflop_count(std::span<const std::size_t> edges_first,
                                   std::span<const std::size_t> edges_second) {
  FlipFlopCounter ff;
  std::size_t i = 0, j = 0;
  while (i < edges_first.size() || j < edges_second.size()) {
    if (j == edges_second.size() || (i < edges_first.size() && edges_first[i] <= edges_second[j])) {
      ff.on_edge(0);
      ++i;
    } else {
      ff.on_edge(1);
      ++j;
    }
  }
  return ff.count();
}

/// Streams all three detectors for one oscillator pair out of run(). The
/// first `skip_steps` observed states are the cool-down; the next
/// `window_steps` states form the evaluation window.
class PairDetectorObserver : public PhaseObserver {
 public:
  PairDetectorObserver(std::size_t n, std::size_t m, std::uint64_t skip_steps,
                       std::uint64_t window_steps, SchmittThresholds t = {})
      : n_(std::min(n, m)), m_(std::max(n, m)), skip_(skip_steps), window_(window_steps),
        trig_n_(t), trig_m_(t) {
    if (n == m) throw std::invalid_argument("pair needs two distinct oscillators");
    if (window_steps == 0) throw std::invalid_argument("empty evaluation window");
  }

  void observe(double, std::span<const double> phases, std::span<const double>) override {
    if (seen_++ < skip_ || used_ >= window_) return;
    ++used_;
    double sn, cn, sm, cm;
    fast_sincos(phases[n_], sn, cn);
    fast_sincos(phases[m_], sm, cm);
    var_.add(pair_signal(sn, cn, sm, cm));
    if (trig_n_.update(sn)) {
      ++edges_n_;
      ff_.on_edge(0);
    }
    if (trig_m_.update(sm)) {
      ++edges_m_;
      ff_.on_edge(1);
    }
  }

  bool complete() const { return used_ == window_; }

  PairRaw raw() const {
    if (used_ == 0) throw std::logic_error("no samples in the evaluation window");
    return {var_.variance(), edges_n_ - edges_m_, ff_.count()};
  }

  std::int64_t edges_n() const { return edges_n_; }
  std::int64_t edges_m() const { return edges_m_; }
  std::pair<std::size_t, std::size_t> pair() const { return {n_, m_}; }

 private:
  std::size_t n_, m_;
  std::uint64_t skip_, window_;
  std::uint64_t seen_ = 0, used_ = 0;
  SchmittTrigger trig_n_, trig_m_;
  VarianceAccumulator var_;
  FlipFlopCounter ff_;
  std::int64_t edges_n_ = 0, edges_m_ = 0;
};

}  // namespace oscsync
