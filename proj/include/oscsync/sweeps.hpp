#pragma once

// Robustness studies built from readout maps: pattern counts against input
// coupling, core coupling, noise and detector thresholds, map agreement
// against evaluation time, and the single-input calibration sweep.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oscsync/detectors.hpp"
#include "oscsync/integrator.hpp"
#include "oscsync/network.hpp"
#include "oscsync/readout.hpp"
#include "oscsync/rng.hpp"

namespace oscsync {

enum class SweepParameter { k_ic, k_cc, fwhm, epsilon_v, epsilon_counter, tau };

inline std::string_view parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::k_ic: return "k_ic";
    case SweepParameter::k_cc: return "k_cc";
    case SweepParameter::fwhm: return "fwhm";
    case SweepParameter::epsilon_v: return "epsilon_v";
    case SweepParameter::epsilon_counter: return "epsilon_counter";
    case SweepParameter::tau: return "tau";
  }
  return "?";
}

/// Everything held fixed while one parameter varies.
struct SweepContext {
  PaperTopologySpec topology{};
  SimProtocol protocol{};
  GridSpec grid{{470e6, 670e6, 100}, {470e6, 670e6, 100}};
  Thresholds thresholds{};
  double radius = 3e6;
  std::vector<Scheme> schemes{all_schemes, all_schemes + 3};
  std::uint64_t seed = 42;
  MapRunOptions run{};
};

struct SweepRow {
  double value = 0.0;
  Scheme scheme = Scheme::variance;
  std::size_t pattern_count = 0;
  std::optional<double> matching_pct;  // evaluation-time sweep only
  double inconsistent = 0.0;           // fraction of inconsistent cells
  std::vector<PatternCode> codes;
};

struct SweepResult {
  SweepParameter parameter = SweepParameter::fwhm;
  std::vector<double> values;
  std::vector<SweepRow> rows;

  const SweepRow& at(double value, Scheme s) const {
    for (const auto& r : rows)
      if (r.value == value && r.scheme == s) return r;
    throw std::out_of_range("no sweep row for this value and scheme");
  }
};

/// Seed of the map simulated for the i-th value of a sweep.
inline std::uint64_t sweep_seed(std::uint64_t master, std::size_t index) {
  return derive_id({master, static_cast<std::uint64_t>(index), 0x5357454550ull});
}

inline void validate_sweep_values(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1])) throw std::invalid_argument("sweep values must be strictly increasing");
}

/// Filter and count one classified map.
inline SweepRow count_row(double value, Scheme scheme, const ReadoutMap& map, double radius) {
  const PatternCount c = count_patterns(robust_filter(map, radius));
  return {value, scheme, c.count, std::nullopt, inconsistent_fraction(map), c.codes};
}

namespace detail {

inline void append_counts(SweepResult& out, double value, const RawMap& raw, const SweepContext& ctx) {
  for (Scheme s : ctx.schemes)
    out.rows.push_back(count_row(value, s, classify(raw, ctx.thresholds.spec(s)), ctx.radius));
}

}  // namespace detail

/// Pattern counts against one coupling strength; the other keeps its context
/// value. Each value gets its own map seed, sweep_seed(seed, index).
inline SweepResult sweep_coupling(const SweepContext& ctx, SweepParameter which,
                                  const std::vector<double>& values) {
  if (which != SweepParameter::k_ic && which != SweepParameter::k_cc)
    throw std::invalid_argument("coupling sweep needs k_ic or k_cc");
  validate_sweep_values(values);
  for (double v : values)
    if (!(v >= 0.0)) throw std::invalid_argument("couplings must be non-negative");
  SweepResult out{which, values, {}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    PaperTopologySpec topo = ctx.topology;
    (which == SweepParameter::k_ic ? topo.k_ic : topo.k_cc) = values[i];
    const RawMap raw = simulate_map(build_paper_network(topo), ctx.protocol, ctx.grid,
                                    sweep_seed(ctx.seed, i), ctx.run);
    detail::append_counts(out, values[i], raw, ctx);
  }
  return out;
}

inline SweepResult sweep_noise(const SweepContext& ctx, const std::vector<double>& fwhms) {
  validate_sweep_values(fwhms);
  for (double v : fwhms)
    if (!(v >= 0.0)) throw std::invalid_argument("FWHM must be non-negative");
  SweepResult out{SweepParameter::fwhm, fwhms, {}};
  for (std::size_t i = 0; i < fwhms.size(); ++i) {
    PaperTopologySpec topo = ctx.topology;
    topo.noise_fwhm = fwhms[i];
    const RawMap raw = simulate_map(build_paper_network(topo), ctx.protocol, ctx.grid,
                                    sweep_seed(ctx.seed, i), ctx.run);
    detail::append_counts(out, fwhms[i], raw, ctx);
  }
  return out;
}

/// Pattern counts against detector threshold. Thresholds only act on the raw
/// outputs, so one map simulation (seed sweep_seed(seed, 0)) serves every
/// value. epsilon_v sweeps the variance scheme; epsilon_counter sweeps both
/// counter schemes with a shared threshold.
inline SweepResult sweep_threshold(const SweepContext& ctx, SweepParameter which,
                                   const std::vector<double>& values) {
  if (which != SweepParameter::epsilon_v && which != SweepParameter::epsilon_counter)
    throw std::invalid_argument("threshold sweep needs epsilon_v or epsilon_counter");
  validate_sweep_values(values);
  const std::vector<Scheme> schemes =
      which == SweepParameter::epsilon_v
          ? std::vector<Scheme>{Scheme::variance}
          : std::vector<Scheme>{Scheme::direct_counter, Scheme::flipflop_counter};
  for (double v : values)
    for (Scheme s : schemes) DetectorSpec{s, v}.validate();

  const RawMap raw = simulate_map(build_paper_network(ctx.topology), ctx.protocol, ctx.grid,
                                  sweep_seed(ctx.seed, 0), ctx.run);
  SweepResult out{which, values, {}};
  for (double v : values)
    for (Scheme s : schemes)
      if (std::find(ctx.schemes.begin(), ctx.schemes.end(), s) != ctx.schemes.end())
        out.rows.push_back(count_row(v, s, classify(raw, DetectorSpec{s, v}), ctx.radius));
  return out;
}

/// Counter threshold for window tau: the edge-rate threshold stays at
/// 12 per microsecond, rounded half up, never below 1.
inline double counter_threshold_for(double tau) {
  const double x = 12.0 * tau * 1e6;
  return std::max(1.0, std::floor(x + 0.5 + 1e-9));
}

inline DetectorSpec tau_detector(Scheme s, double tau, const Thresholds& th) {
  if (s == Scheme::variance) return {s, th.variance};
  return {s, counter_threshold_for(tau)};
}

struct TauSweepOptions {
  double reference_tau = 100e-6;
  /// Directory for cached reference simulations; empty disables caching.
  std::filesystem::path cache_dir;
  std::function<void(std::string_view)> log;
};

/// Key of a reference simulation: everything that determines its raw output.
inline std::uint64_t reference_key(const NetworkConfig& net, const SimProtocol& protocol,
                                   const GridSpec& grid, std::uint64_t seed) {
  std::ostringstream s;
  s.precision(17);
  s << digest(net) << ';' << protocol.cooldown << ';' << protocol.tau << ';' << protocol.repetitions
    << ';' << protocol.schmitt.high << ';' << protocol.schmitt.low << ';' << protocol.counter_limit
    << ';' << grid.a.min << ';' << grid.a.max << ';' << grid.a.steps << ';' << grid.b.min << ';'
    << grid.b.max << ';' << grid.b.steps << ';' << seed;
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace detail {

inline void save_raw(const std::filesystem::path& path, const RawMap& raw) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw std::runtime_error("cannot write cache file " + tmp);
    f.precision(17);
    f << raw.raw.size() << '\n';
    for (const PairRaw& r : raw.raw) f << r.variance << ' ' << r.delta << ' ' << r.flips << '\n';
    if (!f) throw std::runtime_error("failed writing cache file " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline bool load_raw(const std::filesystem::path& path, RawMap& raw) {
  std::ifstream f(path);
  if (!f) return false;
  std::size_t n = 0;
  if (!(f >> n) || n != raw.raw.size()) return false;
  for (PairRaw& r : raw.raw)
    if (!(f >> r.variance >> r.delta >> r.flips)) return false;
  return true;
}

}  // namespace detail

/// Reference map simulation at a long window, read from the cache when a
/// matching entry exists.
inline RawMap reference_simulation(const NetworkConfig& net, const SimProtocol& protocol,
                                   const GridSpec& grid, std::uint64_t seed,
                                   const MapRunOptions& run, const TauSweepOptions& opt) {
  std::filesystem::path path;
  if (!opt.cache_dir.empty()) {
    char name[64];
    std::snprintf(name, sizeof name, "reference-%016llx.txt",
                  static_cast<unsigned long long>(reference_key(net, protocol, grid, seed)));
    path = opt.cache_dir / name;
    RawMap cached;
    cached.grid = grid;
    cached.protocol = protocol;
    cached.seed = seed;
    cached.network_digest = digest(net);
    cached.windows = {protocol.tau};
    cached.pairs = pairs_of(net.core_indices());
    cached.raw.resize(grid.cells() * protocol.repetitions * cached.pairs.size());
    if (detail::load_raw(path, cached)) {
      if (opt.log) opt.log("reference map loaded from " + path.string());
      return cached;
    }
  }
  if (opt.log) opt.log("simulating reference map");
  RawMap raw = simulate_map(net, protocol, grid, seed, run);
  if (!path.empty()) detail::save_raw(path, raw);
  return raw;
}

/// Agreement with a long-window reference map, and pattern count, against the
/// evaluation window tau. All windows come from the same runs (cool-down
/// unchanged); the reference uses the same seed, so its runs extend those
/// runs. Counter thresholds follow counter_threshold_for(tau).
inline SweepResult sweep_tau(const SweepContext& ctx, const std::vector<double>& taus,
                             const TauSweepOptions& opt = {}) {
  validate_sweep_values(taus);
  const NetworkConfig net = build_paper_network(ctx.topology);
  for (double t : taus) {
    if (!(t > 0.0)) throw std::invalid_argument("evaluation windows must be positive");
    steps_for(t, net.dt());
  }
  const std::uint64_t seed = sweep_seed(ctx.seed, 0);

  SimProtocol ref_protocol = ctx.protocol;
  ref_protocol.tau = opt.reference_tau;
  const RawMap ref_raw = reference_simulation(net, ref_protocol, ctx.grid, seed, ctx.run, opt);

  SimProtocol protocol = ctx.protocol;
  protocol.tau = taus.back();
  MapRunOptions run = ctx.run;
  run.windows = taus;
  if (opt.log) opt.log("simulating evaluation windows");
  const RawMap raw = simulate_map(net, protocol, ctx.grid, seed, run);

  SweepResult out{SweepParameter::tau, taus, {}};
  for (Scheme s : ctx.schemes) {
    const ReadoutMap reference = classify(ref_raw, tau_detector(s, opt.reference_tau, ctx.thresholds));
    for (double t : taus) {
      const ReadoutMap map = classify(raw, tau_detector(s, t, ctx.thresholds), t);
      SweepRow row = count_row(t, s, map, ctx.radius);
      row.matching_pct = map_match(map, reference);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

/// One point of the single-input calibration sweep.
struct CalibrationPoint {
  double f_input = 0.0;
  std::vector<double> mean_frequencies;  // over the evaluation window, every oscillator
  PairRaw raw;                           // first two cores
};

/// Sweeps the natural frequency of the first input of `topology` and records
/// mean frequencies and the three raw detector outputs of the first two cores
/// over the evaluation window. One run per point from random initial phases.
inline std::vector<CalibrationPoint> calibration_sweep(const PaperTopologySpec& topology,
                                                       const SimProtocol& protocol,
                                                       const std::vector<double>& inputs,
                                                       std::uint64_t seed) {
  if (topology.input_frequencies.empty())
    throw std::invalid_argument("calibration sweep needs an input oscillator");
  const NetworkConfig base = build_paper_network(topology);
  protocol.validate(base.dt());
  const auto cores = base.core_indices();
  const std::size_t input = base.input_indices().front();
  const std::uint64_t skip = steps_for(protocol.cooldown, base.dt());
  const std::uint64_t window = steps_for(protocol.tau, base.dt());

  std::vector<CalibrationPoint> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const NetworkConfig net = base.with_frequencies({{input, inputs[i]}});
    const RngStream rng{seed, repetition_stream(i, 0)};
    const PhaseState init{random_initial_phases(net.size(), rng), 0};
    MeanFrequencyObserver freq(net.size(), net.dt(), skip);
    // the detector sees the state after each step, i.e. samples 1..total
    PairDetectorObserver det(cores[0], cores[1], skip, window, protocol.schmitt);
    PhaseObserver* observers[] = {&freq, &det};
    run(net, protocol.total(), init, rng, observers);
    out.push_back({inputs[i], freq.mean_frequencies(), det.raw()});
  }
  return out;
}

}  // namespace oscsync
