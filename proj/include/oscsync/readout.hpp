#pragma once

// Recognition protocol and readout maps.
//
// Each map cell places the two input oscillators at (f_A, f_B), simulates the
// network `repetitions` times from random initial phases, and thresholds the
// detector output of every core pair. The cell holds the common pattern if all
// repetitions agree and is "inconsistent" otherwise.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oscsync/detectors.hpp"
#include "oscsync/ensemble.hpp"
#include "oscsync/integrator.hpp"
#include "oscsync/network.hpp"
#include "oscsync/parallel.hpp"
#include "oscsync/rng.hpp"

namespace oscsync {

struct SimProtocol {
  double cooldown = 0.5e-6;  // s
  double tau = 0.5e-6;       // evaluation window, s
  std::size_t repetitions = 10;
  SchmittThresholds schmitt{};
  std::int64_t counter_limit = 0;  // 0: counters never saturate

  double total() const { return cooldown + tau; }

  void validate(double dt) const {
    if (!(cooldown >= 0.0)) throw std::invalid_argument("cool-down must be non-negative");
    if (!(tau > 0.0)) throw std::invalid_argument("evaluation window must be positive");
    if (repetitions == 0) throw std::invalid_argument("need at least one repetition");
    if (counter_limit < 0) throw std::invalid_argument("counter limit must be non-negative");
    schmitt.validate();
    steps_for(cooldown, dt);
    steps_for(tau, dt);
  }
};

struct GridAxis {
  double min = 470e6;
  double max = 670e6;
  std::size_t steps = 200;

  double at(std::size_t i) const {
    return steps == 1 ? min : min + (max - min) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  /// Spacing between neighbouring cell centres (infinite for one cell).
  double pitch() const {
    return steps > 1 ? (max - min) / static_cast<double>(steps - 1)
                     : std::numeric_limits<double>::infinity();
  }
  bool operator==(const GridAxis&) const = default;
};

/// Row-major over (a, b): cell index = i_a * b.steps + i_b.
struct GridSpec {
  GridAxis a{};
  GridAxis b{};

  std::size_t cells() const { return a.steps * b.steps; }
  std::pair<std::size_t, std::size_t> coords(std::size_t cell) const {
    return {cell / b.steps, cell % b.steps};
  }
  void validate() const {
    if (a.steps == 0 || b.steps == 0) throw std::invalid_argument("grid axes need >= 1 step");
    if (!(a.min > 0.0) || !(b.min > 0.0) || a.max < a.min || b.max < b.min)
      throw std::invalid_argument("grid axes must span positive frequencies, min <= max");
  }
  bool operator==(const GridSpec&) const = default;
};

/// Bit k set <=> the k-th core pair (lexicographic order) is quasi-synchronized.
struct PatternCode {
  std::uint64_t bits = 0;
  auto operator<=>(const PatternCode&) const = default;
};

struct MapCell {
  double f_a = 0.0;
  double f_b = 0.0;
  std::optional<PatternCode> consensus;  // empty: inconsistent

  /// Serialized form: -1 for inconsistent cells.
  std::int64_t code() const { return consensus ? static_cast<std::int64_t>(consensus->bits) : -1; }
};

struct MapMetadata {
  DetectorSpec detector{};
  SimProtocol protocol{};
  std::uint64_t seed = 0;
  std::uint64_t network_digest = 0;
};

struct ReadoutMap {
  GridSpec grid;
  std::vector<MapCell> cells;
  MapMetadata meta;
};

/// Raw detector outputs for every cell, window, repetition and pair.
struct RawMap {
  GridSpec grid;
  SimProtocol protocol;
  std::uint64_t seed = 0;
  std::uint64_t network_digest = 0;
  std::vector<double> windows;  // evaluation windows (s), one per checkpoint
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<PairRaw> raw;  // [((cell * windows + w) * repetitions + rep) * pairs + p]

  std::size_t repetitions() const { return protocol.repetitions; }
  std::span<const PairRaw> run(std::size_t cell, std::size_t window, std::size_t rep) const {
    const std::size_t P = pairs.size();
    const std::size_t offset = ((cell * windows.size() + window) * repetitions() + rep) * P;
    return {raw.data() + offset, P};
  }
};

/// Stream id of one repetition at one map point.
inline std::uint64_t repetition_stream(std::uint64_t point_id, std::size_t rep) {
  return derive_id({point_id, static_cast<std::uint64_t>(rep)});
}

inline PatternCode pattern_code(std::span<const PairRaw> run, const DetectorSpec& det) {
  if (run.size() > 63) throw std::invalid_argument("too many core pairs for a pattern code");
  PatternCode code;
  for (std::size_t p = 0; p < run.size(); ++p)
    if (det.synchronized(run[p].value(det.scheme))) code.bits |= std::uint64_t{1} << p;
  return code;
}

/// Consensus over repetitions; empty if any repetition disagrees.
inline std::optional<PatternCode> consensus(std::span<const PatternCode> codes) {
  if (codes.empty()) return std::nullopt;
  for (const PatternCode& c : codes)
    if (c != codes.front()) return std::nullopt;
  return codes.front();
}

struct MapRunOptions {
  std::size_t workers = 0;         // 0: hardware concurrency
  std::size_t cells_per_task = 4;  // lanes per ensemble = cells_per_task * repetitions
  /// Extra evaluation windows (s) recorded from the same runs; the protocol's
  /// tau is always included. Used by the evaluation-time sweep.
  std::vector<double> windows;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

namespace detail {

inline std::vector<std::size_t> map_inputs(const NetworkConfig& net) {
  auto inputs = net.input_indices();
  if (inputs.size() < 2) throw std::invalid_argument("readout maps need two input oscillators");
  return inputs;
}

}  // namespace detail

/// Simulates every repetition of every grid cell and keeps raw detector
/// outputs. Bit-identical for a given seed whatever the worker count or task
/// size.
inline RawMap simulate_map(const NetworkConfig& net, const SimProtocol& protocol,
                           const GridSpec& grid, std::uint64_t seed,
                           const MapRunOptions& options = {}) {
  protocol.validate(net.dt());
  grid.validate();
  const auto inputs = detail::map_inputs(net);

  std::vector<double> windows = options.windows;
  windows.push_back(protocol.tau);
  std::sort(windows.begin(), windows.end());
  windows.erase(std::unique(windows.begin(), windows.end()), windows.end());

  EnsembleRequest req;
  req.cooldown_steps = steps_for(protocol.cooldown, net.dt());
  req.schmitt = protocol.schmitt;
  req.counter_limit = protocol.counter_limit;
  for (double w : windows) {
    if (!(w > 0.0)) throw std::invalid_argument("evaluation windows must be positive");
    req.checkpoints.push_back(steps_for(w, net.dt()));
  }

  const auto cores = net.core_indices();
  RawMap out;
  out.grid = grid;
  out.protocol = protocol;
  out.seed = seed;
  out.network_digest = digest(net);
  out.windows = windows;
  out.pairs = pairs_of(cores);

  const std::size_t reps = protocol.repetitions;
  const std::size_t P = out.pairs.size();
  const std::size_t K = windows.size();
  const std::size_t cells = grid.cells();
  const std::size_t per_task = std::max<std::size_t>(1, options.cells_per_task);
  const std::size_t tasks = (cells + per_task - 1) / per_task;
  out.raw.resize(cells * K * reps * P);

  std::mutex progress_mutex;
  std::size_t done = 0;

  parallel_for(tasks, options.workers, [&](std::size_t task) {
    const std::size_t first = task * per_task;
    const std::size_t last = std::min(cells, first + per_task);
    try {
      std::vector<LaneSetup> lanes;
      for (std::size_t cell = first; cell < last; ++cell) {
        const auto [ia, ib] = grid.coords(cell);
        for (std::size_t rep = 0; rep < reps; ++rep)
          lanes.push_back({repetition_stream(cell, rep),
                           {{inputs[0], grid.a.at(ia)}, {inputs[1], grid.b.at(ib)}}});
      }
      const EnsembleResult res = run_ensemble(net, seed, lanes, req);
      for (std::size_t cell = first; cell < last; ++cell)
        for (std::size_t w = 0; w < K; ++w)
          for (std::size_t rep = 0; rep < reps; ++rep) {
            const std::size_t lane = (cell - first) * reps + rep;
            for (std::size_t p = 0; p < P; ++p)
              out.raw[((cell * K + w) * reps + rep) * P + p] = res.at(lane, w, p);
          }
    } catch (const std::exception& e) {
      const auto [ia, ib] = grid.coords(first);
      throw std::runtime_error("map build failed in cells starting at (" + std::to_string(ia) +
                               ", " + std::to_string(ib) + ") f_A=" + std::to_string(grid.a.at(ia)) +
                               " Hz f_B=" + std::to_string(grid.b.at(ib)) + " Hz: " + e.what());
    }
    if (options.progress) {
      std::lock_guard lock(progress_mutex);
      done += last - first;
      options.progress(done, cells);
    }
  });
  return out;
}

inline std::size_t window_index(const RawMap& raw, double tau) {
  for (std::size_t w = 0; w < raw.windows.size(); ++w)
    if (std::abs(raw.windows[w] - tau) <= 1e-9 * std::max(raw.windows[w], tau)) return w;
  throw std::invalid_argument("window " + std::to_string(tau) + " s was not recorded");
}

/// Thresholds the raw outputs of one recorded window.
inline ReadoutMap classify(const RawMap& raw, const DetectorSpec& detector, double tau) {
  detector.validate();
  const std::size_t w = window_index(raw, tau);
  ReadoutMap map;
  map.grid = raw.grid;
  map.meta = {detector, raw.protocol, raw.seed, raw.network_digest};
  map.meta.protocol.tau = raw.windows[w];
  map.cells.resize(raw.grid.cells());
  std::vector<PatternCode> codes(raw.repetitions());
  for (std::size_t cell = 0; cell < map.cells.size(); ++cell) {
    for (std::size_t rep = 0; rep < codes.size(); ++rep)
      codes[rep] = pattern_code(raw.run(cell, w, rep), detector);
    const auto [ia, ib] = raw.grid.coords(cell);
    map.cells[cell] = {raw.grid.a.at(ia), raw.grid.b.at(ib), consensus(codes)};
  }
  return map;
}

inline ReadoutMap classify(const RawMap& raw, const DetectorSpec& detector) {
  return classify(raw, detector, raw.protocol.tau);
}

inline ReadoutMap build_map(const NetworkConfig& net, const SimProtocol& protocol,
                            const DetectorSpec& detector, const GridSpec& grid, std::uint64_t seed,
                            const MapRunOptions& options = {}) {
  detector.validate();
  return classify(simulate_map(net, protocol, grid, seed, options), detector);
}

/// Runs one point with the stream ids a map would use for cell `point_id`.
inline MapCell classify_point(const NetworkConfig& net, const SimProtocol& protocol,
                              const DetectorSpec& detector, std::pair<double, double> point,
                              std::uint64_t seed, std::uint64_t point_id = 0) {
  protocol.validate(net.dt());
  detector.validate();
  const auto inputs = detail::map_inputs(net);
  EnsembleRequest req;
  req.cooldown_steps = steps_for(protocol.cooldown, net.dt());
  req.checkpoints = {steps_for(protocol.tau, net.dt())};
  req.schmitt = protocol.schmitt;
  req.counter_limit = protocol.counter_limit;
  std::vector<LaneSetup> lanes;
  for (std::size_t rep = 0; rep < protocol.repetitions; ++rep)
    lanes.push_back({repetition_stream(point_id, rep),
                     {{inputs[0], point.first}, {inputs[1], point.second}}});
  const EnsembleResult res = run_ensemble(net, seed, lanes, req);
  std::vector<PatternCode> codes;
  for (std::size_t rep = 0; rep < protocol.repetitions; ++rep) {
    std::vector<PairRaw> run(res.pairs.size());
    for (std::size_t p = 0; p < run.size(); ++p) run[p] = res.at(rep, 0, p);
    codes.push_back(pattern_code(run, detector));
  }
  return {point.first, point.second, consensus(codes)};
}

struct FilteredMap {
  ReadoutMap map;
  std::vector<std::uint8_t> kept;  // one flag per cell
  double radius = 0.0;
  bool degenerate = false;  // radius below grid pitch: nothing but consistency checked
};

/// Keeps a cell iff every cell centre within `radius` (Euclidean, Hz, disk
/// clipped at the map edge) is consistent and carries the same pattern.
inline FilteredMap robust_filter(const ReadoutMap& map, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("filter radius must be non-negative");
  const GridSpec& g = map.grid;
  const double pa = g.a.pitch(), pb = g.b.pitch();
  const double r2 = radius * radius * (1.0 + 1e-9);

  std::vector<std::pair<long, long>> offsets;
  const long ra = std::isfinite(pa) ? static_cast<long>(std::floor(radius / pa)) : 0;
  const long rb = std::isfinite(pb) ? static_cast<long>(std::floor(radius / pb)) : 0;
  for (long di = -ra; di <= ra; ++di)
    for (long dj = -rb; dj <= rb; ++dj) {
      if (di == 0 && dj == 0) continue;
      const double da = di == 0 ? 0.0 : di * pa;
      const double db = dj == 0 ? 0.0 : dj * pb;
      if (da * da + db * db <= r2) offsets.emplace_back(di, dj);
    }

  FilteredMap out{map, std::vector<std::uint8_t>(map.cells.size(), 0), radius, offsets.empty()};
  const long na = static_cast<long>(g.a.steps), nb = static_cast<long>(g.b.steps);
  for (long i = 0; i < na; ++i)
    for (long j = 0; j < nb; ++j) {
      const MapCell& cell = map.cells[static_cast<std::size_t>(i * nb + j)];
      if (!cell.consensus) continue;
      bool keep = true;
      for (const auto& [di, dj] : offsets) {
        const long ii = i + di, jj = j + dj;
        if (ii < 0 || jj < 0 || ii >= na || jj >= nb) continue;
        const MapCell& other = map.cells[static_cast<std::size_t>(ii * nb + jj)];
        if (other.consensus != cell.consensus) {
          keep = false;
          break;
        }
      }
      out.kept[static_cast<std::size_t>(i * nb + j)] = keep ? 1 : 0;
    }
  return out;
}

struct PatternCount {
  std::size_t count = 0;
  std::vector<PatternCode> codes;  // ascending
};

inline PatternCount count_patterns(const FilteredMap& filtered) {
  std::vector<PatternCode> codes;
  for (std::size_t i = 0; i < filtered.map.cells.size(); ++i)
    if (filtered.kept[i] && filtered.map.cells[i].consensus)
      codes.push_back(*filtered.map.cells[i].consensus);
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  return {codes.size(), codes};
}

/// Percentage of cells with equal consensus. Cells inconsistent in both maps
/// count as matches unless `count_joint_inconsistent` is false, in which case
/// they are left out of the comparison entirely.
inline double map_match(const ReadoutMap& a, const ReadoutMap& b, bool count_joint_inconsistent = true) {
  if (!(a.grid == b.grid) || a.cells.size() != b.cells.size())
    throw std::invalid_argument("maps are defined on different grids");
  std::size_t compared = 0, equal = 0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const bool both_inconsistent = !a.cells[i].consensus && !b.cells[i].consensus;
    if (both_inconsistent && !count_joint_inconsistent) continue;
    ++compared;
    if (a.cells[i].consensus == b.cells[i].consensus) ++equal;
  }
  if (compared == 0) return 100.0;
  return 100.0 * static_cast<double>(equal) / static_cast<double>(compared);
}

inline double inconsistent_fraction(const ReadoutMap& map) {
  if (map.cells.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& c : map.cells) n += c.consensus ? 0 : 1;
  return static_cast<double>(n) / static_cast<double>(map.cells.size());
}

}  // namespace oscsync
