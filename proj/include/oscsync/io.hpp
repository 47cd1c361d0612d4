#pragma once

// CSV outputs, map CSV reader and JSON (de)serialization of configurations.
// Floats are written with 17 significant digits so every value round-trips.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "oscsync/detectors.hpp"
#include "oscsync/integrator.hpp"
#include "oscsync/network.hpp"
#include "oscsync/readout.hpp"
#include "oscsync/sweeps.hpp"

namespace oscsync {

inline constexpr int manifest_schema_version = 1;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- CSV -------------------------------------------------------------------

/// Writes `t_s,phi_0..phi_{N-1},sin_0..sin_{N-1}` every `stride` steps.
class TraceRecorder : public PhaseObserver {
 public:
  TraceRecorder(std::ostream& out, std::size_t n, std::uint64_t stride = 1)
      : out_(out), n_(n), stride_(stride) {
    if (stride == 0) throw std::invalid_argument("trace stride must be positive");
    out_ << "t_s";
    for (std::size_t i = 0; i < n; ++i) out_ << ",phi_" << i;
    for (std::size_t i = 0; i < n; ++i) out_ << ",sin_" << i;
    out_ << '\n';
  }

  /// Records the initial state as the t = 0 row.
  void record(double t, std::span<const double> phases) {
    if (phases.size() != n_) throw std::invalid_argument("trace width mismatch");
    out_ << format_double(t);
    for (double p : phases) out_ << ',' << format_double(p);
    for (double p : phases) {
      double s, c;
      fast_sincos(p, s, c);
      out_ << ',' << format_double(s);
    }
    out_ << '\n';
  }

  void observe(double t, std::span<const double> phases, std::span<const double>) override {
    if (++count_ % stride_ == 0) record(t, phases);
  }

 private:
  std::ostream& out_;
  std::size_t n_;
  std::uint64_t stride_;
  std::uint64_t count_ = 0;
};

inline void write_calibration_csv(std::ostream& out, const std::vector<CalibrationPoint>& points) {
  out << "fA_Hz,meanf_1,meanf_2,meanf_A,var_raw,direct_raw,flipflop_raw\n";
  for (const auto& p : points) {
    const std::size_t input = p.mean_frequencies.size() - 1;
    out << format_double(p.f_input) << ',' << format_double(p.mean_frequencies[0]) << ','
        << format_double(p.mean_frequencies[1]) << ',' << format_double(p.mean_frequencies[input])
        << ',' << format_double(p.raw.variance) << ','
        << format_double(p.raw.value(Scheme::direct_counter)) << ',' << p.raw.flips << '\n';
  }
}

/// `fA_Hz,fB_Hz,pattern_code,kept`; inconsistent cells have code -1.
inline void write_map_csv(std::ostream& out, const FilteredMap& f) {
  out << "fA_Hz,fB_Hz,pattern_code,kept\n";
  for (std::size_t i = 0; i < f.map.cells.size(); ++i) {
    const MapCell& c = f.map.cells[i];
    out << format_double(c.f_a) << ',' << format_double(c.f_b) << ',' << c.code() << ','
        << static_cast<int>(f.kept[i]) << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream s(line);
  while (std::getline(s, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline GridAxis infer_axis(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return {values.front(), values.back(), values.size()};
}

}  // namespace detail

/// Reads a map CSV back. The grid is inferred from the distinct coordinates;
/// rows must be in row-major order over that grid. The `kept` column is
/// ignored (filters are recomputed from the codes).
inline ReadoutMap read_map_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("map CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "fA_Hz" || header[1] != "fB_Hz" || header[2] != "pattern_code")
    throw std::runtime_error("map CSV header must start with fA_Hz,fB_Hz,pattern_code");

  std::vector<double> fa, fb;
  std::vector<long long> codes;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() < 3) throw std::runtime_error("map CSV row " + std::to_string(row) + " is short");
    try {
      std::size_t used = 0;
      fa.push_back(std::stod(f[0]));
      fb.push_back(std::stod(f[1]));
      codes.push_back(std::stoll(f[2], &used));
      if (used != f[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::runtime_error("map CSV row " + std::to_string(row) + " is malformed");
    }
    if (codes.back() < -1) throw std::runtime_error("map CSV row " + std::to_string(row) + ": bad code");
  }
  if (codes.empty()) throw std::runtime_error("map CSV has no cells");

  ReadoutMap map;
  map.grid = {detail::infer_axis(fa), detail::infer_axis(fb)};
  if (map.grid.cells() != codes.size())
    throw std::runtime_error("map CSV cells do not form a full grid");
  map.cells.resize(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto [ia, ib] = map.grid.coords(i);
    const double ea = map.grid.a.at(ia), eb = map.grid.b.at(ib);
    if (std::abs(fa[i] - ea) > 1e-9 * ea || std::abs(fb[i] - eb) > 1e-9 * eb)
      throw std::runtime_error("map CSV rows are not in row-major grid order");
    map.cells[i].f_a = fa[i];
    map.cells[i].f_b = fb[i];
    if (codes[i] >= 0) map.cells[i].consensus = PatternCode{static_cast<std::uint64_t>(codes[i])};
  }
  return map;
}

inline ReadoutMap read_map_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_map_csv(f);
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  const bool tau = r.parameter == SweepParameter::tau;
  out << (tau ? "param_value,scheme,matching_pct,pattern_count\n" : "param_value,scheme,pattern_count\n");
  for (const auto& row : r.rows) {
    out << format_double(row.value) << ',' << scheme_name(row.scheme) << ',';
    if (tau) out << format_double(row.matching_pct.value_or(0.0)) << ',';
    out << row.pattern_count << '\n';
  }
}

// ---- JSON ------------------------------------------------------------------

using nlohmann::json;

inline json to_json(const PaperTopologySpec& t) {
  return {{"core_frequencies", t.core_frequencies}, {"input_frequencies", t.input_frequencies},
          {"k_cc", t.k_cc}, {"k_ic", t.k_ic}, {"noise_fwhm", t.noise_fwhm}, {"dt", t.dt}};
}

inline json to_json(const SimProtocol& p) {
  return {{"cooldown", p.cooldown},         {"tau", p.tau},
          {"repetitions", p.repetitions},   {"schmitt_high", p.schmitt.high},
          {"schmitt_low", p.schmitt.low},   {"counter_limit", p.counter_limit}};
}

inline json to_json(const GridAxis& a) { return {{"min", a.min}, {"max", a.max}, {"steps", a.steps}}; }
inline json to_json(const GridSpec& g) { return {{"a", to_json(g.a)}, {"b", to_json(g.b)}}; }

inline json to_json(const Thresholds& t) {
  return {{"epsilon_v", t.variance}, {"epsilon_d", t.direct}, {"epsilon_f", t.flipflop}};
}

inline json to_json(const DetectorSpec& d) {
  return {{"scheme", std::string(scheme_name(d.scheme))}, {"threshold", d.threshold}};
}

inline json to_json(const MapMetadata& m) {
  char digest_hex[24];
  std::snprintf(digest_hex, sizeof digest_hex, "%016llx", static_cast<unsigned long long>(m.network_digest));
  return {{"detector", to_json(m.detector)}, {"protocol", to_json(m.protocol)}, {"seed", m.seed},
          {"network_digest", digest_hex}};
}

namespace detail {

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) return;
  if constexpr (std::is_integral_v<T>) {
    const bool ok = std::is_unsigned_v<T> ? it->is_number_unsigned() : it->is_number_integer();
    if (!ok)
      throw std::invalid_argument(std::string("'") + key + "' needs " +
                                  (std::is_unsigned_v<T> ? "a non-negative integer" : "an integer"));
  }
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("bad value for '") + key + "'");
  }
}

/// Rejects keys not in `allowed`, catching typos in configuration files.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument(std::string("unknown key '") + key + "' in " + where);
  }
}

}  // namespace detail

/// Missing keys keep the values already in `t`.
inline void merge(const json& j, PaperTopologySpec& t) {
  detail::check_keys(j, {"core_frequencies", "input_frequencies", "k_cc", "k_ic", "noise_fwhm", "dt"},
                     "topology");
  detail::read_if(j, "core_frequencies", t.core_frequencies);
  detail::read_if(j, "input_frequencies", t.input_frequencies);
  detail::read_if(j, "k_cc", t.k_cc);
  detail::read_if(j, "k_ic", t.k_ic);
  detail::read_if(j, "noise_fwhm", t.noise_fwhm);
  detail::read_if(j, "dt", t.dt);
}

inline void merge(const json& j, SimProtocol& p) {
  detail::check_keys(j, {"cooldown", "tau", "repetitions", "schmitt_high", "schmitt_low", "counter_limit"},
                     "protocol");
  detail::read_if(j, "cooldown", p.cooldown);
  detail::read_if(j, "tau", p.tau);
  detail::read_if(j, "repetitions", p.repetitions);
  detail::read_if(j, "schmitt_high", p.schmitt.high);
  detail::read_if(j, "schmitt_low", p.schmitt.low);
  detail::read_if(j, "counter_limit", p.counter_limit);
}

inline void merge(const json& j, GridAxis& a) {
  detail::check_keys(j, {"min", "max", "steps"}, "grid axis");
  detail::read_if(j, "min", a.min);
  detail::read_if(j, "max", a.max);
  detail::read_if(j, "steps", a.steps);
}

inline void merge(const json& j, GridSpec& g) {
  detail::check_keys(j, {"a", "b"}, "grid");
  if (j.contains("a")) merge(j.at("a"), g.a);
  if (j.contains("b")) merge(j.at("b"), g.b);
}

inline void merge(const json& j, Thresholds& t) {
  detail::check_keys(j, {"epsilon_v", "epsilon_d", "epsilon_f"}, "thresholds");
  detail::read_if(j, "epsilon_v", t.variance);
  detail::read_if(j, "epsilon_d", t.direct);
  detail::read_if(j, "epsilon_f", t.flipflop);
}

inline DetectorSpec detector_from_json(const json& j) {
  detail::check_keys(j, {"scheme", "threshold"}, "detector");
  DetectorSpec d;
  std::string scheme(scheme_name(d.scheme));
  detail::read_if(j, "scheme", scheme);
  d.scheme = parse_scheme(scheme);
  detail::read_if(j, "threshold", d.threshold);
  d.validate();
  return d;
}

/// Inverse of to_json(MapMetadata).
inline MapMetadata metadata_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("map metadata must be a JSON object");
  MapMetadata m;
  if (j.contains("detector")) m.detector = detector_from_json(j.at("detector"));
  if (j.contains("protocol")) merge(j.at("protocol"), m.protocol);
  detail::read_if(j, "seed", m.seed);
  std::string hex;
  detail::read_if(j, "network_digest", hex);
  if (!hex.empty()) {
    std::size_t used = 0;
    try {
      m.network_digest = std::stoull(hex, &used, 16);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != hex.size()) throw std::invalid_argument("network_digest must be hexadecimal");
  }
  return m;
}

inline json sweep_rows_json(const SweepResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json codes = json::array();
    for (const auto& c : row.codes) codes.push_back(c.bits);
    json j = {{"value", row.value},
              {"scheme", std::string(scheme_name(row.scheme))},
              {"pattern_count", row.pattern_count},
              {"inconsistent_fraction", row.inconsistent},
              {"codes", codes}};
    if (row.matching_pct) j["matching_pct"] = *row.matching_pct;
    rows.push_back(j);
  }
  return rows;
}

}  // namespace oscsync
