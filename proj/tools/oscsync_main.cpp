// oscsync: command-line front end.
//
// Every command resolves its configuration as defaults <- --config file <-
// flags into one JSON document, runs, and writes its CSV plus a manifest
// holding that document. Passing the manifest back as --config reproduces
// the outputs.

#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "oscsync/oscsync.hpp"

#ifndef OSCSYNC_VERSION
#define OSCSYNC_VERSION "unknown"
#endif

namespace {

using namespace oscsync;
using nlohmann::json;
namespace fs = std::filesystem;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Kind { frequency, frequencies, duration, real, count, integer, text, names };

struct Flag {
  std::string name;
  std::string pointer;  // JSON pointer into the resolved configuration
  Kind kind;
  std::string raw;
  std::string help;
};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::vector<Flag> flags;
  std::string config_path;
  std::string output;
  std::string grid, range, range_a, range_b, values, input_path;
  std::string seed;
  std::size_t workers = 0;
  bool quiet = false;
  std::string cache_dir;
};

json value_of(const Flag& f) {
  switch (f.kind) {
    case Kind::frequency: return parse_frequency(f.raw);
    case Kind::frequencies: return parse_values(f.raw, parse_frequency);
    case Kind::duration: return parse_duration(f.raw);
    case Kind::real: return parse_plain(f.raw);
    case Kind::count: {
      const double v = parse_plain(f.raw);
      if (!(v >= 0.0) || v != std::floor(v)) throw UsageError(f.name + " needs a non-negative integer");
      return static_cast<std::uint64_t>(v);
    }
    case Kind::integer: {
      const double v = parse_plain(f.raw);
      if (v != std::floor(v)) throw UsageError(f.name + " needs an integer");
      return static_cast<std::int64_t>(v);
    }
    case Kind::text: return f.raw;
    case Kind::names: {
      json list = json::array();
      std::stringstream s(f.raw);
      for (std::string item; std::getline(s, item, ',');) list.push_back(item);
      return list;
    }
  }
  return nullptr;
}

std::string flag_help(const Flag& f) {
  if (!f.help.empty()) return f.help;
  switch (f.kind) {
    case Kind::frequency: return "Hz, or with kHz/MHz/GHz suffix";
    case Kind::frequencies: return "Comma-separated frequencies";
    case Kind::duration: return "Seconds, or with ms/us/ns/ps suffix";
    case Kind::names: return "Comma-separated names";
    default: return "";
  }
}

/// Registered on the subcommand once all flags of a command exist.
void flag(Command& c, const std::string& name, const std::string& pointer, Kind kind, std::string help = {}) {
  c.flags.push_back({name, pointer, kind, {}, std::move(help)});
}

void topology_flags(Command& c) {
  flag(c, "--cores", "/topology/core_frequencies", Kind::frequencies);
  flag(c, "--inputs", "/topology/input_frequencies", Kind::frequencies);
  flag(c, "--k-cc", "/topology/k_cc", Kind::frequency);
  flag(c, "--k-ic", "/topology/k_ic", Kind::frequency);
  flag(c, "--fwhm", "/topology/noise_fwhm", Kind::frequency);
  flag(c, "--dt", "/topology/dt", Kind::duration);
}

void protocol_flags(Command& c) {
  flag(c, "--cooldown", "/protocol/cooldown", Kind::duration);
  flag(c, "--tau", "/protocol/tau", Kind::duration);
  flag(c, "--reps", "/protocol/repetitions", Kind::count, "Repetitions per map point");
  flag(c, "--schmitt-high", "/protocol/schmitt_high", Kind::real, "Schmitt trigger upper level");
  flag(c, "--schmitt-low", "/protocol/schmitt_low", Kind::real, "Schmitt trigger lower level");
  flag(c, "--counter-limit", "/protocol/counter_limit", Kind::integer, "Counter saturation level (0: unbounded)");
}

void threshold_flags(Command& c) {
  flag(c, "--eps-v", "/thresholds/epsilon_v", Kind::real, "Variance threshold");
  flag(c, "--eps-d", "/thresholds/epsilon_d", Kind::real, "Direct counter threshold");
  flag(c, "--eps-f", "/thresholds/epsilon_f", Kind::real, "Flip-flop counter threshold");
}

void grid_flags(Command& c) {
  c.app->add_option("--grid", c.grid, "Grid size, e.g. 200x200");
  c.app->add_option("--range", c.range, "Both input axes, min:max (Hz or MHz suffix)");
  c.app->add_option("--range-a", c.range_a, "Input A axis, min:max");
  c.app->add_option("--range-b", c.range_b, "Input B axis, min:max");
  flag(c, "--radius", "/radius", Kind::frequency);
}

void common_flags(Command& c, bool simulates) {
  c.app->add_option("--config", c.config_path, "JSON configuration or manifest");
  c.app->add_option("-o,--output", c.output, "Output CSV path");
  c.app->add_flag("-q,--quiet", c.quiet, "No progress log");
  if (simulates) {
    c.app->add_option("--seed", c.seed, "Master seed (64-bit)");
    c.app->add_option("--workers", c.workers, "Worker threads (0: all cores)");
  }
}

// ---- configuration -----------------------------------------------------------

json base_defaults() {
  return {{"topology", to_json(PaperTopologySpec{})},
          {"protocol", to_json(SimProtocol{})},
          {"thresholds", to_json(Thresholds{})},
          {"grid", to_json(GridSpec{})},
          {"radius", 3e6},
          {"seed", 42}};
}

std::vector<double> arange(double a, double b, double step) {
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) v.push_back(a + static_cast<double>(i) * step);
  return v;
}

json sweep_grid(std::size_t n) { return to_json(GridSpec{{470e6, 670e6, n}, {470e6, 670e6, n}}); }

std::vector<double> default_sweep_values(const std::string& param) {
  if (param == "k_ic" || param == "k_cc") return arange(0.0, 24e6, 2e6);
  if (param == "fwhm") return arange(0.0, 5e6, 0.5e6);
  if (param == "epsilon_v") return arange(0.05, 0.5, 0.05);
  if (param == "epsilon_counter") return arange(1.0, 30.0, 1.0);
  if (param == "tau") return arange(0.05e-6, 2e-6, 0.05e-6);
  throw UsageError("unknown sweep parameter '" + param + "'");
}

json defaults_for(const std::string& cmd) {
  json d = base_defaults();
  const json all_schemes_json = {"variance", "direct", "flipflop"};
  if (cmd == "simulate-trace") {
    d["trace"] = {{"duration", 1e-6}, {"stride", 1}};
  } else if (cmd == "sweep-1d") {
    d["topology"]["core_frequencies"] = {560e6, 580e6};
    d["topology"]["input_frequencies"] = {600e6};
    d["input_values"] = arange(470e6, 670e6, 1e6);
  } else if (cmd == "map") {
    d["detector"] = "variance";
  } else if (cmd == "sweep-coupling") {
    d["topology"]["noise_fwhm"] = 1e6;
    d["grid"] = sweep_grid(100);
    d["sweep"] = {{"parameter", "k_ic"}, {"values", nullptr}};
    d["schemes"] = all_schemes_json;
  } else if (cmd == "sweep-noise") {
    d["grid"] = sweep_grid(100);
    d["sweep"] = {{"parameter", "fwhm"}, {"values", nullptr}};
    d["schemes"] = all_schemes_json;
  } else if (cmd == "sweep-threshold") {
    d["topology"]["noise_fwhm"] = 1e6;
    d["grid"] = sweep_grid(100);
    d["sweep"] = {{"parameter", "epsilon_v"}, {"values", nullptr}};
    d["schemes"] = all_schemes_json;
  } else if (cmd == "sweep-tau") {
    d["topology"]["noise_fwhm"] = 1e6;
    d["grid"] = sweep_grid(50);
    d["sweep"] = {{"parameter", "tau"}, {"values", nullptr}, {"reference_tau", 100e-6}};
    d["schemes"] = all_schemes_json;
  } else if (cmd == "linewidth") {
    d = {{"seed", 1},
         {"linewidth", {{"fwhm", 1e6}, {"observation", 100e-6}, {"segments", 20}, {"carrier", 600e6},
                        {"dt", 1e-10}}}};
  } else if (cmd == "count-patterns") {
    d = {{"radius", 3e6}};
  }
  return d;
}

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
}

json resolve(Command& c) {
  json cfg = defaults_for(c.name);
  if (!c.config_path.empty()) {
    json file = load_json(c.config_path);
    if (file.contains("config") && file.contains("command")) {
      if (file["command"] != c.name)
        throw UsageError("manifest was written by '" + file["command"].get<std::string>() + "', not '" +
                         c.name + "'");
      file = file["config"];
    }
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [key, value] : file.items())
      if (!cfg.contains(key) && key != "input")
        throw UsageError("unknown key '" + key + "' in config for " + c.name);
    cfg.merge_patch(file);
  }
  for (const Flag& f : c.flags)
    if (!f.raw.empty()) cfg[json::json_pointer(f.pointer)] = value_of(f);
  if (!c.seed.empty()) {
    std::size_t used = 0;
    std::uint64_t s = 0;
    try {
      if (!c.seed.empty() && std::isdigit(static_cast<unsigned char>(c.seed.front())))
        s = std::stoull(c.seed, &used, 0);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != c.seed.size()) throw UsageError("--seed needs a 64-bit unsigned integer");
    cfg["seed"] = s;
  }
  if (!c.grid.empty()) {
    const auto [na, nb] = parse_grid(c.grid);
    cfg["grid"]["a"]["steps"] = na;
    cfg["grid"]["b"]["steps"] = nb;
  }
  auto set_axis = [&](const std::string& text, const char* axis) {
    if (text.empty()) return;
    if (text.find(':') == std::string::npos) throw UsageError("axis range must be min:max");
    const auto colon = text.find(':');
    cfg["grid"][axis]["min"] = parse_frequency(text.substr(0, colon));
    cfg["grid"][axis]["max"] = parse_frequency(text.substr(colon + 1));
  };
  set_axis(c.range, "a");
  set_axis(c.range, "b");
  set_axis(c.range_a, "a");
  set_axis(c.range_b, "b");

  if (cfg.contains("sweep")) {
    const std::string param = cfg["sweep"]["parameter"].get<std::string>();
    if (!c.values.empty()) {
      if (param == "tau")
        cfg["sweep"]["values"] = parse_values(c.values, parse_duration);
      else if (param == "epsilon_v" || param == "epsilon_counter")
        cfg["sweep"]["values"] = parse_values(c.values, parse_plain);
      else
        cfg["sweep"]["values"] = parse_values(c.values, parse_frequency);
    }
    if (cfg["sweep"]["values"].is_null()) cfg["sweep"]["values"] = default_sweep_values(param);
  }
  if (c.name == "sweep-1d" && !c.values.empty())
    cfg["input_values"] = parse_values(c.values, parse_frequency);
  return cfg;
}

PaperTopologySpec topology_of(const json& cfg) {
  PaperTopologySpec t;
  merge(cfg.at("topology"), t);
  return t;
}
SimProtocol protocol_of(const json& cfg) {
  SimProtocol p;
  merge(cfg.at("protocol"), p);
  return p;
}
GridSpec grid_of(const json& cfg) {
  GridSpec g;
  merge(cfg.at("grid"), g);
  return g;
}
Thresholds thresholds_of(const json& cfg) {
  Thresholds t;
  merge(cfg.at("thresholds"), t);
  return t;
}
std::vector<Scheme> schemes_of(const json& cfg) {
  std::vector<Scheme> out;
  for (const auto& s : cfg.at("schemes")) out.push_back(parse_scheme(s.get<std::string>()));
  if (out.empty()) throw UsageError("no detector schemes selected");
  return out;
}

// ---- outputs -----------------------------------------------------------------

std::string output_path(const Command& c, const std::string& fallback) {
  return c.output.empty() ? fallback : c.output;
}

fs::path manifest_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".manifest.json");
  return p;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void write_manifest(const Command& c, const json& cfg, const fs::path& csv, json results = json::object()) {
  json m = {{"schema_version", manifest_schema_version},
            {"command", c.name},
            {"version", OSCSYNC_VERSION},
            {"seed", cfg.contains("seed") ? cfg["seed"] : json(nullptr)},
            {"config", cfg},
            {"outputs", {csv.filename().string()}},
            {"results", std::move(results)}};
  auto f = open_output(manifest_path(csv));
  f << m.dump(2) << '\n';
  if (!f) throw std::runtime_error("failed writing manifest");
}

class Progress {
 public:
  Progress(bool quiet, std::string label) : quiet_(quiet), label_(std::move(label)) {}

  void operator()(std::size_t done, std::size_t total) {
    if (quiet_) return;
    const std::size_t tenth = total >= 10 ? done * 10 / total : (done == total ? 10 : 0);
    if (tenth == last_) return;
    last_ = tenth;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::fprintf(stderr, "%s: %zu/%zu cells (%.0f s)\n", label_.c_str(), done, total, secs);
  }

  void note(const std::string& msg) const {
    if (!quiet_) std::fprintf(stderr, "%s: %s\n", label_.c_str(), msg.c_str());
  }

 private:
  bool quiet_;
  std::string label_;
  std::size_t last_ = 0;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

MapRunOptions run_options(const Command& c, Progress& progress) {
  MapRunOptions o;
  o.workers = c.workers;
  o.progress = [&progress](std::size_t d, std::size_t t) { progress(d, t); };
  return o;
}

// ---- commands ----------------------------------------------------------------

int cmd_simulate_trace(Command& c) {
  const json cfg = resolve(c);
  const NetworkConfig net = build_paper_network(topology_of(cfg));
  const double duration = cfg.at("trace").at("duration").get<double>();
  const auto stride = cfg.at("trace").at("stride").get<std::uint64_t>();
  const RngStream rng{cfg.at("seed").get<std::uint64_t>(), repetition_stream(0, 0)};
  const PhaseState init{random_initial_phases(net.size(), rng), 0};

  const fs::path out = output_path(c, "trace.csv");
  auto f = open_output(out);
  TraceRecorder rec(f, net.size(), stride);
  rec.record(0.0, init.phases);
  PhaseObserver* obs[] = {&rec};
  run(net, duration, init, rng, obs);
  if (!f) throw std::runtime_error("failed writing " + out.string());
  write_manifest(c, cfg, out);
  return 0;
}

int cmd_sweep_1d(Command& c) {
  const json cfg = resolve(c);
  const auto values = cfg.at("input_values").get<std::vector<double>>();
  Progress progress(c.quiet, "sweep-1d");
  progress.note(std::to_string(values.size()) + " input frequencies");
  const auto points = calibration_sweep(topology_of(cfg), protocol_of(cfg), values,
                                        cfg.at("seed").get<std::uint64_t>());
  const fs::path out = output_path(c, "sweep1d.csv");
  auto f = open_output(out);
  write_calibration_csv(f, points);
  if (!f) throw std::runtime_error("failed writing " + out.string());
  write_manifest(c, cfg, out);
  return 0;
}

int cmd_map(Command& c) {
  const json cfg = resolve(c);
  const NetworkConfig net = build_paper_network(topology_of(cfg));
  const SimProtocol protocol = protocol_of(cfg);
  const GridSpec grid = grid_of(cfg);
  const Scheme scheme = parse_scheme(cfg.at("detector").get<std::string>());
  const DetectorSpec det = thresholds_of(cfg).spec(scheme);
  const double radius = cfg.at("radius").get<double>();
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  det.validate();

  Progress progress(c.quiet, "map");
  const ReadoutMap map = build_map(net, protocol, det, grid, seed, run_options(c, progress));
  const FilteredMap filtered = robust_filter(map, radius);
  if (filtered.degenerate)
    std::fprintf(stderr, "warning: filter radius is below the grid pitch; only consistency is checked\n");
  const PatternCount count = count_patterns(filtered);

  const fs::path out = output_path(c, "map.csv");
  auto f = open_output(out);
  write_map_csv(f, filtered);
  if (!f) throw std::runtime_error("failed writing " + out.string());

  json codes = json::array();
  for (const auto& code : count.codes) codes.push_back(code.bits);
  json meta = to_json(map.meta);
  meta["grid"] = to_json(grid);
  meta["radius"] = radius;
  write_manifest(c, cfg, out,
                 {{"metadata", meta},
                  {"pattern_count", count.count},
                  {"pattern_codes", codes},
                  {"inconsistent_fraction", inconsistent_fraction(map)}});
  std::printf("patterns: %zu\n", count.count);
  return 0;
}

int cmd_count_patterns(Command& c) {
  const json cfg = resolve(c);
  if (c.input_path.empty()) throw UsageError("count-patterns needs a map CSV");
  const double radius = cfg.at("radius").get<double>();
  const ReadoutMap map = read_map_csv(c.input_path);
  const FilteredMap filtered = robust_filter(map, radius);
  if (filtered.degenerate)
    std::fprintf(stderr, "warning: filter radius is below the grid pitch; only consistency is checked\n");
  const PatternCount count = count_patterns(filtered);

  std::printf("patterns: %zu\n", count.count);
  std::printf("codes:");
  for (const auto& code : count.codes) std::printf(" %llu", static_cast<unsigned long long>(code.bits));
  std::printf("\n");

  if (!c.output.empty()) {
    const fs::path out = c.output;
    auto f = open_output(out);
    f << "pattern_code,kept_cells\n";
    for (const auto& code : count.codes) {
      std::size_t n = 0;
      for (std::size_t i = 0; i < map.cells.size(); ++i)
        n += filtered.kept[i] && map.cells[i].consensus == code ? 1 : 0;
      f << code.bits << ',' << n << '\n';
    }
    json with_input = cfg;
    with_input["input"] = c.input_path;
    write_manifest(c, with_input, out, {{"pattern_count", count.count}});
  }
  return 0;
}

SweepContext sweep_context(const Command& c, const json& cfg, Progress& progress) {
  SweepContext ctx;
  ctx.topology = topology_of(cfg);
  ctx.protocol = protocol_of(cfg);
  ctx.grid = grid_of(cfg);
  ctx.thresholds = thresholds_of(cfg);
  ctx.radius = cfg.at("radius").get<double>();
  ctx.schemes = schemes_of(cfg);
  ctx.seed = cfg.at("seed").get<std::uint64_t>();
  ctx.run = run_options(c, progress);
  return ctx;
}

void write_sweep(const Command& c, const json& cfg, const SweepResult& r, const std::string& fallback) {
  const fs::path out = output_path(c, fallback);
  auto f = open_output(out);
  write_sweep_csv(f, r);
  if (!f) throw std::runtime_error("failed writing " + out.string());
  write_manifest(c, cfg, out, {{"rows", sweep_rows_json(r)}});
  for (const auto& row : r.rows) {
    std::printf("%-12s %-9s %3zu", format_double(row.value).c_str(),
                std::string(scheme_name(row.scheme)).c_str(), row.pattern_count);
    if (row.matching_pct) std::printf("  %6.2f%%", *row.matching_pct);
    std::printf("\n");
  }
}

int cmd_sweep(Command& c) {
  const json cfg = resolve(c);
  const std::string param = cfg.at("sweep").at("parameter").get<std::string>();
  const auto values = cfg.at("sweep").at("values").get<std::vector<double>>();
  Progress progress(c.quiet, c.name);
  const SweepContext ctx = sweep_context(c, cfg, progress);

  SweepResult r;
  if (c.name == "sweep-coupling") {
    if (param != "k_ic" && param != "k_cc") throw UsageError("--param must be k_ic or k_cc");
    r = sweep_coupling(ctx, param == "k_ic" ? SweepParameter::k_ic : SweepParameter::k_cc, values);
  } else if (c.name == "sweep-noise") {
    if (param != "fwhm") throw UsageError("noise sweep parameter must be fwhm");
    r = sweep_noise(ctx, values);
  } else if (c.name == "sweep-threshold") {
    if (param != "epsilon_v" && param != "epsilon_counter")
      throw UsageError("--param must be epsilon_v or epsilon_counter");
    r = sweep_threshold(ctx, param == "epsilon_v" ? SweepParameter::epsilon_v : SweepParameter::epsilon_counter,
                        values);
  } else {
    if (param != "tau") throw UsageError("evaluation-time sweep parameter must be tau");
    TauSweepOptions opt;
    opt.reference_tau = cfg.at("sweep").at("reference_tau").get<double>();
    opt.cache_dir = c.cache_dir;
    opt.log = [&progress](std::string_view msg) { progress.note(std::string(msg)); };
    r = sweep_tau(ctx, values, opt);
  }
  write_sweep(c, cfg, r, c.name + ".csv");
  return 0;
}

int cmd_linewidth(Command& c) {
  const json cfg = resolve(c);
  const json& lw = cfg.at("linewidth");
  LinewidthOptions opt;
  opt.carrier = lw.at("carrier").get<double>();
  opt.dt = lw.at("dt").get<double>();
  opt.segments = lw.at("segments").get<std::size_t>();
  opt.seed = cfg.at("seed").get<std::uint64_t>();
  const double fwhm = lw.at("fwhm").get<double>();
  const double observation = lw.at("observation").get<double>();

  const LinewidthEstimate est = estimate_linewidth(fwhm, observation, opt);
  if (est.resolution_limited)
    std::printf("linewidth: <= %s Hz (resolution limited)\n", format_double(est.resolution).c_str());
  else
    std::printf("linewidth: %s Hz (configured %s Hz)\n", format_double(est.fwhm).c_str(),
                format_double(fwhm).c_str());

  if (!c.output.empty()) {
    const fs::path out = c.output;
    auto f = open_output(out);
    f << "fwhm_config_Hz,fwhm_estimate_Hz,resolution_Hz,resolution_limited\n"
      << format_double(fwhm) << ',' << format_double(est.fwhm) << ',' << format_double(est.resolution)
      << ',' << (est.resolution_limited ? 1 : 0) << '\n';
    write_manifest(c, cfg, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kuramoto oscillator network simulator and synchronization readout"};
  app.require_subcommand(1);
  app.set_version_flag("--version", OSCSYNC_VERSION);

  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](const std::string& name, const std::string& help) -> Command& {
    commands.push_back(std::make_unique<Command>());
    Command& c = *commands.back();
    c.name = name;
    c.app = app.add_subcommand(name, help);
    return c;
  };

  {
    Command& c = make("simulate-trace", "Integrate one run and write the phase trace");
    common_flags(c, true);
    topology_flags(c);
    flag(c, "--duration", "/trace/duration", Kind::duration);
    flag(c, "--stride", "/trace/stride", Kind::count, "Write every n-th step");
  }
  {
    Command& c = make("sweep-1d", "Sweep one input frequency on a reduced network (calibration curves)");
    common_flags(c, true);
    topology_flags(c);
    protocol_flags(c);
    c.app->add_option("--input-range", c.values, "Input frequencies: list or start:stop:step");
  }
  {
    Command& c = make("map", "Readout map over the two input frequencies");
    common_flags(c, true);
    topology_flags(c);
    protocol_flags(c);
    threshold_flags(c);
    grid_flags(c);
    flag(c, "--detector", "/detector", Kind::text, "variance, direct or flipflop");
  }
  {
    Command& c = make("count-patterns", "Filter a map CSV and count its patterns");
    common_flags(c, false);
    c.app->add_option("map", c.input_path, "Map CSV")->required();
    flag(c, "--radius", "/radius", Kind::frequency);
  }
  const std::pair<const char*, const char*> sweeps[] = {
      {"sweep-coupling", "Pattern counts against a coupling strength"},
      {"sweep-noise", "Pattern counts against the noise linewidth"},
      {"sweep-threshold", "Pattern counts against a detection threshold"},
      {"sweep-tau", "Map convergence against the evaluation time"},
  };
  for (const auto& [name, help] : sweeps) {
    Command& c = make(name, help);
    common_flags(c, true);
    topology_flags(c);
    protocol_flags(c);
    threshold_flags(c);
    grid_flags(c);
    flag(c, "--param", "/sweep/parameter", Kind::text, "Swept parameter");
    c.app->add_option("--values", c.values, "Sweep values: list or start:stop:step");
    flag(c, "--schemes", "/schemes", Kind::names);
    if (std::string(name) == "sweep-tau") {
      flag(c, "--reference-tau", "/sweep/reference_tau", Kind::duration);
      c.app->add_option("--cache-dir", c.cache_dir, "Directory caching the reference simulation");
    }
  }
  {
    Command& c = make("linewidth", "Estimate the linewidth of an isolated noisy oscillator");
    common_flags(c, true);
    flag(c, "--fwhm", "/linewidth/fwhm", Kind::frequency);
    flag(c, "--observation", "/linewidth/observation", Kind::duration);
    flag(c, "--segments", "/linewidth/segments", Kind::count, "Periodogram segments averaged");
    flag(c, "--carrier", "/linewidth/carrier", Kind::frequency);
  }
  for (auto& c : commands)
    for (Flag& f : c->flags) c->app->add_option(f.name, f.raw, flag_help(f));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (auto& c : commands) {
    if (!c->app->parsed()) continue;
    try {
      if (c->name == "simulate-trace") return cmd_simulate_trace(*c);
      if (c->name == "sweep-1d") return cmd_sweep_1d(*c);
      if (c->name == "map") return cmd_map(*c);
      if (c->name == "count-patterns") return cmd_count_patterns(*c);
      if (c->name == "linewidth") return cmd_linewidth(*c);
      return cmd_sweep(*c);
    } catch (const std::invalid_argument& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    } catch (const std::out_of_range& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    } catch (const json::exception& e) {
      std::fprintf(stderr, "error: invalid configuration: %s\n", e.what());
      return 1;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 2;
    }
  }
  return 1;
}
