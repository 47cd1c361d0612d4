#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "oscsync/io.hpp"
#include "oscsync/units.hpp"

using namespace oscsync;

namespace {

FilteredMap sample_filtered_map() {
  ReadoutMap m;
  m.grid = {{470e6, 670e6, 3}, {500e6, 600e6, 2}};
  const std::vector<std::int64_t> codes{0, 5, -1, 63, 5, 5};
  for (std::size_t c = 0; c < codes.size(); ++c) {
    const auto [i, j] = m.grid.coords(c);
    MapCell cell{m.grid.a.at(i), m.grid.b.at(j), std::nullopt};
    if (codes[c] >= 0) cell.consensus = PatternCode{static_cast<std::uint64_t>(codes[c])};
    m.cells.push_back(cell);
  }
  return robust_filter(m, 0.0);
}

ReadoutMap parse(const std::string& text) {
  std::istringstream in(text);
  return read_map_csv(in);
}

}  // namespace

TEST(Csv, MapRoundTrip) {
  const FilteredMap f = sample_filtered_map();
  std::ostringstream out;
  write_map_csv(out, f);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "fA_Hz,fB_Hz,pattern_code,kept");
  EXPECT_NE(text.find("\n470000000,500000000,0,1\n"), std::string::npos);
  EXPECT_NE(text.find(",-1,0\n"), std::string::npos);

  const ReadoutMap back = parse(text);
  EXPECT_EQ(back.grid, f.map.grid);
  ASSERT_EQ(back.cells.size(), f.map.cells.size());
  for (std::size_t i = 0; i < back.cells.size(); ++i) {
    EXPECT_EQ(back.cells[i].code(), f.map.cells[i].code());
    EXPECT_EQ(back.cells[i].f_a, f.map.cells[i].f_a);
    EXPECT_EQ(back.cells[i].f_b, f.map.cells[i].f_b);
  }
  std::ostringstream again;
  write_map_csv(again, robust_filter(back, 0.0));
  EXPECT_EQ(again.str(), text);
}

TEST(Csv, FullPrecisionFrequencies) {
  ReadoutMap m;
  m.grid = {{470e6, 670e6, 7}, {470e6, 670e6, 1}};
  for (std::size_t i = 0; i < 7; ++i) m.cells.push_back({m.grid.a.at(i), 470e6, PatternCode{1}});
  std::ostringstream out;
  write_map_csv(out, robust_filter(m, 0.0));
  const ReadoutMap back = parse(out.str());
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(back.cells[i].f_a, m.cells[i].f_a);
}

TEST(Csv, ReaderRejectsBadInput) {
  EXPECT_THROW(parse(""), std::runtime_error);
  EXPECT_THROW(parse("a,b,c\n1,2,3\n"), std::runtime_error);
  EXPECT_THROW(parse("fA_Hz,fB_Hz,pattern_code,kept\n"), std::runtime_error);
  EXPECT_THROW(parse("fA_Hz,fB_Hz,pattern_code,kept\n1e8,1e8\n"), std::runtime_error);
  EXPECT_THROW(parse("fA_Hz,fB_Hz,pattern_code,kept\n1e8,1e8,x,1\n"), std::runtime_error);
  EXPECT_THROW(parse("fA_Hz,fB_Hz,pattern_code,kept\n1e8,1e8,3.5,1\n"), std::runtime_error);
  EXPECT_THROW(parse("fA_Hz,fB_Hz,pattern_code,kept\n1e8,1e8,-2,1\n"), std::runtime_error);
  // three cells cannot form a grid over 2 x 2 coordinates
  EXPECT_THROW(parse("fA_Hz,fB_Hz,pattern_code\n1e8,1e8,0\n1e8,2e8,0\n2e8,1e8,0\n"), std::runtime_error);
  // column-major order
  EXPECT_THROW(parse("fA_Hz,fB_Hz,pattern_code\n1e8,1e8,0\n2e8,1e8,0\n1e8,2e8,0\n2e8,2e8,0\n"),
               std::runtime_error);
  EXPECT_THROW(read_map_csv(std::string("/nonexistent/map.csv")), std::runtime_error);
}

TEST(Csv, ReaderAcceptsCrlfAndMissingKept) {
  const ReadoutMap m = parse("fA_Hz,fB_Hz,pattern_code\r\n1e8,1e8,3\r\n1e8,2e8,-1\r\n");
  ASSERT_EQ(m.cells.size(), 2u);
  EXPECT_EQ(m.cells[0].code(), 3);
  EXPECT_EQ(m.cells[1].code(), -1);
  EXPECT_EQ(m.grid.a.steps, 1u);
  EXPECT_EQ(m.grid.b.steps, 2u);
}

TEST(Csv, SweepSchemas) {
  SweepResult r{SweepParameter::k_ic, {0.0, 2e6}, {}};
  r.rows.push_back({0.0, Scheme::variance, 1, std::nullopt, 0.0, {}});
  r.rows.push_back({2e6, Scheme::flipflop_counter, 4, std::nullopt, 0.1, {}});
  std::ostringstream out;
  write_sweep_csv(out, r);
  EXPECT_EQ(out.str(), "param_value,scheme,pattern_count\n0,variance,1\n2000000,flipflop,4\n");

  SweepResult t{SweepParameter::tau, {5e-7}, {}};
  t.rows.push_back({5e-7, Scheme::direct_counter, 7, 97.5, 0.0, {}});
  std::ostringstream tout;
  write_sweep_csv(tout, t);
  EXPECT_EQ(tout.str(), "param_value,scheme,matching_pct,pattern_count\n4.9999999999999998e-07,direct,97.5,7\n");

  const json rows = sweep_rows_json(t);
  EXPECT_EQ(rows[0]["matching_pct"], 97.5);
  EXPECT_EQ(rows[0]["scheme"], "direct");
}

TEST(Csv, CalibrationSchema) {
  const std::vector<CalibrationPoint> pts{{550e6, {570e6, 571e6, 600e6, 600e6, 549e6}, {0.25, -3, 2}}};
  std::ostringstream out;
  write_calibration_csv(out, pts);
  EXPECT_EQ(out.str(),
            "fA_Hz,meanf_1,meanf_2,meanf_A,var_raw,direct_raw,flipflop_raw\n"
            "550000000,570000000,571000000,549000000,0.25,3,2\n");
}

TEST(Csv, TraceRecorderStride) {
  std::ostringstream out;
  TraceRecorder rec(out, 2, 3);
  rec.record(0.0, std::vector<double>{0.0, 1.0});
  const std::vector<double> phases{0.5, 1.5}, inc{0.1, 0.1};
  for (int k = 1; k <= 9; ++k) rec.observe(k * 1e-10, phases, inc);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "t_s,phi_0,phi_1,sin_0,sin_1");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_THROW(TraceRecorder(out, 2, 0), std::invalid_argument);
  EXPECT_THROW(rec.record(0.0, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Json, TopologyRoundTripAndPartialMerge) {
  PaperTopologySpec t;
  t.core_frequencies = {500e6, 510e6, 520e6};
  t.k_ic = 7e6;
  PaperTopologySpec back;
  merge(to_json(t), back);
  EXPECT_EQ(back.core_frequencies, t.core_frequencies);
  EXPECT_EQ(back.k_ic, 7e6);
  PaperTopologySpec partial;
  merge(json{{"k_cc", 1e6}}, partial);
  EXPECT_EQ(partial.k_cc, 1e6);
  EXPECT_EQ(partial.k_ic, PaperTopologySpec{}.k_ic);
}

TEST(Json, ProtocolGridThresholdRoundTrip) {
  SimProtocol p;
  p.tau = 2e-6;
  p.counter_limit = 15;
  SimProtocol pb;
  merge(to_json(p), pb);
  EXPECT_EQ(pb.tau, 2e-6);
  EXPECT_EQ(pb.counter_limit, 15);
  const GridSpec g{{480e6, 660e6, 13}, {470e6, 670e6, 5}};
  GridSpec gb;
  merge(to_json(g), gb);
  EXPECT_EQ(gb, g);
  Thresholds th{0.3, 5, 7};
  Thresholds tb;
  merge(to_json(th), tb);
  EXPECT_EQ(tb.variance, 0.3);
  EXPECT_EQ(tb.flipflop, 7);
}

TEST(Json, RejectsUnknownKeysAndBadTypes) {
  PaperTopologySpec t;
  EXPECT_THROW(merge(json{{"k_icc", 1.0}}, t), std::invalid_argument);
  EXPECT_THROW(merge(json{{"k_ic", "strong"}}, t), std::invalid_argument);
  EXPECT_THROW(merge(json::array(), t), std::invalid_argument);
  GridSpec g;
  EXPECT_THROW(merge(json{{"c", json::object()}}, g), std::invalid_argument);
  SimProtocol p;
  EXPECT_THROW(merge(json{{"repetitions", -3}}, p), std::invalid_argument);
  EXPECT_THROW(merge(json{{"repetitions", 2.5}}, p), std::invalid_argument);
  EXPECT_THROW(merge(json{{"counter_limit", 1.5}}, p), std::invalid_argument);
  merge(json{{"counter_limit", -1}}, p);
  EXPECT_EQ(p.counter_limit, -1);
}

TEST(Json, MetadataDigestIsHex) {
  MapMetadata m;
  m.network_digest = 0xabcdef;
  m.seed = 9;
  const json j = to_json(m);
  EXPECT_EQ(j["network_digest"], "0000000000abcdef");
  EXPECT_EQ(j["seed"], 9);
  EXPECT_EQ(j["detector"]["scheme"], "variance");
}

TEST(Json, MetadataRoundTrip) {
  MapMetadata m;
  m.detector = {Scheme::flipflop_counter, 18};
  m.protocol.tau = 1.5e-6;
  m.protocol.repetitions = 7;
  m.protocol.schmitt = {0.4, -0.3};
  m.seed = 0xfedcba9876543210ull;
  m.network_digest = 0x0123456789abcdefull;
  const MapMetadata back = metadata_from_json(json::parse(to_json(m).dump()));
  EXPECT_EQ(back.detector.scheme, m.detector.scheme);
  EXPECT_EQ(back.detector.threshold, 18);
  EXPECT_EQ(back.protocol.tau, 1.5e-6);
  EXPECT_EQ(back.protocol.repetitions, 7u);
  EXPECT_EQ(back.protocol.schmitt.high, 0.4);
  EXPECT_EQ(back.protocol.schmitt.low, -0.3);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.network_digest, m.network_digest);
  EXPECT_THROW(metadata_from_json(json{{"network_digest", "xyz"}}), std::invalid_argument);
  EXPECT_THROW(metadata_from_json(json{{"detector", {{"scheme", "variance"}, {"threshold", 0.9}}}}),
               std::invalid_argument);
}

TEST(Units, Frequencies) {
  EXPECT_DOUBLE_EQ(parse_frequency("600e6"), 600e6);
  EXPECT_DOUBLE_EQ(parse_frequency("600MHz"), 600e6);
  EXPECT_DOUBLE_EQ(parse_frequency(" 600 MHz "), 600e6);
  EXPECT_DOUBLE_EQ(parse_frequency("0.6GHz"), 600e6);
  EXPECT_DOUBLE_EQ(parse_frequency("12kHz"), 12e3);
  EXPECT_DOUBLE_EQ(parse_frequency("7Hz"), 7.0);
  EXPECT_THROW(parse_frequency("MHz"), std::invalid_argument);
  EXPECT_THROW(parse_frequency("6x"), std::invalid_argument);
  EXPECT_THROW(parse_frequency(""), std::invalid_argument);
  EXPECT_THROW(parse_frequency("inf"), std::invalid_argument);
}

TEST(Units, Durations) {
  EXPECT_DOUBLE_EQ(parse_duration("0.5us"), 0.5e-6);
  EXPECT_DOUBLE_EQ(parse_duration("0.5µs"), 0.5e-6);
  EXPECT_DOUBLE_EQ(parse_duration("500ns"), 500e-9);
  EXPECT_DOUBLE_EQ(parse_duration("100ps"), 100e-12);
  EXPECT_DOUBLE_EQ(parse_duration("2ms"), 2e-3);
  EXPECT_DOUBLE_EQ(parse_duration("1e-7"), 1e-7);
  EXPECT_DOUBLE_EQ(parse_duration("3s"), 3.0);
  EXPECT_THROW(parse_duration("3 min"), std::invalid_argument);
}

TEST(Units, ListsRangesAndGrids) {
  EXPECT_EQ(parse_values("1MHz,2MHz,5e6", parse_frequency), (std::vector<double>{1e6, 2e6, 5e6}));
  const auto r = parse_values("470MHz:670MHz:50MHz", parse_frequency);
  EXPECT_EQ(r.size(), 5u);
  EXPECT_DOUBLE_EQ(r.back(), 670e6);
  EXPECT_EQ(parse_values("0.05:0.5:0.05", parse_plain).size(), 10u);
  EXPECT_EQ(parse_values("1:1:1", parse_plain), (std::vector<double>{1.0}));
  EXPECT_THROW(parse_values("1:2", parse_plain), std::invalid_argument);
  EXPECT_THROW(parse_values("2:1:1", parse_plain), std::invalid_argument);
  EXPECT_THROW(parse_values("1:2:0", parse_plain), std::invalid_argument);
  EXPECT_THROW(parse_values("1,,2", parse_plain), std::invalid_argument);
  EXPECT_EQ(parse_grid("200x150"), (std::pair<std::size_t, std::size_t>{200, 150}));
  EXPECT_EQ(parse_grid("50"), (std::pair<std::size_t, std::size_t>{50, 50}));
  EXPECT_THROW(parse_grid("0x5"), std::invalid_argument);
  EXPECT_THROW(parse_grid("2.5"), std::invalid_argument);
}
