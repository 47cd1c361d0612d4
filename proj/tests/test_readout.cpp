#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oscsync/readout.hpp"

using namespace oscsync;

namespace {

GridSpec small_grid(std::size_t n, double lo = 520e6, double hi = 640e6) {
  return {{lo, hi, n}, {lo, hi, n}};
}

ReadoutMap synthetic_map(std::size_t na, std::size_t nb, double pitch,
                         const std::vector<std::int64_t>& codes) {
  ReadoutMap m;
  m.grid = {{500e6, 500e6 + pitch * static_cast<double>(na - 1), na},
            {500e6, 500e6 + pitch * static_cast<double>(nb - 1), nb}};
  for (std::size_t c = 0; c < na * nb; ++c) {
    const auto [i, j] = m.grid.coords(c);
    MapCell cell{m.grid.a.at(i), m.grid.b.at(j), std::nullopt};
    if (codes[c] >= 0) cell.consensus = PatternCode{static_cast<std::uint64_t>(codes[c])};
    m.cells.push_back(cell);
  }
  return m;
}

// Direct definition: a cell survives iff it is consistent and every cell
// whose centre lies within the radius carries the same pattern.
std::vector<std::uint8_t> brute_force_filter(const ReadoutMap& m, double radius) {
  std::vector<std::uint8_t> kept(m.cells.size(), 0);
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    if (!m.cells[c].consensus) continue;
    bool keep = true;
    for (std::size_t o = 0; o < m.cells.size(); ++o) {
      const double d = std::hypot(m.cells[c].f_a - m.cells[o].f_a, m.cells[c].f_b - m.cells[o].f_b);
      if (d <= radius * (1 + 1e-12) && m.cells[o].consensus != m.cells[c].consensus) keep = false;
    }
    kept[c] = keep;
  }
  return kept;
}

}  // namespace

TEST(Pattern, BitOrderFollowsPairOrder) {
  const std::vector<PairRaw> run{{0.1, 0, 0}, {0.4, 9, 9}, {0.2, 1, 0}, {0.5, 7, 7}};
  EXPECT_EQ(pattern_code(run, {Scheme::variance, 0.28}).bits, 0b0101u);
  EXPECT_EQ(pattern_code(run, {Scheme::direct_counter, 6}).bits, 0b0101u);
  EXPECT_EQ(pattern_code(run, {Scheme::flipflop_counter, 1}).bits, 0b0101u);
  EXPECT_EQ(pattern_code(run, {Scheme::variance, 0.0}).bits, 0u);
  EXPECT_THROW(pattern_code(std::vector<PairRaw>(64), {}), std::invalid_argument);
}

TEST(Pattern, Consensus) {
  std::vector<PatternCode> codes(10, PatternCode{5});
  EXPECT_EQ(consensus(codes), PatternCode{5});
  codes[7] = PatternCode{4};
  EXPECT_FALSE(consensus(codes).has_value());
  EXPECT_FALSE(consensus({}).has_value());
  EXPECT_EQ((MapCell{1, 2, std::nullopt}).code(), -1);
  EXPECT_EQ((MapCell{1, 2, PatternCode{63}}).code(), 63);
}

TEST(Grid, AxesAndRowMajorOrder) {
  const GridAxis ax{470e6, 670e6, 201};
  EXPECT_DOUBLE_EQ(ax.at(0), 470e6);
  EXPECT_DOUBLE_EQ(ax.at(200), 670e6);
  EXPECT_DOUBLE_EQ(ax.pitch(), 1e6);
  EXPECT_EQ((GridAxis{5e8, 5e8, 1}).at(0), 5e8);
  EXPECT_TRUE(std::isinf((GridAxis{5e8, 5e8, 1}).pitch()));
  const GridSpec g{{1e8, 2e8, 3}, {1e8, 2e8, 4}};
  EXPECT_EQ(g.cells(), 12u);
  EXPECT_EQ(g.coords(5), (std::pair<std::size_t, std::size_t>{1, 1}));
  EXPECT_EQ(g.coords(11), (std::pair<std::size_t, std::size_t>{2, 3}));
  EXPECT_THROW((GridSpec{{1e8, 2e8, 0}, {1e8, 2e8, 1}}).validate(), std::invalid_argument);
  EXPECT_THROW((GridSpec{{2e8, 1e8, 3}, {1e8, 2e8, 1}}).validate(), std::invalid_argument);
}

TEST(Protocol, Validation) {
  EXPECT_NO_THROW(SimProtocol{}.validate(1e-10));
  EXPECT_THROW((SimProtocol{0.5e-6, 0.0}).validate(1e-10), std::invalid_argument);
  EXPECT_THROW((SimProtocol{0.5e-6, 0.5e-6, 0}).validate(1e-10), std::invalid_argument);
  EXPECT_THROW((SimProtocol{0.5e-6, 0.55e-10}).validate(1e-10), std::invalid_argument);
  SimProtocol neg;
  neg.counter_limit = -1;
  EXPECT_THROW(neg.validate(1e-10), std::invalid_argument);
}

TEST(Map, NeedsTwoInputs) {
  PaperTopologySpec spec;
  spec.input_frequencies = {600e6};
  EXPECT_THROW(simulate_map(build_paper_network(spec), {}, small_grid(1), 1), std::invalid_argument);
}

// Every map cell equals the single-point path run with the same stream ids.
TEST(Map, CellsMatchSinglePointRuns) {
  const NetworkConfig net = build_paper_network({.noise_fwhm = 1e6});
  const GridSpec grid = small_grid(3);
  const DetectorSpec det{Scheme::variance, 0.28};
  const ReadoutMap map = build_map(net, {}, det, grid, 42, {.workers = 1});
  ASSERT_EQ(map.cells.size(), 9u);
  for (std::size_t c = 0; c < 9; ++c) {
    const MapCell p = classify_point(net, {}, det, {map.cells[c].f_a, map.cells[c].f_b}, 42, c);
    EXPECT_EQ(p.consensus, map.cells[c].consensus) << c;
  }
  const ReadoutMap one = build_map(net, {}, det, {{600e6, 600e6, 1}, {550e6, 550e6, 1}}, 42);
  EXPECT_EQ(one.cells[0].consensus, classify_point(net, {}, det, {600e6, 550e6}, 42).consensus);
}

TEST(Map, WorkerAndTaskSizeIndependence) {
  const NetworkConfig net = build_paper_network({.noise_fwhm = 2e6});
  const GridSpec grid = small_grid(4);
  const RawMap a = simulate_map(net, {}, grid, 7, {.workers = 1, .cells_per_task = 1});
  const RawMap b = simulate_map(net, {}, grid, 7, {.workers = 3, .cells_per_task = 5});
  const RawMap c = simulate_map(net, {}, grid, 7, {.workers = 2, .cells_per_task = 16});
  EXPECT_EQ(a.raw, b.raw);
  EXPECT_EQ(a.raw, c.raw);
  const RawMap d = simulate_map(net, {}, grid, 8, {.workers = 1});
  EXPECT_NE(a.raw, d.raw);
}

// Extra windows read from the same runs equal separate runs at that window.
TEST(Map, ExtraWindowsEqualSeparateRuns) {
  const NetworkConfig net = build_paper_network({.noise_fwhm = 1e6});
  const GridSpec grid = small_grid(2);
  const RawMap multi = simulate_map(net, {}, grid, 3, {.windows = {0.1e-6, 0.3e-6}});
  ASSERT_EQ(multi.windows.size(), 3u);
  for (double tau : {0.1e-6, 0.3e-6, 0.5e-6}) {
    SimProtocol p;
    p.tau = tau;
    const RawMap single = simulate_map(net, p, grid, 3);
    const std::size_t w = window_index(multi, tau);
    for (std::size_t cell = 0; cell < grid.cells(); ++cell)
      for (std::size_t rep = 0; rep < p.repetitions; ++rep) {
        const auto x = multi.run(cell, w, rep), y = single.run(cell, 0, rep);
        ASSERT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end()));
      }
  }
  EXPECT_THROW(window_index(multi, 0.2e-6), std::invalid_argument);
  EXPECT_DOUBLE_EQ(classify(multi, {}, 0.1e-6).meta.protocol.tau, 0.1e-6);
}

TEST(Map, MetadataAndProgress) {
  const NetworkConfig net = build_paper_network({});
  std::size_t calls = 0, last = 0;
  MapRunOptions opt;
  opt.cells_per_task = 2;
  opt.progress = [&](std::size_t done, std::size_t total) {
    ++calls;
    last = done;
    EXPECT_EQ(total, 9u);
  };
  const ReadoutMap m = build_map(net, {}, {Scheme::direct_counter, 6}, small_grid(3), 5, opt);
  EXPECT_EQ(calls, 5u);
  EXPECT_EQ(last, 9u);
  EXPECT_EQ(m.meta.seed, 5u);
  EXPECT_EQ(m.meta.network_digest, digest(net));
  EXPECT_EQ(m.meta.detector.scheme, Scheme::direct_counter);
}

// Without input coupling the inputs are irrelevant and the detuned cores
// (20 MHz apart, 2 k_cc = 8 MHz) never lock: one pattern everywhere.
TEST(Map, DecoupledInputsGiveUniformMap) {
  const NetworkConfig net = build_paper_network({.k_ic = 0.0});
  for (Scheme s : all_schemes) {
    const ReadoutMap m = build_map(net, {}, Thresholds{}.spec(s), small_grid(3), 1);
    for (const auto& c : m.cells) EXPECT_EQ(c.consensus, PatternCode{0}) << scheme_name(s);
  }
}

TEST(Filter, RadiusZeroKeepsConsistentCells) {
  const ReadoutMap m = synthetic_map(3, 3, 1e6, {1, 2, 3, -1, 1, 1, 4, 4, 4});
  const FilteredMap f = robust_filter(m, 0.0);
  EXPECT_TRUE(f.degenerate);
  EXPECT_EQ(f.kept, (std::vector<std::uint8_t>{1, 1, 1, 0, 1, 1, 1, 1, 1}));
  EXPECT_THROW(robust_filter(m, -1.0), std::invalid_argument);
}

TEST(Filter, AdjacencyAtOnePitch) {
  std::vector<std::int64_t> codes(25, 1);
  codes[12] = 2;
  const ReadoutMap m = synthetic_map(5, 5, 1e6, codes);
  const FilteredMap f = robust_filter(m, 1e6);
  EXPECT_FALSE(f.degenerate);
  for (std::size_t c : {7, 11, 12, 13, 17}) EXPECT_FALSE(f.kept[c]) << c;
  for (std::size_t c : {6, 8, 16, 18}) EXPECT_TRUE(f.kept[c]) << c;
  const FilteredMap g = robust_filter(m, 1.5e6);
  for (std::size_t c : {6, 8, 16, 18}) EXPECT_FALSE(g.kept[c]) << c;
  EXPECT_EQ(count_patterns(g).count, 1u);
  EXPECT_EQ(count_patterns(f).count, 1u);
}

TEST(Filter, MatchesBruteForceOnRandomMaps) {
  std::mt19937 gen(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t na = 2 + gen() % 9, nb = 2 + gen() % 9;
    std::vector<std::int64_t> codes(na * nb);
    for (auto& c : codes) c = static_cast<std::int64_t>(gen() % 10) < 8 ? (gen() % 3 == 0 ? 1 : 0) : -1;
    // smooth the random field a little so some cells survive
    for (std::size_t c = 1; c < codes.size(); ++c)
      if (gen() % 4) codes[c] = codes[c - 1];
    const ReadoutMap m = synthetic_map(na, nb, 1e6, codes);
    for (double r : {0.0, 0.5e6, 1e6, 1.5e6, 2.3e6, 3e6, 4.5e6}) {
      EXPECT_EQ(robust_filter(m, r).kept, brute_force_filter(m, r)) << trial << " r=" << r;
    }
  }
}

TEST(Filter, LargerRadiusKeepsSubset) {
  std::mt19937 gen(9);
  std::vector<std::int64_t> codes(144);
  for (std::size_t c = 0; c < codes.size(); ++c) codes[c] = (c / 12) / 4 + ((c % 12) / 5) * 3 - (gen() % 30 == 0);
  const ReadoutMap m = synthetic_map(12, 12, 1e6, codes);
  std::vector<std::uint8_t> prev = robust_filter(m, 0.0).kept;
  for (double r = 0.5e6; r < 6e6; r += 0.5e6) {
    const auto kept = robust_filter(m, r).kept;
    for (std::size_t c = 0; c < kept.size(); ++c) EXPECT_LE(kept[c], prev[c]) << r << " " << c;
    prev = kept;
  }
}

TEST(Count, EmptyAndSorted) {
  const ReadoutMap all_bad = synthetic_map(2, 2, 1e6, {-1, -1, -1, -1});
  EXPECT_EQ(count_patterns(robust_filter(all_bad, 0.0)).count, 0u);
  const ReadoutMap m = synthetic_map(2, 3, 1e6, {9, 3, 3, 9, 0, -1});
  const PatternCount pc = count_patterns(robust_filter(m, 0.0));
  EXPECT_EQ(pc.count, 3u);
  EXPECT_EQ(pc.codes, (std::vector<PatternCode>{{0}, {3}, {9}}));
}

TEST(Match, SelfComplementAndJointInconsistency) {
  const ReadoutMap a = synthetic_map(2, 2, 1e6, {1, 2, -1, -1});
  EXPECT_DOUBLE_EQ(map_match(a, a), 100.0);
  EXPECT_DOUBLE_EQ(map_match(a, a, false), 100.0);
  const ReadoutMap b = synthetic_map(2, 2, 1e6, {2, 1, 1, -1});
  EXPECT_DOUBLE_EQ(map_match(a, b), 25.0);
  EXPECT_DOUBLE_EQ(map_match(a, b, false), 0.0);
  const ReadoutMap c = synthetic_map(2, 2, 1e6, {-1, -1, -1, -1});
  EXPECT_DOUBLE_EQ(map_match(c, c, false), 100.0);
  EXPECT_DOUBLE_EQ(inconsistent_fraction(a), 0.5);
  EXPECT_THROW(map_match(a, synthetic_map(1, 4, 1e6, {1, 2, 3, 4})), std::invalid_argument);
}

TEST(Map, RebuildIsIdempotent) {
  const NetworkConfig net = build_paper_network({.noise_fwhm = 1e6});
  const DetectorSpec det{Scheme::flipflop_counter, 6};
  const ReadoutMap a = build_map(net, {}, det, small_grid(3), 11);
  const ReadoutMap b = build_map(net, {}, det, small_grid(3), 11);
  EXPECT_DOUBLE_EQ(map_match(a, b, false), 100.0);
  for (std::size_t c = 0; c < a.cells.size(); ++c) EXPECT_EQ(a.cells[c].code(), b.cells[c].code());
}
