#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include <png.h>

#include "lulc/geo/catalog.hpp"
#include "lulc/geo/chip_archive.hpp"
#include "lulc/geo/polygon.hpp"
#include "lulc/geo/scene_io.hpp"
#include "lulc/geo/stats.hpp"
#include "lulc/geo/synth.hpp"
#include "lulc/geo/tiling.hpp"
#include "test_support.hpp"

using namespace lulc;
using namespace lulc::geo;
using namespace std::chrono;

namespace {

SceneMeta meta(std::string id, Date d, double cloud) { return {std::move(id), d, cloud, ""}; }

RoiPolygon unit_square() {
  return {{{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}}};
}

Scene constant_scene(std::size_t w, std::size_t h, GeoTransform gt = {0.0, 1.0, 1.0 / 64, -1.0 / 64}) {
  Scene s;
  s.meta.scene_id = "s";
  s.width = w;
  s.height = h;
  s.pixels.assign(w * h * 3, 0.5f);
  s.nodata_mask = Mask(w, h, true);
  s.geotransform = gt;
  return s;
}

// Winding number, written independently of the crossing-parity implementation.
int winding_number(LonLat p, const Ring& ring) {
  int wn = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const auto& a = ring[i];
    const auto& b = ring[i + 1];
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat);
    if (a.lat <= p.lat) {
      if (b.lat > p.lat && cross > 0) ++wn;
    } else if (b.lat <= p.lat && cross < 0) {
      --wn;
    }
  }
  return wn;
}

double distance_to_segment(LonLat p, LonLat a, LonLat b) {
  const double dx = b.lon - a.lon, dy = b.lat - a.lat;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.lon - (a.lon + t * dx), p.lat - (a.lat + t * dy));
}

// Random star-shaped (hence simple) polygon around (cx, cy).
Ring random_star(Rng& rng, std::size_t vertices, double cx, double cy, double rmin, double rmax) {
  Ring ring;
  for (std::size_t i = 0; i < vertices; ++i) {
    const double angle = 2.0 * std::numbers::pi * (static_cast<double>(i) + 0.8 * uniform01(rng)) / static_cast<double>(vertices);
    const double radius = uniform(rng, rmin, rmax);
    ring.push_back({cx + radius * std::cos(angle), cy + radius * std::sin(angle)});
  }
  ring.push_back(ring.front());
  return ring;
}

}  // namespace

// ---- filter_catalog -------------------------------------------------------

TEST(FilterCatalog, KeepsScenesBelowCloudThresholdInSeason) {
  const Date start = 2023y / June / 1, end = 2023y / August / 31;
  std::vector<SceneMeta> cat = {meta("a", 2023y / June / 10, 5), meta("b", 2023y / July / 1, 12),
                                meta("c", 2023y / August / 20, 9)};
  auto out = filter_catalog(cat, 10.0, start, end);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].scene_id, "a");
  EXPECT_EQ(out[1].scene_id, "c");
}

TEST(FilterCatalog, EmptyCatalog) {
  EXPECT_TRUE(filter_catalog({}, 10.0, 2023y / June / 1, 2023y / August / 31).empty());
}

TEST(FilterCatalog, MalformedRangeRejected) {
  EXPECT_THROW(filter_catalog({}, 10.0, 2023y / August / 1, 2023y / June / 1), InvalidArgument);
  EXPECT_THROW(filter_catalog({}, 120.0, 2023y / June / 1, 2023y / August / 1), InvalidArgument);
}

TEST(FilterCatalog, DateBoundsAreInclusive) {
  std::vector<SceneMeta> cat = {meta("first", 2023y / June / 1, 0), meta("last", 2023y / August / 31, 0),
                                meta("after", 2023y / September / 1, 0)};
  auto out = filter_catalog(cat, 10.0, 2023y / June / 1, 2023y / August / 31);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].scene_id, "last");
}

TEST(FilterCatalog, MatchesLinearScanOracleOnRandomCatalogs) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SceneMeta> cat;
    const std::size_t n = 1 + uniform_index(rng, 60);
    const sys_days base = sys_days(2023y / January / 1);
    for (std::size_t i = 0; i < n; ++i)
      cat.push_back(meta("s" + std::to_string(i), Date(base + days(uniform_index(rng, 365))), uniform(rng, 0.0, 100.0)));
    // Full range with max cloud 100 keeps everything, in order.
    auto all = filter_catalog(cat, 100.0, 2023y / January / 1, 2023y / December / 31);
    ASSERT_EQ(all.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(all[i].scene_id, cat[i].scene_id);

    const double max_cloud = uniform(rng, 0.0, 100.0);
    const Date lo = Date(base + days(uniform_index(rng, 180)));
    const Date hi = Date(sys_days(lo) + days(uniform_index(rng, 180)));
    std::vector<std::string> expected;
    for (const auto& s : cat)
      if (s.cloud_cover_pct < max_cloud && sys_days(s.acquisition_date) >= sys_days(lo) &&
          sys_days(s.acquisition_date) <= sys_days(hi))
        expected.push_back(s.scene_id);
    std::vector<std::string> got;
    for (const auto& s : filter_catalog(cat, max_cloud, lo, hi)) got.push_back(s.scene_id);
    EXPECT_EQ(got, expected);
  }
}

TEST(Catalog, ManifestRoundTripAndErrors) {
  TempDir tmp;
  std::vector<SceneMeta> cat = {{"a", 2023y / June / 3, 4.5, (tmp.path / "scenes/a.hdr").string()},
                                {"b", 2023y / July / 9, 11, (tmp.path / "scenes/b.hdr").string()}};
  write_catalog(tmp.path / "catalog.csv", cat);
  auto back = read_catalog(tmp.path / "catalog.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].scene_id, "b");
  EXPECT_EQ(back[1].acquisition_date, cat[1].acquisition_date);
  EXPECT_DOUBLE_EQ(back[0].cloud_cover_pct, 4.5);
  EXPECT_EQ(std::filesystem::path(back[0].path), std::filesystem::path(cat[0].path));
  EXPECT_EQ(read_text_file(tmp.path / "catalog.csv").substr(0, 29), "scene_id,date,cloud_pct,path\n");

  write_text_file(tmp.path / "bad.csv", "scene_id,date,cloud_pct,path\nx,2023-02-30,1,x.hdr\n");
  EXPECT_THROW(read_catalog(tmp.path / "bad.csv"), FormatError);
  write_text_file(tmp.path / "dup.csv", "scene_id,date,cloud_pct,path\nx,2023-02-01,1,x.hdr\nx,2023-02-02,1,y.hdr\n");
  EXPECT_THROW(read_catalog(tmp.path / "dup.csv"), FormatError);
}

// ---- point_in_polygon -----------------------------------------------------

TEST(PointInPolygon, UnitSquare) {
  EXPECT_TRUE(point_in_polygon({0.5, 0.5}, unit_square()));
  EXPECT_FALSE(point_in_polygon({2, 2}, unit_square()));
}

TEST(PointInPolygon, HalfOpenBoundaryConvention) {
  // Bottom/left edges inside, top/right edges outside.
  EXPECT_TRUE(point_in_polygon({0.0, 0.5}, unit_square()));
  EXPECT_TRUE(point_in_polygon({0.5, 0.0}, unit_square()));
  EXPECT_FALSE(point_in_polygon({1.0, 0.5}, unit_square()));
  EXPECT_FALSE(point_in_polygon({0.5, 1.0}, unit_square()));
}

TEST(PointInPolygon, HolesAreOutside) {
  RoiPolygon donut = unit_square();
  donut.rings.push_back({{0.25, 0.25}, {0.25, 0.75}, {0.75, 0.75}, {0.75, 0.25}, {0.25, 0.25}});
  EXPECT_FALSE(point_in_polygon({0.5, 0.5}, donut));
  EXPECT_TRUE(point_in_polygon({0.1, 0.5}, donut));
}

TEST(PointInPolygon, MatchesWindingNumberOracle) {
  Rng rng(2024);
  const Ring ring = random_star(rng, 12, 0.0, 0.0, 0.3, 1.0);
  const RoiPolygon poly{{ring}};
  int compared = 0;
  for (int i = 0; i < 10000; ++i) {
    const LonLat p{uniform(rng, -1.2, 1.2), uniform(rng, -1.2, 1.2)};
    double dmin = 1e9;
    for (std::size_t k = 0; k + 1 < ring.size(); ++k) dmin = std::min(dmin, distance_to_segment(p, ring[k], ring[k + 1]));
    if (dmin < 1e-12) continue;
    ++compared;
    EXPECT_EQ(point_in_polygon(p, poly), winding_number(p, ring) != 0) << p.lon << "," << p.lat;
  }
  EXPECT_GT(compared, 9990);
}

TEST(RoiGeoJson, ParsesPolygonAndMultiPolygon) {
  auto roi = parse_roi_geojson(R"({"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]})");
  ASSERT_EQ(roi.polygons.size(), 1u);
  EXPECT_TRUE(point_in_roi({0.5, 0.5}, roi));
  auto multi = parse_roi_geojson(R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{},"geometry":{"type":"MultiPolygon","coordinates":[
        [[[0,0],[1,0],[1,1],[0,1],[0,0]]],[[[5,5],[6,5],[6,6],[5,6],[5,5]]]]}}]})");
  ASSERT_EQ(multi.polygons.size(), 2u);
  EXPECT_TRUE(point_in_roi({5.5, 5.5}, multi));
  EXPECT_FALSE(point_in_roi({3, 3}, multi));
}

TEST(RoiGeoJson, RejectsDegenerateInput) {
  EXPECT_THROW(parse_roi_geojson(R"({"type":"Polygon","coordinates":[[[0,0],[1,0],[0,0]]]})"), FormatError);
  EXPECT_THROW(parse_roi_geojson(R"({"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]})"), FormatError);
  EXPECT_THROW(parse_roi_geojson(R"({"type":"Polygon","coordinates":[[[0,0],[200,0],[1,1],[0,0]]]})"), FormatError);
  EXPECT_THROW(parse_roi_geojson(R"({"type":"Point","coordinates":[0,0]})"), FormatError);
  EXPECT_THROW(parse_roi_geojson("{not json"), FormatError);
}

// ---- rasterize_mask -------------------------------------------------------

TEST(RasterizeMask, FullCoverAndDisjoint) {
  Scene s = constant_scene(64, 64);  // spans lon [0,1], lat [0,1]
  RoiPolygon cover{{{{-1, -1}, {2, -1}, {2, 2}, {-1, 2}, {-1, -1}}}};
  EXPECT_EQ(rasterize_mask(s, cover).count(), 64u * 64u);
  RoiPolygon far{{{{10, 10}, {11, 10}, {11, 11}, {10, 11}, {10, 10}}}};
  EXPECT_EQ(rasterize_mask(s, far).count(), 0u);
}

TEST(RasterizeMask, MatchesPerPixelLoop) {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    Scene s = constant_scene(64, 64);
    for (int k = 0; k < 40; ++k) s.nodata_mask.set(uniform_index(rng, 64), uniform_index(rng, 64), false);
    const RoiPolygon poly{{random_star(rng, 12, 0.5, 0.5, 0.1, 0.6)}};
    const Mask m = rasterize_mask(s, poly);
    for (std::size_t r = 0; r < 64; ++r)
      for (std::size_t c = 0; c < 64; ++c) {
        const LonLat centre{s.geotransform.lon_at(c + 0.5), s.geotransform.lat_at(r + 0.5)};
        ASSERT_EQ(m.at(r, c), s.nodata_mask.at(r, c) && point_in_polygon(centre, poly));
      }
  }
}

// ---- tile_scene -----------------------------------------------------------

TEST(TileScene, DropsBorderRemainder) {
  Scene s = constant_scene(130, 130);
  UuidGenerator ids(1);
  auto tiles = tile_scene(s, Mask(130, 130, true), ids);
  ASSERT_EQ(tiles.size(), 4u);
  const std::vector<std::pair<std::size_t, std::size_t>> expected = {{0, 0}, {0, 64}, {64, 0}, {64, 64}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(tiles[i].row_off, expected[i].first);
    EXPECT_EQ(tiles[i].col_off, expected[i].second);
    EXPECT_EQ(tiles[i].data.size(), 64u * 64u * 3u);
  }
}

TEST(TileScene, SingleTileScene) {
  Scene s = constant_scene(64, 64);
  UuidGenerator ids(1);
  auto tiles = tile_scene(s, Mask(64, 64, true), ids);
  ASSERT_EQ(tiles.size(), 1u);
  EXPECT_EQ(tiles[0].bounds, (Bounds{0.0, 0.0, 1.0, 1.0}));
}

TEST(TileScene, OneInvalidPixelKillsItsTile) {
  Scene s = constant_scene(128, 128);
  Mask m(128, 128, true);
  m.set(10, 10, false);
  UuidGenerator ids(1);
  auto tiles = tile_scene(s, m, ids);
  ASSERT_EQ(tiles.size(), 3u);
  for (const auto& t : tiles) EXPECT_FALSE(t.row_off == 0 && t.col_off == 0);
}

TEST(TileScene, TileLargerThanSceneGivesNothing) {
  Scene s = constant_scene(64, 64);
  UuidGenerator ids(1);
  EXPECT_TRUE(tile_scene(s, Mask(64, 64, true), ids, {128, 1.0}).empty());
}

TEST(TileScene, MinValidFraction) {
  Scene s = constant_scene(64, 64);
  Mask m(64, 64, true);
  for (std::size_t c = 0; c < 64; ++c) m.set(0, c, false);  // 63/64 valid
  UuidGenerator ids(1);
  EXPECT_EQ(tile_scene(s, m, ids, {64, 1.0}).size(), 0u);
  EXPECT_EQ(tile_scene(s, m, ids, {64, 0.9}).size(), 1u);
  EXPECT_EQ(tile_scene(s, Mask(64, 64, false), ids, {64, 0.0}).size(), 0u);
}

TEST(TileScene, MatchesEnumerationOracleAndInvariants) {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t w = 16 + uniform_index(rng, 80), h = 16 + uniform_index(rng, 80), ts = 4 + uniform_index(rng, 20);
    Scene s = constant_scene(w, h);
    Mask m(w, h, true);
    const auto holes = uniform_index(rng, 30);
    for (std::size_t k = 0; k < holes; ++k) m.set(uniform_index(rng, h), uniform_index(rng, w), false);
    UuidGenerator ids(trial);
    auto tiles = tile_scene(s, m, ids, {ts, 1.0});
    std::vector<std::pair<std::size_t, std::size_t>> expected;
    for (std::size_t r0 = 0; r0 + ts <= h; r0 += ts)
      for (std::size_t c0 = 0; c0 + ts <= w; c0 += ts) {
        bool ok = true;
        for (std::size_t r = r0; r < r0 + ts; ++r)
          for (std::size_t c = c0; c < c0 + ts; ++c) ok = ok && m.at(r, c);
        if (ok) expected.emplace_back(r0, c0);
      }
    ASSERT_EQ(tiles.size(), expected.size());
    std::set<std::string> uuids;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      EXPECT_EQ(tiles[i].row_off, expected[i].first);
      EXPECT_EQ(tiles[i].col_off, expected[i].second);
      EXPECT_EQ(tiles[i].row_off % ts, 0u);
      uuids.insert(tiles[i].uuid);
    }
    EXPECT_EQ(uuids.size(), tiles.size());
  }
}

TEST(TileScene, OutputIndependentOfWorkerCount) {
  Scene s = constant_scene(200, 200);
  Rng rng(3);
  for (auto& v : s.pixels) v = static_cast<float>(uniform01(rng));
  Mask m(200, 200, true);
  m.set(70, 70, false);
  UuidGenerator a(11), b(11);
  ThreadScope one(1);
  auto t1 = tile_scene(s, m, a, {32, 1.0});
  set_num_threads(4);
  auto t4 = tile_scene(s, m, b, {32, 1.0});
  ASSERT_EQ(t1.size(), t4.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    EXPECT_EQ(t1[i].uuid, t4[i].uuid);
    EXPECT_EQ(t1[i].data, t4[i].data);
  }
}

TEST(Uuid, Version4FormatAndUniqueness) {
  UuidGenerator gen(42);
  std::set<std::string> seen;
  for (int i = 0; i < 5000; ++i) {
    auto u = gen.next();
    ASSERT_EQ(u.size(), 36u);
    EXPECT_EQ(u[14], '4');
    EXPECT_TRUE(u[19] == '8' || u[19] == '9' || u[19] == 'a' || u[19] == 'b');
    seen.insert(u);
  }
  EXPECT_EQ(seen.size(), 5000u);
  UuidGenerator x(42), y(42);
  EXPECT_EQ(x.next(), y.next());
}

// ---- channel stats / standardize ------------------------------------------

namespace {
TileChip chip_of(std::size_t size, const std::vector<float>& data) {
  TileChip t;
  t.size = size;
  t.bands = 3;
  t.data = data;
  return t;
}
}  // namespace

TEST(ChannelStatsTest, ConstantChipFloorsStd) {
  std::vector<float> d(3 * 4 * 4);
  for (std::size_t b = 0; b < 3; ++b) std::fill_n(d.begin() + b * 16, 16, static_cast<float>(b + 1));
  auto s = compute_channel_stats({chip_of(4, d)});
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_DOUBLE_EQ(s.mean[b], b + 1.0);
    EXPECT_DOUBLE_EQ(s.stddev[b], 1e-6);
  }
}

TEST(ChannelStatsTest, TwoPointDistribution) {
  std::vector<float> d(3 * 4 * 4, 0.0f);
  for (std::size_t i = 0; i < 16; ++i) d[i] = (i % 2) ? 2.0f : 0.0f;
  auto s = compute_channel_stats({chip_of(4, d)});
  EXPECT_NEAR(s.mean[0], 1.0, 1e-12);
  EXPECT_NEAR(s.stddev[0], 1.0, 1e-12);
}

TEST(ChannelStatsTest, EmptyRejected) { EXPECT_THROW(compute_channel_stats({}), InvalidArgument); }

TEST(ChannelStatsTest, MatchesTwoPassOracle) {
  Rng rng(17);
  std::vector<TileChip> chips;
  for (int i = 0; i < 50; ++i) {
    std::vector<float> d(3 * 16 * 16);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = static_cast<float>(uniform(rng, -3, 7) * (1 + k / 256));
    chips.push_back(chip_of(16, d));
  }
  auto s = compute_channel_stats(chips);
  for (std::size_t b = 0; b < 3; ++b) {
    long double sum = 0, n = 0;
    for (const auto& c : chips)
      for (std::size_t i = 0; i < 256; ++i) sum += c.data[b * 256 + i], n += 1;
    const long double mean = sum / n;
    long double sq = 0;
    for (const auto& c : chips)
      for (std::size_t i = 0; i < 256; ++i) sq += (c.data[b * 256 + i] - mean) * (c.data[b * 256 + i] - mean);
    const double sd = std::sqrt(static_cast<double>(sq / n));
    EXPECT_NEAR(s.mean[b], static_cast<double>(mean), 1e-5 * std::fabs(static_cast<double>(mean)));
    EXPECT_NEAR(s.stddev[b], sd, 1e-5 * sd);
  }
}

TEST(Standardize, MeanChipBecomesZeroAndRoundTrips) {
  ChannelStats st{{0.2, 0.4, 0.6}, {0.1, 0.2, 0.3}};
  std::vector<float> d(3 * 8 * 8);
  for (std::size_t b = 0; b < 3; ++b) std::fill_n(d.begin() + b * 64, 64, static_cast<float>(st.mean[b]));
  TileChip c = chip_of(8, d);
  c.uuid = "u";
  c.label = 3;
  auto z = standardize(c, st);
  for (float v : z.data) EXPECT_NEAR(v, 0.0f, 1e-6);
  EXPECT_EQ(z.uuid, "u");
  EXPECT_EQ(z.label, 3);

  Rng rng(1);
  for (auto& v : c.data) v = static_cast<float>(uniform01(rng));
  auto back = unstandardize(standardize(c, st), st);
  for (std::size_t i = 0; i < c.data.size(); ++i) EXPECT_NEAR(back.data[i], c.data[i], 1e-6);
}

TEST(Standardize, PopulationBecomesZeroMeanUnitVariance) {
  Rng rng(8);
  std::vector<TileChip> chips;
  for (int i = 0; i < 30; ++i) {
    std::vector<float> d(3 * 16 * 16);
    for (auto& v : d) v = static_cast<float>(uniform(rng, 0.1, 0.9));
    chips.push_back(chip_of(16, d));
  }
  const auto st = compute_channel_stats(chips);
  std::vector<TileChip> z;
  for (const auto& c : chips) z.push_back(standardize(c, st));
  const auto zs = compute_channel_stats(z);
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_LT(std::fabs(zs.mean[b]), 1e-5);
    EXPECT_NEAR(zs.stddev[b], 1.0, 1e-4);
  }
}

TEST(ChannelStatsTest, FileRoundTrip) {
  TempDir tmp;
  ChannelStats st{{0.25, 0.5, 0.125}, {0.1, 0.2, 0.3}};
  write_channel_stats(tmp.path / "stats.csv", st);
  auto back = read_channel_stats(tmp.path / "stats.csv");
  EXPECT_EQ(back.mean, st.mean);
  EXPECT_EQ(back.stddev, st.stddev);
}

// ---- synth ----------------------------------------------------------------

TEST(Synth, DeterministicForSeed) {
  SynthSpec spec;
  auto a = synth_scene(123, spec);
  auto b = synth_scene(123, spec);
  EXPECT_EQ(a.scene.pixels, b.scene.pixels);
  EXPECT_EQ(a.truth.values, b.truth.values);
  auto c = synth_scene(124, spec);
  EXPECT_NE(a.scene.pixels, c.scene.pixels);
}

TEST(Synth, SingleClassIsConstantTruth) {
  SynthSpec spec;
  spec.layout = {LayoutKind::constant, 64, 1, 0};
  auto r = synth_scene(1, spec);
  for (auto v : r.truth.values) EXPECT_EQ(v, 0);
}

TEST(Synth, CheckerboardClassCounts) {
  // 256x256 with 64-px blocks: block (i, j) holds class (i + j) mod 10, i, j in 0..3.
  // Diagonal sums 0..6 occur 1,2,3,4,3,2,1 times; each block is 4096 pixels.
  SynthSpec spec;
  spec.layout = {LayoutKind::checkerboard, 64, 10, 0};
  auto r = synth_scene(9, spec);
  std::array<std::size_t, 10> counts{};
  for (auto v : r.truth.values) ++counts[v];
  const std::array<std::size_t, 10> expected = {4096, 8192, 12288, 16384, 12288, 8192, 4096, 0, 0, 0};
  EXPECT_EQ(counts, expected);
  for (float v : r.scene.pixels) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Synth, RejectsSmallScenes) {
  SynthSpec spec;
  spec.width = 32;
  EXPECT_THROW(synth_scene(1, spec), InvalidArgument);
}

// ---- scene container / archive ---------------------------------------------

TEST(SceneContainer, RoundTripPreservesPixelsAndMask) {
  TempDir tmp;
  SynthSpec spec;
  spec.width = 96;
  spec.height = 80;
  spec.scene_id = "roundtrip";
  auto r = synth_scene(4, spec);
  r.scene.meta.acquisition_date = 2023y / July / 4;
  r.scene.meta.cloud_cover_pct = 3.5;
  r.scene.nodata_mask.set(5, 7, false);
  write_scene(tmp.path / "roundtrip.hdr", r.scene);
  auto back = read_scene(tmp.path / "roundtrip.hdr");
  EXPECT_EQ(back.width, 96u);
  EXPECT_EQ(back.height, 80u);
  EXPECT_EQ(back.meta.scene_id, "roundtrip");
  EXPECT_EQ(back.meta.acquisition_date, r.scene.meta.acquisition_date);
  EXPECT_EQ(back.nodata_mask.values, r.scene.nodata_mask.values);
  EXPECT_EQ(back.geotransform.pixel_height, r.scene.geotransform.pixel_height);
  for (std::size_t i = 0; i < back.pixels.size(); ++i) {
    const std::size_t pix = i % (96 * 80);
    if (r.scene.nodata_mask.values[pix]) {
      ASSERT_EQ(back.pixels[i], r.scene.pixels[i]);
    }
  }
  // 96*80*3 floats, little-endian
  EXPECT_EQ(std::filesystem::file_size(tmp.path / "roundtrip.f32"), 96u * 80u * 3u * 4u);
}

TEST(SceneContainer, NumericNodataAndTruncation) {
  TempDir tmp;
  write_text_file(tmp.path / "s.hdr",
                  "width = 2\nheight = 1\nbands = 1\norigin_lon = 0\norigin_lat = 0\npixel_w = 1\npixel_h = -1\n"
                  "nodata = -9999\ndata_file = s.f32\n");
  std::vector<float> px = {1.0f, -9999.0f};
  write_f32_file(tmp.path / "s.f32", px);
  auto s = read_scene(tmp.path / "s.hdr");
  EXPECT_TRUE(s.nodata_mask.at(0, 0));
  EXPECT_FALSE(s.nodata_mask.at(0, 1));
  write_f32_file(tmp.path / "s.f32", std::vector<float>{1.0f});
  EXPECT_THROW(read_scene(tmp.path / "s.hdr"), TruncatedFileError);
}

TEST(SceneContainer, PngImporter) {
  TempDir tmp;
  // 2x2 RGBA: one transparent pixel.
  const unsigned char rgba[16] = {255, 0, 0, 255, 0, 255, 0, 255, 0, 0, 255, 255, 10, 20, 30, 0};
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = 2;
  img.height = 2;
  img.format = PNG_FORMAT_RGBA;
  ASSERT_TRUE(png_image_write_to_file(&img, (tmp.path / "p.png").string().c_str(), 0, rgba, 0, nullptr));
  write_text_file(tmp.path / "p.hdr", "origin_lon = 1\norigin_lat = 2\npixel_w = 0.5\npixel_h = -0.5\ndata_file = p.png\n");
  auto s = read_scene(tmp.path / "p.hdr");
  EXPECT_EQ(s.width, 2u);
  EXPECT_FLOAT_EQ(s.at(0, 0, 0), 1.0f);
  EXPECT_FLOAT_EQ(s.at(1, 0, 1), 1.0f);
  EXPECT_FLOAT_EQ(s.at(2, 1, 0), 1.0f);
  EXPECT_FALSE(s.nodata_mask.at(1, 1));
  EXPECT_EQ(s.nodata_mask.count(), 3u);
}

TEST(ChipArchiveTest, RoundTrip) {
  TempDir tmp;
  SynthSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.scene_id = "a";
  auto r = synth_scene(2, spec);
  UuidGenerator ids(3);
  auto chips = tile_scene(r.scene, r.scene.nodata_mask, ids);
  label_tiles(chips, r.truth);
  chips[1].label.reset();
  ChipArchive ar;
  ar.chips = chips;
  ar.scenes["a"] = {"a", 128, 128, 3, 64, r.scene.geotransform};
  write_chip_archive(tmp.path / "chips", ar);
  auto back = read_chip_archive(tmp.path / "chips");
  ASSERT_EQ(back.chips.size(), chips.size());
  for (std::size_t i = 0; i < chips.size(); ++i) {
    EXPECT_EQ(back.chips[i].uuid, chips[i].uuid);
    EXPECT_EQ(back.chips[i].label, chips[i].label);
    EXPECT_EQ(back.chips[i].data, chips[i].data);
    EXPECT_EQ(back.chips[i].bounds, chips[i].bounds);
  }
  EXPECT_EQ(back.chips[0].label, 0);
  EXPECT_EQ(back.chips[3].label, 2);
}
