#include <gtest/gtest.h>

#include <map>
#include <thread>

#include "lulc/bench/confusion.hpp"
#include "lulc/bench/report.hpp"
#include "lulc/core/random.hpp"
#include "test_support.hpp"

using namespace lulc;
using namespace lulc::bench;

// ------------------------------------------------------------------ confusion

TEST(Confusion, PerfectDiagonal) {
  ConfusionMatrix cm;
  for (int c = 0; c < 10; ++c)
    for (int n = 0; n <= c; ++n) cm.update(c, c);
  EXPECT_EQ(*cm.overall_accuracy(), 1.0);
  for (const auto& a : cm.per_class_accuracy()) EXPECT_EQ(*a, 1.0);
}

TEST(Confusion, UniformOnes) {
  ConfusionMatrix cm;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) cm.update(i, j);
  EXPECT_DOUBLE_EQ(*cm.overall_accuracy(), 0.1);
  for (const auto& a : cm.per_class_accuracy()) EXPECT_DOUBLE_EQ(*a, 0.1);
  for (auto n : cm.prediction_counts()) EXPECT_EQ(n, 10u);
}

TEST(Confusion, EmptyAndAbsentRows) {
  ConfusionMatrix cm;
  EXPECT_FALSE(cm.overall_accuracy().has_value());
  cm.update(3, 4);
  const auto pc = cm.per_class_accuracy();
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(pc[i].has_value(), i == 3);
  EXPECT_EQ(*pc[3], 0.0);
  EXPECT_THROW(cm.update(10, 0), IndexError);
  EXPECT_THROW(cm.update(0, -1), IndexError);
}

TEST(Confusion, MatchesCountingOracle) {
  Rng rng = make_rng(1, "cm");
  ConfusionMatrix cm;
  std::map<std::pair<int, int>, std::uint64_t> pairs;
  std::map<int, std::uint64_t> truth, pred;
  std::uint64_t correct = 0;
  for (int n = 0; n < 10000; ++n) {
    const int t = static_cast<int>(uniform_index(rng, 10));
    // Skew towards the diagonal, and leave class 9 out as a true label.
    const int p = uniform01(rng) < 0.6 ? t : static_cast<int>(uniform_index(rng, 10));
    if (t == 9) continue;
    cm.update(t, p);
    ++pairs[{t, p}];
    ++truth[t];
    ++pred[p];
    correct += t == p;
  }
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const auto it = pairs.find({i, j});
      EXPECT_EQ(cm.counts[i][j], it == pairs.end() ? 0u : it->second);
    }
  EXPECT_EQ(*cm.overall_accuracy(), static_cast<double>(correct) / static_cast<double>(cm.total()));
  const auto pc = cm.per_class_accuracy();
  const auto counts = cm.prediction_counts();
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(counts[i], pred[i]);
    if (truth[i] == 0) {
      EXPECT_FALSE(pc[i].has_value());
    } else {
      EXPECT_EQ(*pc[i], static_cast<double>(pairs[{i, i}]) / static_cast<double>(truth[i]));
    }
  }
  // Overall accuracy is the support-weighted mean of per-class accuracy.
  double weighted = 0;
  for (int i = 0; i < 10; ++i)
    if (pc[i]) weighted += *pc[i] * static_cast<double>(truth[i]) / static_cast<double>(cm.total());
  EXPECT_NEAR(weighted, *cm.overall_accuracy(), 1e-12);
}

TEST(Confusion, CsvLayout) {
  ConfusionMatrix cm;
  cm.update(0, 1);
  cm.update(0, 0);
  const auto text = confusion_csv(cm);
  EXPECT_EQ(text.substr(0, text.find('\n')), "true\\pred,0,1,2,3,4,5,6,7,8,9");
  EXPECT_NE(text.find("\n0,1,1,0,0,0,0,0,0,0,0\n"), std::string::npos);
  const auto pcs = per_class_csv(cm);
  EXPECT_NE(pcs.find("0,AnnualCrop,2,1,0.5,1\n"), std::string::npos);
  EXPECT_NE(pcs.find("1,Forest,0,0,,1\n"), std::string::npos);
}

// ---------------------------------------------------------------------- timing

namespace {

/// Advances a manual clock by a per-epoch amount for each phase.
struct FakeWorkload {
  ManualClock& clock;
  std::function<double(std::size_t)> train_seconds;
  std::size_t iters = 10;

  Workload make(bool with_val) {
    Workload w;
    w.train = [this](std::size_t e) {
      clock.advance(train_seconds(e));
      return iters;
    };
    if (with_val)
      w.val = [this](std::size_t) {
        clock.advance(0.5);
        return iters / 2;
      };
    return w;
  }
};

}  // namespace

TEST(TimedRun, SleepingWorkloadOracle) {
  Workload w;
  w.train = [](std::size_t) {
    for (int i = 0; i < 20; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    return std::size_t{20};
  };
  SteadyClock clock;
  auto r = timed_run("cpu", w, 0, 1, clock);
  EXPECT_GE(r.train_it_s, 19.0);
  EXPECT_LE(r.train_it_s, 20.0);
  EXPECT_NEAR(r.epoch_seconds, 1.0, 0.05);
  auto again = timed_run("cpu", w, 0, 1, clock);
  EXPECT_NEAR(again.train_it_s / r.train_it_s, 1.0, 0.05);
}

TEST(TimedRun, WarmupTimingIsDiscarded) {
  ManualClock clock;
  FakeWorkload fake{clock, [](std::size_t e) { return e < 5 ? 100.0 : 2.0; }};
  auto r = timed_run("fake", fake.make(true), 5, 3, clock);
  EXPECT_DOUBLE_EQ(r.epoch_seconds, 2.5);
  EXPECT_DOUBLE_EQ(r.train_it_s, 5.0);
  EXPECT_DOUBLE_EQ(r.val_it_s, 10.0);
  EXPECT_EQ(r.warmup_epochs_excluded, 5u);
  EXPECT_EQ(r.measured_epochs, 3u);
}

TEST(TimedRun, SingleEpochWithoutWarmup) {
  ManualClock clock;
  FakeWorkload fake{clock, [](std::size_t) { return 4.0; }, 8};
  auto r = timed_run("fake", fake.make(false), 0, 1, clock);
  EXPECT_DOUBLE_EQ(r.epoch_seconds, 4.0);
  EXPECT_DOUBLE_EQ(r.train_it_s, 2.0);
  EXPECT_EQ(r.val_it_s, 0.0);
  EXPECT_NEAR(r.train_it_s * r.epoch_seconds, 8.0, 0.02 * 8.0);
}

TEST(TimedRun, NeedsAMeasuredEpoch) {
  ManualClock clock;
  FakeWorkload fake{clock, [](std::size_t) { return 1.0; }};
  EXPECT_THROW(timed_run("fake", fake.make(false), 5, 0, clock), InvalidArgument);
}

TEST(TimedRun, BackwardClockNeverYieldsNegativeDurations) {
  ManualClock clock;
  clock.set(1000.0);
  Workload w;
  w.train = [&](std::size_t e) {
    if (e == 1) clock.set(10.0);  // wall clock stepped back mid-epoch
    else clock.advance(1.0);
    return std::size_t{4};
  };
  w.val = [&](std::size_t) {
    clock.advance(1.0);
    return std::size_t{2};
  };
  auto r = timed_run("fake", w, 0, 3, clock);
  EXPECT_GT(r.train_it_s, 0.0);
  EXPECT_GE(r.val_it_s, 0.0);
  EXPECT_GE(r.epoch_seconds, 0.0);
}

TEST(TimedRun, InferencePhaseRates) {
  ManualClock clock;
  FakeWorkload fake{clock, [](std::size_t) { return 1.0; }};
  auto w = fake.make(false);
  w.infer = [&] {
    clock.advance(0.85);
    return std::size_t{10};
  };
  auto r = timed_run("fake", w, 0, 1, clock);
  EXPECT_DOUBLE_EQ(r.ms_per_tile, 85.0);
  EXPECT_NEAR(r.tiles_per_s, 1000.0 / 85.0, 1e-9);
  EXPECT_NO_THROW(r.check_invariants());
}

// -------------------------------------------------------------------- speedup

namespace {

DeviceRunRecord rec(std::string name, double train, double val, double epoch) {
  DeviceRunRecord r;
  r.device_name = std::move(name);
  r.train_it_s = train;
  r.val_it_s = val;
  r.epoch_seconds = epoch;
  return r;
}

std::vector<DeviceRunRecord> reference_devices() {
  return {rec("Apple M3 Pro", 3.97, 4.23, 366), rec("Tesla T4", 6.43, 20.0, 201),
          rec("NVIDIA RTX 3060", 8.12, 3.31, 220)};
}

}  // namespace

TEST(Speedup, ReferenceDeviceRows) {
  const auto t = reference_devices();
  const double t4 = speedup(t[0], t[1], SpeedupBasis::epoch_time);
  EXPECT_NEAR(t4, 366.0 / 201.0, 1e-12);
  EXPECT_EQ(format_sig(t4, 2), "1.8");
  const double rtx = speedup(t[0], t[2], SpeedupBasis::train_it_s);
  EXPECT_NEAR(rtx, 8.12 / 3.97, 1e-12);
  EXPECT_EQ(format_sig(rtx, 2), "2.0");
  EXPECT_EQ(format_sig(speedup(t[0], t[2], SpeedupBasis::epoch_time), 2), "1.7");
}

TEST(Speedup, IdentityAndAntisymmetry) {
  Rng rng = make_rng(2, "speedup");
  for (int i = 0; i < 200; ++i) {
    auto a = rec("a", uniform(rng, 0.1, 50), 1, uniform(rng, 1, 1000));
    auto b = rec("b", uniform(rng, 0.1, 50), 1, uniform(rng, 1, 1000));
    for (auto basis : {SpeedupBasis::epoch_time, SpeedupBasis::train_it_s}) {
      EXPECT_EQ(speedup(a, a, basis), 1.0);
      EXPECT_NEAR(speedup(a, b, basis) * speedup(b, a, basis), 1.0, 1e-12);
    }
  }
}

TEST(Speedup, RejectsNonPositive) {
  auto good = rec("a", 1, 1, 1);
  EXPECT_THROW(speedup(good, rec("b", 1, 1, 0), SpeedupBasis::epoch_time), InvalidArgument);
  EXPECT_THROW(speedup(rec("b", -1, 1, 1), good, SpeedupBasis::train_it_s), InvalidArgument);
}

// ---------------------------------------------------------------------- radar

TEST(Radar, SingleMetric) {
  auto r = radar_normalize({{2, 1, 1, 1}, {4, 1, 1, 1}});
  EXPECT_DOUBLE_EQ(r[0][0], 0.5);
  EXPECT_DOUBLE_EQ(r[1][0], 1.0);
  EXPECT_EQ(r[0][1], 1.0);  // equal metric
}

TEST(Radar, ReferenceEpochTimes) {
  auto rep = make_report(reference_devices(), "Apple M3 Pro");
  EXPECT_NEAR(rep.radar[0][2], 201.0 / 366.0, 1e-12);
  EXPECT_DOUBLE_EQ(rep.radar[1][2], 1.0);
  EXPECT_NEAR(rep.radar[2][2], 201.0 / 220.0, 1e-12);
  EXPECT_NEAR(rep.radar[0][2], 0.549, 5e-4);
  EXPECT_NEAR(rep.radar[2][2], 0.914, 5e-4);
}

TEST(Radar, ScaleInvariantAndBounded) {
  Rng rng = make_rng(3, "radar");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RadarVector> raw(2 + uniform_index(rng, 4));
    for (auto& v : raw)
      for (auto& x : v) x = uniform(rng, 0.1, 10);
    auto base = radar_normalize(raw);
    const std::size_t m = uniform_index(rng, 4);
    const double s = uniform(rng, 0.01, 100);
    for (auto& v : raw) v[m] *= s;
    auto scaled = radar_normalize(raw);
    for (std::size_t d = 0; d < raw.size(); ++d)
      for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(scaled[d][k], base[d][k], 1e-12);
        EXPECT_GT(base[d][k], 0.0);
        EXPECT_LE(base[d][k], 1.0);
      }
    for (std::size_t k = 0; k < 4; ++k) {
      double mx = 0;
      for (const auto& v : base) mx = std::max(mx, v[k]);
      EXPECT_EQ(mx, 1.0);
    }
  }
}

TEST(Radar, Errors) {
  EXPECT_THROW(radar_normalize({{1, 1, 1, 1}}), InvalidArgument);
  EXPECT_THROW(radar_normalize({{1, 1, 1, 1}, {1, 0, 1, 1}}), InvalidArgument);
}

// -------------------------------------------------------------------- reports

TEST(Report, ReferenceMixedBasisCsv) {
  auto t = reference_devices();
  t[2].basis = SpeedupBasis::train_it_s;
  auto rep = make_report(t, "Apple M3 Pro", SpeedupBasis::epoch_time);
  EXPECT_EQ(rep.speedups[0], 1.0);
  EXPECT_EQ(bench_csv(rep),
            "device,train_it_s,val_it_s,epoch_s,ms_per_tile,tiles_per_s,speedup,basis\n"
            "Apple M3 Pro,3.97,4.23,366,0,0,1.0,epoch_time\n"
            "Tesla T4,6.43,20,201,0,0,1.8,epoch_time\n"
            "NVIDIA RTX 3060,8.12,3.31,220,0,0,2.0,train_it_s\n");
}

TEST(Report, SingleBasisIsConsistent) {
  auto rep = make_report(reference_devices(), "Apple M3 Pro", SpeedupBasis::epoch_time);
  const auto csv = bench_csv(rep);
  EXPECT_NE(csv.find("NVIDIA RTX 3060,8.12,3.31,220,0,0,1.7,epoch_time"), std::string::npos);
  auto by_rate = make_report(reference_devices(), "Apple M3 Pro", SpeedupBasis::train_it_s);
  EXPECT_EQ(format_sig(by_rate.speedups[1], 2), "1.6");
  EXPECT_EQ(format_sig(by_rate.speedups[2], 2), "2.0");
}

TEST(Report, JsonRoundTripIsByteIdentical) {
  auto t = reference_devices();
  t[0].ms_per_tile = 85;
  t[0].tiles_per_s = 1000.0 / 85.0;
  t[2].basis = SpeedupBasis::train_it_s;
  auto rep = make_report(t, "Apple M3 Pro");
  const auto text = bench_json_text(rep);
  const auto back = parse_bench_json(text, "mem");
  EXPECT_EQ(back, rep);
  EXPECT_EQ(bench_json_text(back), text);
  auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["devices"][1]["speedup_label"], "1.8x");
  EXPECT_EQ(j["radar"]["axes"].size(), 4u);

  auto bumped = j;
  bumped["schema_version"] = 2;
  EXPECT_THROW(parse_bench_json(bumped.dump(), "mem"), VersionError);
  EXPECT_THROW(parse_bench_json("{", "mem"), FormatError);
}

TEST(Report, EmitIsDeterministic) {
  TempDir a, b;
  auto rep = make_report(reference_devices(), "Tesla T4");
  const auto fa = emit_report(rep, a.path, ReportFormat::csv, true);
  emit_report(rep, b.path, ReportFormat::csv, true);
  ASSERT_EQ(fa.size(), 3u);
  for (const auto& f : fa) EXPECT_EQ(read_text_file(f), read_text_file(b.path / f.filename()));
  emit_report(rep, a.path, ReportFormat::json, false);
  EXPECT_TRUE(std::filesystem::exists(a.path / "bench_report.json"));
  const auto radar = read_text_file(a.path / "bench_chart_radar.csv");
  EXPECT_EQ(radar.substr(0, radar.find('\n')), "device,train_it_s,val_it_s,inv_epoch_time,speedup");
  const auto bars = read_text_file(a.path / "bench_chart_bars.csv");
  EXPECT_NE(bars.find("epoch_s,Tesla T4,201\n"), std::string::npos);
}

TEST(Report, UnwritablePathNamesThePath) {
  TempDir tmp;
  write_text_file(tmp.path / "file", "x");
  auto rep = make_report(reference_devices(), "Tesla T4");
  try {
    emit_report(rep, tmp.path / "file" / "sub", ReportFormat::csv, false);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("bench_report.csv"), std::string::npos);
  }
}

TEST(Report, BaselineValidation) {
  EXPECT_THROW(make_report(reference_devices(), "TPU"), InvalidArgument);
  auto t = reference_devices();
  t[1].train_it_s = 0;
  EXPECT_THROW(make_report(t, "Apple M3 Pro"), InvalidArgument);
  t = reference_devices();
  t[1].ms_per_tile = 10;
  t[1].tiles_per_s = 50;
  EXPECT_THROW(make_report(t, "Apple M3 Pro"), InvalidArgument);
}
