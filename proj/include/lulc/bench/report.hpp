#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lulc/core/clock.hpp"
#include "lulc/core/text.hpp"

namespace lulc::bench {

enum class SpeedupBasis { epoch_time, train_it_s };

inline const char* basis_name(SpeedupBasis b) { return b == SpeedupBasis::epoch_time ? "epoch_time" : "train_it_s"; }

inline SpeedupBasis parse_basis(std::string_view s) {
  if (s == "epoch_time") return SpeedupBasis::epoch_time;
  if (s == "train_it_s") return SpeedupBasis::train_it_s;
  throw InvalidArgument("unknown speed-up basis '" + std::string(s) + "' (epoch_time, train_it_s)");
}

/// Zero in an optional rate means the phase was not measured.
struct DeviceRunRecord {
  std::string device_name;
  double train_it_s = 0.0;
  double val_it_s = 0.0;
  double epoch_seconds = 0.0;
  double ms_per_tile = 0.0;
  double tiles_per_s = 0.0;
  std::size_t warmup_epochs_excluded = 0;
  std::size_t measured_epochs = 0;
  std::optional<SpeedupBasis> basis;  // per-device override of the report basis

  bool operator==(const DeviceRunRecord&) const = default;

  void check_invariants() const {
    if (device_name.empty()) throw InvalidArgument("device record needs a name");
    if (!(train_it_s > 0.0) || !(epoch_seconds > 0.0) || !std::isfinite(train_it_s) || !std::isfinite(epoch_seconds))
      throw InvalidArgument("device '" + device_name + "': train it/s and epoch seconds must be positive");
    if (!(val_it_s >= 0.0) || !(ms_per_tile >= 0.0) || !(tiles_per_s >= 0.0))
      throw InvalidArgument("device '" + device_name + "': rates must be non-negative");
    if ((ms_per_tile > 0.0) != (tiles_per_s > 0.0) ||
        (ms_per_tile > 0.0 && std::fabs(tiles_per_s * ms_per_tile / 1000.0 - 1.0) > 0.01))
      throw InvalidArgument("device '" + device_name + "': tiles/s and ms/tile disagree");
  }
};

// ----------------------------------------------------------------- timing

/// Each phase runs one epoch (or one inference sweep) and returns the number
/// of iterations (or tiles) it processed.
struct Workload {
  std::function<std::size_t(std::size_t epoch)> train;
  std::function<std::size_t(std::size_t epoch)> val;  // optional
  std::function<std::size_t()> infer;                 // optional, timed once after the measured epochs
};

/// Runs `warmup` epochs untimed, then `measured` timed epochs. Rates are total
/// iterations over total phase time; epoch_seconds is the mean measured epoch.
inline DeviceRunRecord timed_run(const std::string& device, const Workload& w, std::size_t warmup, std::size_t measured,
                                 Clock& source) {
  if (measured < 1) throw InvalidArgument("timed_run needs at least one measured epoch");
  if (!w.train) throw InvalidArgument("timed_run needs a training phase");
  MonotonicClock clock(source);
  std::size_t epoch = 0;
  for (; epoch < warmup; ++epoch) {
    w.train(epoch);
    if (w.val) w.val(epoch);
  }
  double train_s = 0, val_s = 0, epoch_s = 0;
  std::size_t train_it = 0, val_it = 0;
  for (std::size_t m = 0; m < measured; ++m, ++epoch) {
    const double t0 = clock.now();
    train_it += w.train(epoch);
    const double t1 = clock.now();
    if (w.val) val_it += w.val(epoch);
    const double t2 = clock.now();
    train_s += t1 - t0;
    val_s += t2 - t1;
    epoch_s += t2 - t0;
  }
  if (!(train_s > 0.0) || train_it == 0)
    throw NumericalError("device '" + device + "': no measurable training time or iterations");

  DeviceRunRecord r;
  r.device_name = device;
  r.train_it_s = static_cast<double>(train_it) / train_s;
  r.val_it_s = w.val && val_s > 0.0 ? static_cast<double>(val_it) / val_s : 0.0;
  r.epoch_seconds = epoch_s / static_cast<double>(measured);
  r.warmup_epochs_excluded = warmup;
  r.measured_epochs = measured;
  if (w.infer) {
    const double t0 = clock.now();
    const std::size_t tiles = w.infer();
    const double sec = clock.now() - t0;
    if (tiles > 0 && sec > 0.0) {
      r.ms_per_tile = 1000.0 * sec / static_cast<double>(tiles);
      r.tiles_per_s = static_cast<double>(tiles) / sec;
    }
  }
  return r;
}

// --------------------------------------------------------------- speed-up

inline double speedup(const DeviceRunRecord& baseline, const DeviceRunRecord& device, SpeedupBasis basis) {
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (basis == SpeedupBasis::epoch_time) {
    if (!positive(baseline.epoch_seconds) || !positive(device.epoch_seconds))
      throw InvalidArgument("speed-up needs positive epoch times");
    return baseline.epoch_seconds / device.epoch_seconds;
  }
  if (!positive(baseline.train_it_s) || !positive(device.train_it_s))
    throw InvalidArgument("speed-up needs positive training rates");
  return device.train_it_s / baseline.train_it_s;
}

inline constexpr std::array<std::string_view, 4> kRadarAxes = {"train_it_s", "val_it_s", "inv_epoch_time", "speedup"};

using RadarVector = std::array<double, 4>;

/// Divides each metric by its best value across devices; epoch time is
/// inverted first. A metric equal on every device maps to 1.0 everywhere.
inline std::vector<RadarVector> radar_normalize(const std::vector<RadarVector>& raw) {
  if (raw.size() < 2) throw InvalidArgument("radar normalisation needs at least two devices");
  std::vector<RadarVector> out(raw.size());
  for (std::size_t m = 0; m < 4; ++m) {
    double mx = 0.0;
    bool equal = true;
    for (const auto& v : raw) {
      if (!(v[m] > 0.0) || !std::isfinite(v[m]))
        throw InvalidArgument("radar metric '" + std::string(kRadarAxes[m]) + "' must be positive on every device");
      mx = std::max(mx, v[m]);
      equal = equal && v[m] == raw.front()[m];
    }
    for (std::size_t d = 0; d < raw.size(); ++d) out[d][m] = equal ? 1.0 : raw[d][m] / mx;
  }
  return out;
}

// ---------------------------------------------------------------- reports

struct BenchReport {
  std::string baseline_device;
  SpeedupBasis basis = SpeedupBasis::epoch_time;
  std::vector<DeviceRunRecord> records;
  std::vector<double> speedups;
  std::vector<RadarVector> radar;

  bool operator==(const BenchReport&) const = default;

  SpeedupBasis basis_of(std::size_t i) const { return records[i].basis.value_or(basis); }
};

/// Computes speed-ups against the named baseline and the radar vectors.
inline BenchReport make_report(std::vector<DeviceRunRecord> records, const std::string& baseline,
                               SpeedupBasis basis = SpeedupBasis::epoch_time) {
  BenchReport rep;
  rep.baseline_device = baseline;
  rep.basis = basis;
  rep.records = std::move(records);
  const DeviceRunRecord* base = nullptr;
  for (const auto& r : rep.records) {
    r.check_invariants();
    if (r.device_name == baseline) {
      if (base) throw InvalidArgument("device '" + baseline + "' appears twice");
      base = &r;
    }
  }
  if (!base) throw InvalidArgument("baseline device '" + baseline + "' has no record");
  for (std::size_t i = 0; i < rep.records.size(); ++i)
    rep.speedups.push_back(&rep.records[i] == base ? 1.0 : speedup(*base, rep.records[i], rep.basis_of(i)));
  if (rep.records.size() >= 2) {
    std::vector<RadarVector> raw;
    bool val_everywhere = true;
    for (const auto& r : rep.records) val_everywhere = val_everywhere && r.val_it_s > 0.0;
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
      const auto& r = rep.records[i];
      // Without validation timings on every device the axis is flat.
      raw.push_back({r.train_it_s, val_everywhere ? r.val_it_s : 1.0, 1.0 / r.epoch_seconds, rep.speedups[i]});
    }
    rep.radar = radar_normalize(raw);
  }
  return rep;
}

inline constexpr std::string_view kBenchHeader = "device,train_it_s,val_it_s,epoch_s,ms_per_tile,tiles_per_s,speedup,basis";
inline constexpr int kBenchSchemaVersion = 1;

/// Speed-ups are printed to two significant figures; every other value at
/// full precision.
inline std::string bench_csv(const BenchReport& rep) {
  std::string out(kBenchHeader);
  out += '\n';
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const auto& r = rep.records[i];
    out += csv_join({r.device_name, format_number(r.train_it_s), format_number(r.val_it_s),
                     format_number(r.epoch_seconds), format_number(r.ms_per_tile), format_number(r.tiles_per_s),
                     format_sig(rep.speedups[i], 2), basis_name(rep.basis_of(i))});
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json bench_json(const BenchReport& rep) {
  nlohmann::ordered_json j;
  j["schema_version"] = kBenchSchemaVersion;
  j["baseline_device"] = rep.baseline_device;
  j["basis"] = basis_name(rep.basis);
  j["devices"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const auto& r = rep.records[i];
    nlohmann::ordered_json d;
    d["device"] = r.device_name;
    d["train_it_s"] = r.train_it_s;
    d["val_it_s"] = r.val_it_s;
    d["epoch_s"] = r.epoch_seconds;
    d["ms_per_tile"] = r.ms_per_tile;
    d["tiles_per_s"] = r.tiles_per_s;
    d["warmup_epochs_excluded"] = r.warmup_epochs_excluded;
    d["measured_epochs"] = r.measured_epochs;
    d["speedup"] = rep.speedups[i];
    d["speedup_label"] = format_sig(rep.speedups[i], 2) + "x";
    d["basis"] = basis_name(rep.basis_of(i));
    d["basis_override"] = r.basis.has_value();
    j["devices"].push_back(std::move(d));
  }
  nlohmann::ordered_json radar;
  radar["axes"] = nlohmann::ordered_json::array();
  for (auto a : kRadarAxes) radar["axes"].push_back(std::string(a));
  radar["series"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rep.radar.size(); ++i)
    radar["series"].push_back({{"device", rep.records[i].device_name}, {"values", rep.radar[i]}});
  j["radar"] = std::move(radar);
  return j;
}

inline std::string bench_json_text(const BenchReport& rep) { return bench_json(rep).dump(2) + "\n"; }

inline BenchReport parse_bench_json(std::string_view text, const std::string& source) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(source + ": " + e.what());
  }
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kBenchSchemaVersion)
      throw VersionError(source + ": bench report schema " + std::to_string(version) + ", expected " +
                         std::to_string(kBenchSchemaVersion));
    BenchReport rep;
    rep.baseline_device = j.at("baseline_device").get<std::string>();
    rep.basis = parse_basis(j.at("basis").get<std::string>());
    for (const auto& d : j.at("devices")) {
      DeviceRunRecord r;
      r.device_name = d.at("device").get<std::string>();
      r.train_it_s = d.at("train_it_s").get<double>();
      r.val_it_s = d.at("val_it_s").get<double>();
      r.epoch_seconds = d.at("epoch_s").get<double>();
      r.ms_per_tile = d.at("ms_per_tile").get<double>();
      r.tiles_per_s = d.at("tiles_per_s").get<double>();
      r.warmup_epochs_excluded = d.at("warmup_epochs_excluded").get<std::size_t>();
      r.measured_epochs = d.at("measured_epochs").get<std::size_t>();
      if (d.at("basis_override").get<bool>()) r.basis = parse_basis(d.at("basis").get<std::string>());
      rep.speedups.push_back(d.at("speedup").get<double>());
      rep.records.push_back(std::move(r));
    }
    for (const auto& s : j.at("radar").at("series")) rep.radar.push_back(s.at("values").get<RadarVector>());
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(source + ": " + e.what());
  }
}

/// Bar series (metric,device,value) for the per-metric comparison chart.
inline std::string bar_chart_csv(const BenchReport& rep) {
  std::string out = "metric,device,value\n";
  const std::array<std::pair<std::string_view, double DeviceRunRecord::*>, 3> metrics = {
      {{"train_it_s", &DeviceRunRecord::train_it_s},
       {"val_it_s", &DeviceRunRecord::val_it_s},
       {"epoch_s", &DeviceRunRecord::epoch_seconds}}};
  for (const auto& [name, field] : metrics)
    for (const auto& r : rep.records) out += csv_join({std::string(name), r.device_name, format_number(r.*field)}) + "\n";
  for (std::size_t i = 0; i < rep.records.size(); ++i)
    out += csv_join({"speedup", rep.records[i].device_name, format_number(rep.speedups[i])}) + "\n";
  return out;
}

inline std::string radar_chart_csv(const BenchReport& rep) {
  std::string out = "device";
  for (auto a : kRadarAxes) out += "," + std::string(a);
  out += '\n';
  for (std::size_t i = 0; i < rep.radar.size(); ++i) {
    out += csv_escape(rep.records[i].device_name);
    for (double v : rep.radar[i]) out += "," + format_number(v);
    out += '\n';
  }
  return out;
}

enum class ReportFormat { csv, json };

/// Writes bench_report.csv or bench_report.json into `dir`, plus
/// bench_chart_bars.csv and bench_chart_radar.csv when chart data is wanted.
inline std::vector<std::filesystem::path> emit_report(const BenchReport& rep, const std::filesystem::path& dir,
                                                      ReportFormat format, bool chart_data) {
  std::vector<std::filesystem::path> written;
  const auto put = [&](const std::string& name, const std::string& text) {
    write_text_file(dir / name, text);
    written.push_back(dir / name);
  };
  if (format == ReportFormat::csv) put("bench_report.csv", bench_csv(rep));
  else put("bench_report.json", bench_json_text(rep));
  if (chart_data) {
    put("bench_chart_bars.csv", bar_chart_csv(rep));
    put("bench_chart_radar.csv", radar_chart_csv(rep));
  }
  return written;
}

}  // namespace lulc::bench
