#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "lulc/bench/report.hpp"
#include "lulc/data/augment.hpp"
#include "lulc/geo/types.hpp"
#include "lulc/map/geojson.hpp"
#include "lulc/nn/network.hpp"

namespace lulc::pipeline {

inline constexpr int kConfigSchemaVersion = 1;

struct PipelineConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 42;
  std::size_t threads = 1;

  struct Paths {
    std::string work_dir = "work";
    std::string catalog;  // empty: the catalog written by synth
    std::string roi;      // empty: no ROI masking
  } paths;

  struct Synth {
    std::size_t scenes = 20;
    std::size_t decoy_scenes = 2;
    std::size_t width = 640;
    std::size_t height = 640;
    std::size_t block = 64;
    std::size_t classes = 10;
    std::string layout = "checkerboard";
    double noise_sigma = 0.08;
    double texture_amplitude = 0.05;
  } synth;

  struct Ingest {
    double max_cloud_pct = 10.0;
    std::string date_start = "2023-06-01";
    std::string date_end = "2023-08-31";
  } ingest;

  struct Tile {
    std::size_t size = 64;
    double min_valid_fraction = 1.0;
  } tile;

  struct Split {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
  } split;

  struct Augment {
    std::size_t input_size = 224;
    double flip_prob = 0.5;
    double crop_scale_min = 0.6;
    double crop_scale_max = 1.0;
    double aspect_min = 0.75;
    double aspect_max = 4.0 / 3.0;
    double center_crop_fraction = 0.875;
    std::string norm_profile = "dataset_stats";
  } augment;

  struct Model {
    std::size_t stem_channels = 16;
    std::vector<std::size_t> stage_blocks = {2, 2, 2};
    std::vector<std::size_t> stage_channels = {16, 32, 64};
    std::string block = "basic";
  } model;

  struct Train {
    std::size_t max_epochs = 10;
    std::size_t batch_size = 16;
    double lr = 0.01;
    double momentum = 0.9;
    std::size_t patience = 3;
    double min_delta = 1e-6;
    std::size_t prefetch = 1;
  } train;

  struct Infer {
    std::string scene;  // empty: first scene id in the chip archive
    double tau = 0.6;
    std::size_t filter_passes = 1;
    std::size_t batch_size = 16;
    std::size_t image_scale = 8;
  } infer;

  struct Bench {
    std::string device;  // empty: host probe
    std::size_t warmup_epochs = 5;
    std::size_t measured_epochs = 1;
    std::size_t batches_per_epoch = 0;  // 0: whole split
    std::string basis = "epoch_time";
  } bench;

  struct Report {
    std::string baseline;  // empty: first device
    std::string extra_records;  // CSV of externally measured devices
    std::string format = "csv";
    bool chart_data = true;
  } report;

  struct Timing {
    std::string clock = "steady";
    double step_seconds = 0.001;
  } timing;

  struct Map {
    std::string title = "Land-use map";
    double opacity = 0.7;
    std::vector<std::string> palette;  // empty: built-in palette
    std::vector<std::string> labels;   // empty: class names
  } map;

  data::AugmentationConfig augmentation() const {
    data::AugmentationConfig a;
    a.target_size = augment.input_size;
    a.flip_prob = augment.flip_prob;
    a.crop_scale_min = augment.crop_scale_min;
    a.crop_scale_max = augment.crop_scale_max;
    a.aspect_min = augment.aspect_min;
    a.aspect_max = augment.aspect_max;
    a.center_crop_fraction = augment.center_crop_fraction;
    a.norm_profile = data::parse_norm_profile(augment.norm_profile);
    return a;
  }

  nn::NetworkConfig network() const {
    nn::NetworkConfig n;
    n.stem_channels = model.stem_channels;
    n.stage_blocks = model.stage_blocks;
    n.stage_channels = model.stage_channels;
    n.input_size = augment.input_size;
    n.block = model.block == "bottleneck" ? nn::BlockType::bottleneck : nn::BlockType::basic;
    return n;
  }

  map::MapStyle style() const {
    map::MapStyle s;
    s.opacity = map.opacity;
    for (std::size_t i = 0; i < map.palette.size() && i < geo::kNumClasses; ++i)
      s.class_palette[i] = map::parse_hex_colour(map.palette[i]);
    for (std::size_t i = 0; i < map.labels.size() && i < geo::kNumClasses; ++i) s.legend_labels[i] = map.labels[i];
    return s;
  }
};

// ------------------------------------------------------------------ registry

/// One configurable key. The same table drives YAML loading, command-line
/// flags, --help and the echoed effective configuration.
struct KeySpec {
  std::string key;
  std::string type;
  std::string help;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> show;
  bool is_list = false;
};

namespace detail {

inline std::string join(const std::vector<std::string>& v, std::string_view sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(sep) : "") + v[i];
  return out;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.emplace_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::size_t parse_count(std::string_view s, const std::string& key) {
  const auto v = parse_int(s, key);
  if (v < 0) throw InvalidArgument(key + ": expected a non-negative integer, got '" + std::string(s) + "'");
  return static_cast<std::size_t>(v);
}

inline std::uint64_t parse_u64(std::string_view s, const std::string& key) {
  const auto t = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw InvalidArgument(key + ": expected an unsigned 64-bit integer, got '" + std::string(s) + "'");
  return v;
}

inline bool parse_bool(std::string_view s, const std::string& key) {
  const auto t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw InvalidArgument(key + ": expected true or false, got '" + std::string(s) + "'");
}

template <typename T>
KeySpec bind(std::string key, std::string help, T& (*field)(PipelineConfig&)) {
  KeySpec k;
  k.key = key;
  k.help = std::move(help);
  if constexpr (std::is_same_v<T, std::string>) {
    k.type = "TEXT";
    k.set = [field](PipelineConfig& c, const std::string& v) { field(c) = v; };
    k.show = [field](const PipelineConfig& c) { return field(const_cast<PipelineConfig&>(c)); };
  } else if constexpr (std::is_same_v<T, bool>) {
    k.type = "BOOL";
    k.set = [field, key](PipelineConfig& c, const std::string& v) { field(c) = parse_bool(v, key); };
    k.show = [field](const PipelineConfig& c) { return std::string(field(const_cast<PipelineConfig&>(c)) ? "true" : "false"); };
  } else if constexpr (std::is_same_v<T, double>) {
    k.type = "FLOAT";
    k.set = [field, key](PipelineConfig& c, const std::string& v) {
      try {
        field(c) = parse_double(v, key);
      } catch (const FormatError&) {
        throw InvalidArgument(key + ": expected a number, got '" + v + "'");
      }
    };
    k.show = [field](const PipelineConfig& c) { return format_number(field(const_cast<PipelineConfig&>(c))); };
  } else if constexpr (std::is_same_v<T, std::uint64_t> && !std::is_same_v<std::uint64_t, std::size_t>) {
    k.type = "UINT";
    k.set = [field, key](PipelineConfig& c, const std::string& v) { field(c) = parse_u64(v, key); };
    k.show = [field](const PipelineConfig& c) { return std::to_string(field(const_cast<PipelineConfig&>(c))); };
  } else if constexpr (std::is_same_v<T, std::size_t>) {
    k.type = "UINT";
    k.set = [field, key](PipelineConfig& c, const std::string& v) {
      try {
        field(c) = static_cast<std::size_t>(parse_u64(v, key));
      } catch (const InvalidArgument&) {
        throw InvalidArgument(key + ": expected a non-negative integer, got '" + v + "'");
      }
    };
    k.show = [field](const PipelineConfig& c) { return std::to_string(field(const_cast<PipelineConfig&>(c))); };
  } else if constexpr (std::is_same_v<T, int>) {
    k.type = "INT";
    k.set = [field, key](PipelineConfig& c, const std::string& v) {
      try {
        field(c) = static_cast<int>(parse_int(v, key));
      } catch (const FormatError&) {
        throw InvalidArgument(key + ": expected an integer, got '" + v + "'");
      }
    };
    k.show = [field](const PipelineConfig& c) { return std::to_string(field(const_cast<PipelineConfig&>(c))); };
  } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
    k.type = "UINT,...";
    k.is_list = true;
    k.set = [field, key](PipelineConfig& c, const std::string& v) {
      std::vector<std::size_t> out;
      for (const auto& item : split_list(v)) {
        try {
          out.push_back(static_cast<std::size_t>(parse_u64(item, key)));
        } catch (const InvalidArgument&) {
          throw InvalidArgument(key + ": expected a list of non-negative integers, got '" + v + "'");
        }
      }
      field(c) = std::move(out);
    };
    k.show = [field](const PipelineConfig& c) {
      std::vector<std::string> s;
      for (auto x : field(const_cast<PipelineConfig&>(c))) s.push_back(std::to_string(x));
      return join(s);
    };
  } else {
    static_assert(std::is_same_v<T, std::vector<std::string>>);
    k.type = "TEXT,...";
    k.is_list = true;
    k.set = [field](PipelineConfig& c, const std::string& v) { field(c) = split_list(v); };
    k.show = [field](const PipelineConfig& c) { return join(field(const_cast<PipelineConfig&>(c))); };
  }
  return k;
}

}  // namespace detail

#define LULC_KEY(name, help, member) \
  detail::bind(name, help, +[](PipelineConfig& c) -> auto& { return c.member; })

inline const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      LULC_KEY("schema_version", "configuration schema version (must be 1)", schema_version),
      LULC_KEY("seed", "master seed for every random stream (LULC_SEED is the fallback)", seed),
      LULC_KEY("threads", "worker threads for data preparation and convolutions", threads),
      LULC_KEY("paths.work_dir", "directory holding every artifact", paths.work_dir),
      LULC_KEY("paths.catalog", "scene catalog manifest (default: the one synth writes)", paths.catalog),
      LULC_KEY("paths.roi", "ROI GeoJSON used to mask scenes before tiling", paths.roi),
      LULC_KEY("synth.scenes", "number of in-window, low-cloud synthetic scenes", synth.scenes),
      LULC_KEY("synth.decoy_scenes", "extra scenes the catalog filter must reject", synth.decoy_scenes),
      LULC_KEY("synth.width", "synthetic scene width in pixels", synth.width),
      LULC_KEY("synth.height", "synthetic scene height in pixels", synth.height),
      LULC_KEY("synth.block", "edge of a single-class block in pixels", synth.block),
      LULC_KEY("synth.classes", "number of classes drawn (1..10)", synth.classes),
      LULC_KEY("synth.layout", "class layout: checkerboard, stripes or constant", synth.layout),
      LULC_KEY("synth.noise_sigma", "Gaussian pixel noise", synth.noise_sigma),
      LULC_KEY("synth.texture_amplitude", "amplitude of the per-class texture", synth.texture_amplitude),
      LULC_KEY("ingest.max_cloud_pct", "keep scenes with cloud cover strictly below this", ingest.max_cloud_pct),
      LULC_KEY("ingest.date_start", "first acquisition date kept (YYYY-MM-DD)", ingest.date_start),
      LULC_KEY("ingest.date_end", "last acquisition date kept (YYYY-MM-DD)", ingest.date_end),
      LULC_KEY("tile.size", "tile edge in pixels", tile.size),
      LULC_KEY("tile.min_valid_fraction", "share of valid pixels a tile needs (1 = all)", tile.min_valid_fraction),
      LULC_KEY("split.train", "training fraction", split.train),
      LULC_KEY("split.val", "validation fraction", split.val),
      LULC_KEY("split.test", "test fraction", split.test),
      LULC_KEY("augment.input_size", "network input edge in pixels", augment.input_size),
      LULC_KEY("augment.flip_prob", "probability of each horizontal and vertical flip", augment.flip_prob),
      LULC_KEY("augment.crop_scale_min", "smallest random crop area fraction", augment.crop_scale_min),
      LULC_KEY("augment.crop_scale_max", "largest random crop area fraction", augment.crop_scale_max),
      LULC_KEY("augment.aspect_min", "smallest random crop aspect ratio", augment.aspect_min),
      LULC_KEY("augment.aspect_max", "largest random crop aspect ratio", augment.aspect_max),
      LULC_KEY("augment.center_crop_fraction", "central fraction kept by the evaluation view", augment.center_crop_fraction),
      LULC_KEY("augment.norm_profile", "dataset_stats, imagenet or both", augment.norm_profile),
      LULC_KEY("model.stem_channels", "channels of the stem convolution", model.stem_channels),
      LULC_KEY("model.stage_blocks", "residual blocks per stage", model.stage_blocks),
      LULC_KEY("model.stage_channels", "output channels per stage", model.stage_channels),
      LULC_KEY("model.block", "residual block type: basic or bottleneck", model.block),
      LULC_KEY("train.max_epochs", "upper bound on training epochs", train.max_epochs),
      LULC_KEY("train.batch_size", "mini-batch size", train.batch_size),
      LULC_KEY("train.lr", "SGD learning rate (0 freezes the model)", train.lr),
      LULC_KEY("train.momentum", "SGD momentum", train.momentum),
      LULC_KEY("train.patience", "epochs without improvement before stopping", train.patience),
      LULC_KEY("train.min_delta", "smallest validation-loss drop that counts as improvement", train.min_delta),
      LULC_KEY("train.prefetch", "batches prepared ahead on a background thread", train.prefetch),
      LULC_KEY("infer.scene", "scene to classify and map (default: first in the archive)", infer.scene),
      LULC_KEY("infer.tau", "confidence threshold; lower predictions are suppressed", infer.tau),
      LULC_KEY("infer.filter_passes", "majority-filter passes", infer.filter_passes),
      LULC_KEY("infer.batch_size", "tiles per inference batch", infer.batch_size),
      LULC_KEY("infer.image_scale", "pixels per tile in the class image", infer.image_scale),
      LULC_KEY("bench.device", "device name recorded in the run (default: host probe)", bench.device),
      LULC_KEY("bench.warmup_epochs", "untimed warm-up epochs", bench.warmup_epochs),
      LULC_KEY("bench.measured_epochs", "timed epochs", bench.measured_epochs),
      LULC_KEY("bench.batches_per_epoch", "cap on batches per benchmark epoch (0 = all)", bench.batches_per_epoch),
      LULC_KEY("bench.basis", "speed-up basis: epoch_time or train_it_s", bench.basis),
      LULC_KEY("report.baseline", "baseline device for speed-ups (default: first record)", report.baseline),
      LULC_KEY("report.extra_records", "CSV of additional device records to include", report.extra_records),
      LULC_KEY("report.format", "report file format: csv or json", report.format),
      LULC_KEY("report.chart_data", "also write bar and radar chart series", report.chart_data),
      LULC_KEY("timing.clock", "steady (wall time) or step (reproducible fake time)", timing.clock),
      LULC_KEY("timing.step_seconds", "seconds the step clock advances per reading", timing.step_seconds),
      LULC_KEY("map.title", "page title of the HTML map", map.title),
      LULC_KEY("map.opacity", "fill opacity of map cells", map.opacity),
      LULC_KEY("map.palette", "ten #rrggbb class colours", map.palette),
      LULC_KEY("map.labels", "ten legend labels", map.labels),
  };
  return keys;
}

#undef LULC_KEY

inline const KeySpec* find_key(std::string_view key) {
  for (const auto& k : config_keys())
    if (k.key == key) return &k;
  return nullptr;
}

// ------------------------------------------------------------------ loading

/// Problems found in a configuration; every one is reported, not just the first.
struct ConfigIssues {
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
  void add(std::string e) { errors.push_back(std::move(e)); }
  [[noreturn]] void raise(const std::string& source) const {
    std::string msg = source + ": " + std::to_string(errors.size()) + " configuration error(s)";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
};

namespace detail {

inline std::string where(const YAML::Mark& m) {
  return "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1);
}

inline void walk(const YAML::Node& node, const std::string& prefix, PipelineConfig& cfg, ConfigIssues& issues) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const auto name = it->first.as<std::string>();
    const std::string key = prefix.empty() ? name : prefix + "." + name;
    const YAML::Node& value = it->second;
    const KeySpec* spec = find_key(key);
    if (!spec) {
      if (value.IsMap()) {
        bool section = false;
        for (const auto& k : config_keys()) section = section || k.key.rfind(key + ".", 0) == 0;
        if (section) {
          walk(value, key, cfg, issues);
          continue;
        }
      }
      issues.add("unknown key '" + key + "' (" + where(it->first.Mark()) + ")");
      continue;
    }
    std::string text;
    if (spec->is_list) {
      if (value.IsSequence()) {
        std::vector<std::string> items;
        for (const auto& item : value) {
          if (!item.IsScalar()) {
            issues.add(key + ": list items must be scalars (" + where(item.Mark()) + ")");
            continue;
          }
          items.push_back(item.Scalar());
        }
        text = join(items);
      } else if (value.IsScalar() || value.IsNull()) {
        text = value.IsNull() ? "" : value.Scalar();
      } else {
        issues.add(key + ": expected a list (" + where(value.Mark()) + ")");
        continue;
      }
    } else {
      if (value.IsNull()) {
        text = "";
      } else if (!value.IsScalar()) {
        issues.add(key + ": expected a single value (" + where(value.Mark()) + ")");
        continue;
      } else {
        text = value.Scalar();
      }
    }
    try {
      spec->set(cfg, text);
    } catch (const Error& e) {
      issues.add(std::string(e.what()) + " (" + where(value.Mark()) + ")");
    }
  }
}

}  // namespace detail

/// Applies a YAML document on top of `cfg`, collecting every problem.
inline void apply_yaml(PipelineConfig& cfg, std::string_view text, const std::string& source, ConfigIssues& issues) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ": YAML parse error at " + detail::where(e.mark) + ": " + e.msg);
  }
  if (root.IsNull()) return;
  if (!root.IsMap()) throw ConfigError(source + ": top level must be a mapping (" + detail::where(root.Mark()) + ")");
  detail::walk(root, "", cfg, issues);
}

/// Range and consistency checks. Every violation names its key.
inline void check_config(const PipelineConfig& c, ConfigIssues& issues) {
  const auto need = [&](bool ok, const std::string& key, const std::string& what) {
    if (!ok) issues.add(key + ": " + what);
  };
  const auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  need(c.schema_version == kConfigSchemaVersion, "schema_version",
       "unsupported version " + std::to_string(c.schema_version) + " (expected 1)");
  need(c.threads >= 1 && c.threads <= 1024, "threads", "must lie in [1, 1024]");
  need(!c.paths.work_dir.empty(), "paths.work_dir", "must not be empty");
  need(c.paths.roi.empty() || std::filesystem::exists(c.paths.roi), "paths.roi", "file '" + c.paths.roi + "' not found");
  need(c.report.extra_records.empty() || std::filesystem::exists(c.report.extra_records), "report.extra_records",
       "file '" + c.report.extra_records + "' not found");

  need(c.synth.scenes >= 1, "synth.scenes", "must be >= 1");
  need(c.synth.width >= 64, "synth.width", "must be >= 64");
  need(c.synth.height >= 64, "synth.height", "must be >= 64");
  need(c.synth.block >= 1, "synth.block", "must be >= 1");
  need(c.synth.classes >= 1 && c.synth.classes <= geo::kNumClasses, "synth.classes", "must lie in [1, 10]");
  need(c.synth.layout == "checkerboard" || c.synth.layout == "stripes" || c.synth.layout == "constant", "synth.layout",
       "must be checkerboard, stripes or constant");
  need(c.synth.noise_sigma >= 0.0 && std::isfinite(c.synth.noise_sigma), "synth.noise_sigma", "must be >= 0");
  need(c.synth.texture_amplitude >= 0.0 && std::isfinite(c.synth.texture_amplitude), "synth.texture_amplitude",
       "must be >= 0");

  need(c.ingest.max_cloud_pct >= 0.0 && c.ingest.max_cloud_pct <= 100.0, "ingest.max_cloud_pct", "must lie in [0, 100]");
  std::optional<geo::Date> start, end;
  try {
    start = geo::parse_date(c.ingest.date_start);
  } catch (const Error& e) {
    issues.add(std::string("ingest.date_start: ") + e.what());
  }
  try {
    end = geo::parse_date(c.ingest.date_end);
  } catch (const Error& e) {
    issues.add(std::string("ingest.date_end: ") + e.what());
  }
  if (start && end) need(!(*end < *start), "ingest.date_end", "is before ingest.date_start");

  need(c.tile.size >= 1, "tile.size", "must be >= 1");
  need(in01(c.tile.min_valid_fraction), "tile.min_valid_fraction", "must lie in [0, 1]");

  need(in01(c.split.train), "split.train", "must lie in [0, 1]");
  need(in01(c.split.val), "split.val", "must lie in [0, 1]");
  need(in01(c.split.test), "split.test", "must lie in [0, 1]");
  need(std::fabs(c.split.train + c.split.val + c.split.test - 1.0) <= 1e-9, "split",
       "fractions must sum to 1 (got " + format_number(c.split.train + c.split.val + c.split.test) + ")");

  const auto& a = c.augment;
  need(a.input_size >= 1, "augment.input_size", "must be >= 1");
  need(in01(a.flip_prob), "augment.flip_prob", "must lie in [0, 1]");
  need(a.crop_scale_min > 0.0 && a.crop_scale_min <= 1.0, "augment.crop_scale_min", "must lie in (0, 1]");
  need(a.crop_scale_max > 0.0 && a.crop_scale_max <= 1.0, "augment.crop_scale_max", "must lie in (0, 1]");
  need(a.crop_scale_min <= a.crop_scale_max, "augment.crop_scale_min", "must not exceed augment.crop_scale_max");
  need(a.aspect_min > 0.0, "augment.aspect_min", "must be > 0");
  need(a.aspect_min <= a.aspect_max, "augment.aspect_min", "must not exceed augment.aspect_max");
  need(a.center_crop_fraction > 0.0 && a.center_crop_fraction <= 1.0, "augment.center_crop_fraction",
       "must lie in (0, 1]");
  need(a.norm_profile == "dataset_stats" || a.norm_profile == "imagenet" || a.norm_profile == "both",
       "augment.norm_profile", "must be dataset_stats, imagenet or both");

  const auto& m = c.model;
  need(m.stem_channels >= 1, "model.stem_channels", "must be >= 1");
  need(!m.stage_blocks.empty(), "model.stage_blocks", "must list at least one stage");
  need(m.stage_blocks.size() == m.stage_channels.size(), "model.stage_channels",
       "must have as many entries as model.stage_blocks");
  need(std::all_of(m.stage_blocks.begin(), m.stage_blocks.end(), [](auto v) { return v >= 1; }), "model.stage_blocks",
       "every stage needs at least one block");
  need(std::all_of(m.stage_channels.begin(), m.stage_channels.end(), [](auto v) { return v >= 1; }),
       "model.stage_channels", "channel counts must be >= 1");
  need(m.block == "basic" || m.block == "bottleneck", "model.block", "must be basic or bottleneck");

  const auto& t = c.train;
  need(t.max_epochs >= 1, "train.max_epochs", "must be >= 1");
  need(t.batch_size >= 1, "train.batch_size", "must be >= 1");
  need(t.lr >= 0.0 && std::isfinite(t.lr), "train.lr", "must be finite and >= 0");
  need(t.momentum >= 0.0 && t.momentum < 1.0, "train.momentum", "must lie in [0, 1)");
  need(t.min_delta >= 0.0 && std::isfinite(t.min_delta), "train.min_delta", "must be >= 0");
  need(t.prefetch <= 64, "train.prefetch", "must lie in [0, 64]");

  need(in01(c.infer.tau), "infer.tau", "must lie in [0, 1]");
  need(c.infer.batch_size >= 1, "infer.batch_size", "must be >= 1");
  need(c.infer.image_scale >= 1 && c.infer.image_scale <= 64, "infer.image_scale", "must lie in [1, 64]");

  need(c.bench.measured_epochs >= 1, "bench.measured_epochs", "must be >= 1");
  need(c.bench.basis == "epoch_time" || c.bench.basis == "train_it_s", "bench.basis",
       "must be epoch_time or train_it_s");

  need(c.report.format == "csv" || c.report.format == "json", "report.format", "must be csv or json");

  need(c.timing.clock == "steady" || c.timing.clock == "step", "timing.clock", "must be steady or step");
  need(c.timing.step_seconds > 0.0 && std::isfinite(c.timing.step_seconds), "timing.step_seconds", "must be > 0");

  need(c.map.opacity > 0.0 && c.map.opacity <= 1.0, "map.opacity", "must lie in (0, 1]");
  need(c.map.palette.empty() || c.map.palette.size() == geo::kNumClasses, "map.palette", "must list exactly 10 colours");
  need(c.map.labels.empty() || c.map.labels.size() == geo::kNumClasses, "map.labels", "must list exactly 10 labels");
  if (c.map.palette.size() == geo::kNumClasses) {
    std::set<infer::Rgb> seen;
    bool parsed = true;
    for (const auto& p : c.map.palette) {
      try {
        seen.insert(map::parse_hex_colour(p));
      } catch (const Error& e) {
        issues.add(std::string("map.palette: ") + e.what());
        parsed = false;
      }
    }
    if (parsed) need(seen.size() == geo::kNumClasses, "map.palette", "colours must be distinct");
  }
  for (const auto& l : c.map.labels) need(!l.empty(), "map.labels", "labels must be non-empty");
}

/// Loads and validates a configuration file; throws ConfigError listing every problem.
inline PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("configuration file not found: " + path.string());
  PipelineConfig cfg;
  ConfigIssues issues;
  apply_yaml(cfg, read_text_file(path), path.string(), issues);
  check_config(cfg, issues);
  if (!issues.ok()) issues.raise(path.string());
  return cfg;
}

/// Effective configuration as YAML, every key included.
inline std::string config_yaml(const PipelineConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  std::string section;
  for (const auto& k : config_keys()) {
    const auto dot = k.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : k.key.substr(0, dot);
    const std::string leaf = dot == std::string::npos ? k.key : k.key.substr(dot + 1);
    if (sec != section) {
      if (!section.empty()) out << YAML::EndMap;
      if (!sec.empty()) out << YAML::Key << sec << YAML::Value << YAML::BeginMap;
      section = sec;
    }
    out << YAML::Key << leaf << YAML::Value;
    if (k.is_list) {
      out << YAML::Flow << YAML::BeginSeq;
      for (const auto& item : detail::split_list(k.show(cfg))) out << item;
      out << YAML::EndSeq;
    } else if (k.type == "TEXT") {
      out << YAML::DoubleQuoted << k.show(cfg);
    } else {
      out << k.show(cfg);
    }
  }
  if (!section.empty()) out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace lulc::pipeline
