#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <thread>

#include <json.hpp>

#include "lulc/bench/confusion.hpp"
#include "lulc/bench/report.hpp"
#include "lulc/core/checksum.hpp"
#include "lulc/core/clock.hpp"
#include "lulc/core/parallel.hpp"
#include "lulc/data/batches.hpp"
#include "lulc/data/dataset.hpp"
#include "lulc/geo/catalog.hpp"
#include "lulc/geo/chip_archive.hpp"
#include "lulc/geo/polygon.hpp"
#include "lulc/geo/scene_io.hpp"
#include "lulc/geo/stats.hpp"
#include "lulc/geo/synth.hpp"
#include "lulc/geo/tiling.hpp"
#include "lulc/infer/predict.hpp"
#include "lulc/infer/raster.hpp"
#include "lulc/map/geojson.hpp"
#include "lulc/map/html.hpp"
#include "lulc/nn/checkpoint.hpp"
#include "lulc/pipeline/config.hpp"
#include "lulc/train/history.hpp"
#include "lulc/train/trainer.hpp"

namespace lulc::pipeline {

namespace fs = std::filesystem;

/// Where every stage reads and writes, relative to the work directory.
struct Layout {
  fs::path root;

  fs::path scenes() const { return root / "scenes"; }
  fs::path synth_catalog() const { return scenes() / "catalog.csv"; }
  fs::path ingest_catalog() const { return root / "ingest" / "catalog.csv"; }
  fs::path chips() const { return root / "chips"; }
  fs::path stats() const { return root / "stats.csv"; }
  fs::path split() const { return root / "split.csv"; }
  fs::path init_checkpoint() const { return root / "model" / "init.ckpt"; }
  fs::path checkpoint() const { return root / "model" / "checkpoint.bin"; }
  fs::path history() const { return root / "model" / "history.csv"; }
  fs::path confusion() const { return root / "eval" / "confusion.csv"; }
  fs::path per_class() const { return root / "eval" / "per_class.csv"; }
  fs::path metrics() const { return root / "eval" / "metrics.json"; }
  fs::path raster_csv() const { return root / "infer" / "raster.csv"; }
  fs::path raster_bmp() const { return root / "infer" / "raster.bmp"; }
  fs::path infer_timing() const { return root / "infer" / "timing.json"; }
  fs::path bench_dir() const { return root / "bench"; }
  fs::path report_dir() const { return root / "report"; }
  fs::path geojson() const { return root / "map" / "map.geojson"; }
  fs::path html() const { return root / "map" / "map.html"; }
  fs::path manifest() const { return root / "manifest.json"; }
};

// ------------------------------------------------------------------ manifest

/// Checksum of a file, or of a directory tree (relative names and contents in
/// sorted order).
inline std::string artifact_checksum(const fs::path& path) {
  if (!fs::is_directory(path)) return file_checksum(path);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  Fnv1a64 h;
  for (const auto& f : files) {
    const auto rel = f.lexically_relative(path).generic_string();
    h.update(rel);
    h.update("\0", 1);
    hash_file(h, f);
  }
  return h.hex();
}

/// Records the checksum and producer of every artifact a stage writes, so a
/// later stage can tell a cached input from one changed behind its back.
class ArtifactManifest {
 public:
  struct Entry {
    std::string checksum;
    std::string producer;
  };

  explicit ArtifactManifest(fs::path root) : root_(std::move(root)) {
    const auto path = root_ / "manifest.json";
    if (!fs::exists(path)) return;
    try {
      const auto j = nlohmann::json::parse(read_text_file(path));
      for (const auto& [k, v] : j.at("artifacts").items())
        entries_[k] = {v.at("fnv1a64").get<std::string>(), v.at("producer").get<std::string>()};
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }

  std::string key(const fs::path& artifact) const { return artifact.lexically_relative(root_).generic_string(); }

  void record(const fs::path& artifact, const std::string& producer) {
    entries_[key(artifact)] = {artifact_checksum(artifact), producer};
    save();
  }

  /// Throws MissingArtifactError naming `producer` when the artifact is absent,
  /// FormatError when it no longer matches its recorded checksum.
  void verify(const fs::path& artifact, const std::string& producer) const {
    if (!fs::exists(artifact))
      throw MissingArtifactError(artifact.string() + " not found; run `lulc " + producer + "` first");
    const auto it = entries_.find(key(artifact));
    if (it == entries_.end()) return;  // supplied from outside the pipeline
    if (artifact_checksum(artifact) != it->second.checksum)
      throw FormatError(artifact.string() + " changed since `lulc " + it->second.producer +
                        "` wrote it (checksum mismatch); rerun `lulc " + it->second.producer + "`");
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  void save() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["artifacts"] = nlohmann::ordered_json::object();
    for (const auto& [k, e] : entries_) j["artifacts"][k] = {{"fnv1a64", e.checksum}, {"producer", e.producer}};
    write_text_file(root_ / "manifest.json", j.dump(2) + "\n");
  }

  fs::path root_;
  std::map<std::string, Entry> entries_;
};

// ------------------------------------------------------------------- context

inline std::unique_ptr<Clock> make_clock(const PipelineConfig& cfg) {
  if (cfg.timing.clock == "step") return std::make_unique<StepClock>(cfg.timing.step_seconds);
  return std::make_unique<SteadyClock>();
}

/// Device name from the CPU model string, or a generic label.
inline std::string host_probe() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        const auto name = trim(std::string_view(line).substr(colon + 1));
        if (!name.empty()) return std::string(name);
      }
    }
  }
  return "host-cpu";
}

struct RunContext {
  PipelineConfig cfg;
  Layout layout;
  std::unique_ptr<Clock> clock;
  ArtifactManifest manifest;
  std::ostream* log;

  explicit RunContext(PipelineConfig c, std::ostream* log_stream = &std::cerr)
      : cfg(std::move(c)), layout{fs::path(cfg.paths.work_dir)}, clock(make_clock(cfg)),
        manifest(layout.root), log(log_stream) {
    set_num_threads(static_cast<int>(cfg.threads));
  }

  void say(const std::string& line) const {
    if (log) *log << line << '\n';
  }
  std::uint64_t seed(std::string_view stream, std::uint64_t a = 0) const { return derive_seed(cfg.seed, stream, a); }
};

// -------------------------------------------------------------------- stages

/// Synthetic scenes with ground truth plus a catalog, including decoy scenes
/// the ingest filter must reject.
inline void stage_synth(RunContext& ctx) {
  const auto& s = ctx.cfg.synth;
  const auto start = geo::parse_date(ctx.cfg.ingest.date_start);
  const auto end = geo::parse_date(ctx.cfg.ingest.date_end);
  const auto span_days = (std::chrono::sys_days(end) - std::chrono::sys_days(start)).count() + 1;
  const double max_cloud = ctx.cfg.ingest.max_cloud_pct;
  fs::remove_all(ctx.layout.scenes());
  fs::create_directories(ctx.layout.scenes());

  std::vector<geo::SceneMeta> catalog;
  const std::size_t total = s.scenes + s.decoy_scenes;
  for (std::size_t i = 0; i < total; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%03zu", i);
    auto rng = make_rng(ctx.cfg.seed, "synth-meta", i);
    geo::SceneMeta meta;
    meta.scene_id = id;
    auto day = std::chrono::sys_days(start) + std::chrono::days(static_cast<long>(uniform_index(rng, span_days)));
    double cloud = uniform(rng, 0.0, 0.9 * max_cloud);
    if (i >= s.scenes) {
      const std::size_t k = i - s.scenes;
      if (k % 2 == 0 || max_cloud >= 95.0) day = std::chrono::sys_days(end) + std::chrono::days(7 * static_cast<long>(k + 1));
      if (k % 2 == 1) cloud = std::min(100.0, max_cloud + uniform(rng, 1.0, 40.0));
    }
    meta.acquisition_date = geo::Date(day);
    meta.cloud_cover_pct = std::round(cloud * 100.0) / 100.0;

    geo::SynthSpec spec;
    spec.width = s.width;
    spec.height = s.height;
    spec.layout.kind = s.layout == "stripes"    ? geo::LayoutKind::stripes
                       : s.layout == "constant" ? geo::LayoutKind::constant
                                                : geo::LayoutKind::checkerboard;
    spec.layout.block = s.block;
    spec.layout.num_classes = s.classes;
    spec.layout.offset = i;
    spec.noise_sigma = s.noise_sigma;
    spec.texture_amplitude = s.texture_amplitude;
    spec.geotransform = {10.0 + 0.1 * static_cast<double>(i % 5), 50.0 - 0.1 * static_cast<double>(i / 5), 1e-4, -1e-4};
    spec.scene_id = id;
    auto result = geo::synth_scene(ctx.seed("synth", i), spec);
    result.scene.meta = meta;
    const auto header = ctx.layout.scenes() / (std::string(id) + ".hdr");
    geo::write_scene(header, result.scene);
    geo::write_class_grid(ctx.layout.scenes() / (std::string(id) + ".truth"), result.truth);
    meta.path = header.string();
    catalog.push_back(meta);
  }
  geo::write_catalog(ctx.layout.synth_catalog(), catalog);
  ctx.manifest.record(ctx.layout.scenes(), "synth");
  ctx.say("synth: wrote " + std::to_string(total) + " scenes (" + std::to_string(s.decoy_scenes) + " decoys) to " +
          ctx.layout.scenes().string());
}

inline fs::path source_catalog(const RunContext& ctx) {
  if (!ctx.cfg.paths.catalog.empty()) {
    if (!fs::exists(ctx.cfg.paths.catalog))
      throw MissingArtifactError("catalog " + ctx.cfg.paths.catalog + " not found (set paths.catalog or run `lulc synth`)");
    return ctx.cfg.paths.catalog;
  }
  ctx.manifest.verify(ctx.layout.scenes(), "synth");
  ctx.manifest.verify(ctx.layout.synth_catalog(), "synth");
  return ctx.layout.synth_catalog();
}

/// Filters the catalog by cloud cover and date window.
inline std::size_t stage_ingest(RunContext& ctx) {
  const auto src = source_catalog(ctx);
  const auto all = geo::read_catalog(src);
  auto kept = geo::filter_catalog(all, ctx.cfg.ingest.max_cloud_pct, geo::parse_date(ctx.cfg.ingest.date_start),
                                  geo::parse_date(ctx.cfg.ingest.date_end));
  if (kept.empty())
    throw InvalidArgument("no scene in " + src.string() + " passes the filter (cloud < " +
                          format_number(ctx.cfg.ingest.max_cloud_pct) + "%, " + ctx.cfg.ingest.date_start + " .. " +
                          ctx.cfg.ingest.date_end + ")");
  for (auto& m : kept) m.path = fs::absolute(m.path).lexically_normal().string();
  geo::write_catalog(ctx.layout.ingest_catalog(), kept);
  ctx.manifest.record(ctx.layout.ingest_catalog(), "ingest");
  ctx.say("ingest: kept " + std::to_string(kept.size()) + " of " + std::to_string(all.size()) + " scenes");
  return kept.size();
}

/// Masks and tiles every ingested scene into the chip archive. Chips are
/// labelled from a `<scene>.truth` grid next to the scene when one exists.
inline std::size_t stage_tile(RunContext& ctx) {
  ctx.manifest.verify(ctx.layout.ingest_catalog(), "ingest");
  const auto catalog = geo::read_catalog(ctx.layout.ingest_catalog());
  std::optional<geo::Roi> roi;
  if (!ctx.cfg.paths.roi.empty()) roi = geo::read_roi(ctx.cfg.paths.roi);
  UuidGenerator uuids(ctx.seed("uuid"));
  geo::TilingOptions opts{ctx.cfg.tile.size, ctx.cfg.tile.min_valid_fraction};
  geo::ChipArchive archive;
  for (const auto& meta : catalog) {
    auto scene = geo::read_scene(meta.path);
    scene.meta.scene_id = meta.scene_id;
    auto mask = scene.nodata_mask;
    if (roi) {
      const auto inside = geo::rasterize_mask(scene, *roi);
      for (std::size_t i = 0; i < mask.values.size(); ++i) mask.values[i] = mask.values[i] && inside.values[i];
    }
    auto chips = geo::tile_scene(scene, mask, uuids, opts);
    const auto truth = fs::path(meta.path).replace_extension(".truth");
    if (fs::exists(truth)) geo::label_tiles(chips, geo::read_class_grid(truth, scene.width, scene.height));
    archive.scenes[meta.scene_id] = {meta.scene_id, scene.width, scene.height, scene.bands, opts.tile_size,
                                     scene.geotransform};
    for (auto& c : chips) archive.chips.push_back(std::move(c));
  }
  fs::remove_all(ctx.layout.chips());
  geo::write_chip_archive(ctx.layout.chips(), archive);
  ctx.manifest.record(ctx.layout.chips(), "tile");
  ctx.say("tile: " + std::to_string(archive.chips.size()) + " chips from " + std::to_string(catalog.size()) + " scenes");
  return archive.chips.size();
}

inline geo::ChipArchive load_chips(const RunContext& ctx) {
  ctx.manifest.verify(ctx.layout.chips(), "tile");
  return geo::read_chip_archive(ctx.layout.chips());
}

/// Per-channel mean and standard deviation over every chip in the archive.
inline geo::ChannelStats stage_stats(RunContext& ctx) {
  const auto archive = load_chips(ctx);
  if (archive.chips.empty()) throw InvalidArgument("the chip archive is empty; nothing to compute statistics from");
  const auto stats = geo::compute_channel_stats(archive.chips);
  geo::write_channel_stats(ctx.layout.stats(), stats);
  ctx.manifest.record(ctx.layout.stats(), "stats");
  ctx.say("stats: " + std::to_string(stats.mean.size()) + " channels over " + std::to_string(archive.chips.size()) +
          " chips");
  return stats;
}

/// The stats file when present, otherwise the same statistics computed in memory.
inline geo::ChannelStats load_stats(const RunContext& ctx, const geo::ChipArchive& archive) {
  if (fs::exists(ctx.layout.stats())) {
    ctx.manifest.verify(ctx.layout.stats(), "stats");
    return geo::read_channel_stats(ctx.layout.stats());
  }
  if (archive.chips.empty()) throw InvalidArgument("the chip archive is empty");
  return geo::compute_channel_stats(archive.chips);
}

inline data::LabeledSet load_labeled(const geo::ChipArchive& archive) {
  auto set = data::labeled_set(archive);
  if (set.size() == 0) throw InvalidArgument("the chip archive holds no labelled chips");
  return set;
}

/// Stratified train/val/test assignment of the labelled chips.
inline data::SplitAssignment stage_split(RunContext& ctx) {
  const auto archive = load_chips(ctx);
  const auto set = load_labeled(archive);
  const auto& f = ctx.cfg.split;
  const auto split = data::stratified_split(set, {f.train, f.val, f.test}, ctx.seed("split"));
  data::write_split(ctx.layout.split(), set, split);
  ctx.manifest.record(ctx.layout.split(), "split");
  ctx.say("split: " + std::to_string(split.train_idx.size()) + " train, " + std::to_string(split.val_idx.size()) +
          " val, " + std::to_string(split.test_idx.size()) + " test");
  return split;
}

inline data::SplitAssignment load_split(const RunContext& ctx, const data::LabeledSet& set) {
  ctx.manifest.verify(ctx.layout.split(), "split");
  return data::read_split(ctx.layout.split(), set);
}

inline train::TrainConfig train_config(const RunContext& ctx) {
  const auto& t = ctx.cfg.train;
  train::TrainConfig tc;
  tc.max_epochs = t.max_epochs;
  tc.batch_size = t.batch_size;
  tc.lr = t.lr;
  tc.momentum = t.momentum;
  tc.patience = t.patience;
  tc.min_delta = t.min_delta;
  tc.warmup_epochs = ctx.cfg.bench.warmup_epochs;
  tc.seed = ctx.seed("train");
  return tc;
}

inline data::BatchOptions batch_options(const RunContext& ctx, const geo::ChannelStats& stats) {
  data::BatchOptions o;
  o.batch_size = ctx.cfg.train.batch_size;
  o.aug = ctx.cfg.augmentation();
  o.stats = stats;
  o.prefetch = ctx.cfg.train.prefetch;
  return o;
}

inline nn::Model<float> initial_model(const RunContext& ctx) {
  return nn::init_model<float>(ctx.cfg.network(), ctx.seed("init"));
}

struct TrainSummary {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  train::StopReason stop_reason = train::StopReason::completed;
  double best_val_loss = 0.0;
};

/// Trains from the seeded initialisation; writes the initial and best
/// checkpoints and the per-epoch history.
inline TrainSummary stage_train(RunContext& ctx) {
  const auto archive = load_chips(ctx);
  const auto set = load_labeled(archive);
  const auto split = load_split(ctx, set);
  const auto stats = load_stats(ctx, archive);
  const auto tc = train_config(ctx);
  auto model = initial_model(ctx);
  nn::save_checkpoint(ctx.layout.init_checkpoint(), model, nn::make_optimizer(model.params, tc.lr, tc.momentum), 0);

  train::FitHooks hooks;
  hooks.on_epoch = [&](const train::EpochRecord& r) {
    ctx.say("train: epoch " + std::to_string(r.epoch) + " loss " + format_sig(r.train_loss, 4) + " acc " +
            format_sig(r.train_acc, 4) + " | val loss " + format_sig(r.val_loss, 4) + " acc " +
            format_sig(r.val_acc, 4) + " | " + format_sig(r.epoch_seconds, 3) + " s");
  };
  const auto result = train::fit(std::move(model), tc, set, split, batch_options(ctx, stats), *ctx.clock, hooks);
  nn::save_checkpoint(ctx.layout.checkpoint(), result.best_model, result.best_optimizer, result.best_epoch);
  train::write_history(ctx.layout.history(), result.records);
  ctx.manifest.record(ctx.layout.init_checkpoint(), "train");
  ctx.manifest.record(ctx.layout.checkpoint(), "train");
  ctx.manifest.record(ctx.layout.history(), "train");

  TrainSummary s;
  s.epochs_run = result.records.size();
  s.best_epoch = result.best_epoch;
  s.stop_reason = result.stop_reason;
  if (s.best_epoch > 0) s.best_val_loss = result.records[s.best_epoch - 1].val_loss;
  ctx.say(std::string("train: ") + train::stop_reason_name(s.stop_reason) + " after " + std::to_string(s.epochs_run) +
          " epochs, best epoch " + std::to_string(s.best_epoch));
  return s;
}

inline nn::Model<float> load_model(const RunContext& ctx) {
  ctx.manifest.verify(ctx.layout.checkpoint(), "train");
  return nn::load_checkpoint(ctx.layout.checkpoint(), ctx.cfg.network()).model;
}

inline infer::PredictOptions predict_options(const RunContext& ctx, const geo::ChannelStats& stats) {
  infer::PredictOptions o;
  o.batch_size = ctx.cfg.infer.batch_size;
  o.aug = ctx.cfg.augmentation();
  o.stats = stats;
  return o;
}

struct EvalSummary {
  bench::ConfusionMatrix confusion;
  std::optional<double> accuracy;
};

/// Scores the best checkpoint on the test split.
inline EvalSummary stage_eval(RunContext& ctx) {
  const auto archive = load_chips(ctx);
  const auto set = load_labeled(archive);
  const auto split = load_split(ctx, set);
  const auto stats = load_stats(ctx, archive);
  const auto model = load_model(ctx);
  if (split.test_idx.empty()) throw InvalidArgument("the test split is empty");
  std::vector<geo::TileChip> test;
  for (auto i : split.test_idx) test.push_back(set.chips[i]);
  const auto pred = infer::predict_tiles(model, test, predict_options(ctx, stats), *ctx.clock);
  EvalSummary out;
  for (std::size_t i = 0; i < test.size(); ++i) out.confusion.update(*test[i].label, pred.predictions[i].class_id);
  out.accuracy = out.confusion.overall_accuracy();

  write_text_file(ctx.layout.confusion(), bench::confusion_csv(out.confusion));
  write_text_file(ctx.layout.per_class(), bench::per_class_csv(out.confusion));
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["test_samples"] = out.confusion.total();
  j["overall_accuracy"] = *out.accuracy;
  j["per_class_accuracy"] = nlohmann::ordered_json::array();
  for (const auto& a : out.confusion.per_class_accuracy())
    j["per_class_accuracy"].push_back(a ? nlohmann::ordered_json(*a) : nlohmann::ordered_json(nullptr));
  write_text_file(ctx.layout.metrics(), j.dump(2) + "\n");
  for (const auto& p : {ctx.layout.confusion(), ctx.layout.per_class(), ctx.layout.metrics()})
    ctx.manifest.record(p, "eval");
  ctx.say("eval: test accuracy " + format_number(*out.accuracy) + " over " + std::to_string(out.confusion.total()) +
          " chips");
  return out;
}

/// Classifies every chip of one scene, suppresses low-confidence tiles,
/// stitches the class raster and smooths it.
inline infer::ClassRaster stage_infer(RunContext& ctx) {
  const auto archive = load_chips(ctx);
  const auto stats = load_stats(ctx, archive);
  const auto model = load_model(ctx);
  if (archive.scenes.empty()) throw InvalidArgument("the chip archive holds no scenes");
  std::string scene_id = ctx.cfg.infer.scene.empty() ? archive.scenes.begin()->first : ctx.cfg.infer.scene;
  const auto geom = archive.scenes.find(scene_id);
  if (geom == archive.scenes.end()) {
    std::string known;
    for (const auto& [id, g] : archive.scenes) known += (known.empty() ? "" : ", ") + id;
    throw InvalidArgument("infer.scene '" + scene_id + "' is not in the chip archive (have: " + known + ")");
  }
  std::vector<geo::TileChip> chips;
  for (const auto& c : archive.chips)
    if (c.scene_id == scene_id) chips.push_back(c);
  const auto pred = infer::predict_tiles(model, chips, predict_options(ctx, stats), *ctx.clock);
  const auto kept = infer::threshold_suppress(pred.predictions, ctx.cfg.infer.tau);
  auto raster = infer::stitch(kept, geom->second);
  if (ctx.cfg.infer.filter_passes > 0) raster = infer::majority_filter(raster, ctx.cfg.infer.filter_passes);

  infer::write_raster_csv(ctx.layout.raster_csv(), raster);
  infer::write_raster_bmp(ctx.layout.raster_bmp(), raster, ctx.cfg.infer.image_scale);
  const auto& t = pred.timing;
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["scene_id"] = scene_id;
  j["tiles"] = t.tiles;
  j["batches"] = t.batches;
  j["total_seconds"] = t.total_seconds;
  j["ms_per_tile"] = t.ms_per_tile();
  j["tiles_per_s"] = t.tiles_per_s();
  j["suppressed_cells"] = raster.suppressed_count();
  write_text_file(ctx.layout.infer_timing(), j.dump(2) + "\n");
  for (const auto& p : {ctx.layout.raster_csv(), ctx.layout.raster_bmp(), ctx.layout.infer_timing()})
    ctx.manifest.record(p, "infer");
  ctx.say("infer: " + scene_id + " " + std::to_string(raster.rows) + "x" + std::to_string(raster.cols) + " cells, " +
          std::to_string(raster.suppressed_count()) + " suppressed, " + format_sig(t.tiles_per_s(), 3) + " tiles/s");
  return raster;
}

inline std::string device_file_stem(std::string_view device) {
  std::string out;
  for (char ch : device) {
    const bool keep = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '-';
    out += keep ? ch : '_';
  }
  return out;
}

inline std::vector<std::size_t> capped(const std::vector<std::size_t>& idx, std::size_t batches, std::size_t batch) {
  if (batches == 0 || batches * batch >= idx.size()) return idx;
  return {idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(batches * batch)};
}

/// Times warm-up and measured epochs of training, validation and test-split
/// inference for this host, starting from the seeded initialisation.
inline bench::DeviceRunRecord stage_bench(RunContext& ctx) {
  const auto archive = load_chips(ctx);
  const auto set = load_labeled(archive);
  const auto split = load_split(ctx, set);
  const auto stats = load_stats(ctx, archive);
  const auto tc = train_config(ctx);
  const auto& b = ctx.cfg.bench;
  const auto base = batch_options(ctx, stats);
  const auto train_opt = train::train_stream_options(base, tc);
  const auto val_opt = train::eval_stream_options(base, tc);
  const auto train_idx = capped(split.train_idx, b.batches_per_epoch, tc.batch_size);
  const auto val_idx = capped(split.val_idx, b.batches_per_epoch, tc.batch_size);
  std::vector<geo::TileChip> test;
  for (auto i : capped(split.test_idx, b.batches_per_epoch, ctx.cfg.infer.batch_size)) test.push_back(set.chips[i]);

  auto model = initial_model(ctx);
  auto opt = nn::make_optimizer(model.params, tc.lr, tc.momentum);
  bench::Workload w;
  w.train = [&](std::size_t e) {
    data::BatchStream s(set, train_idx, train_opt, e);
    return train::train_epoch(model, opt, s, *ctx.clock, e + 1).iters;
  };
  if (!val_idx.empty())
    w.val = [&](std::size_t e) {
      data::BatchStream s(set, val_idx, val_opt, e);
      return train::validate(model, s, *ctx.clock).iters;
    };
  if (!test.empty())
    w.infer = [&] {
      return infer::predict_tiles(model, test, predict_options(ctx, stats), *ctx.clock).predictions.size();
    };
  const std::string device = b.device.empty() ? host_probe() : b.device;
  auto rec = bench::timed_run(device, w, b.warmup_epochs, b.measured_epochs, *ctx.clock);
  const auto path = ctx.layout.bench_dir() / ("run_" + device_file_stem(device) + ".json");
  write_text_file(path, bench::bench_json_text(bench::make_report({rec}, device, bench::parse_basis(b.basis))));
  ctx.manifest.record(path, "bench");
  ctx.say("bench: " + device + " " + format_sig(rec.train_it_s, 3) + " train it/s, " + format_sig(rec.val_it_s, 3) +
          " val it/s, " + format_sig(rec.epoch_seconds, 3) + " s/epoch (" + std::to_string(b.warmup_epochs) +
          " warm-up epochs excluded)");
  return rec;
}

/// Device records from a CSV with the bench report columns. Only `device`,
/// `train_it_s` and `epoch_s` are required; blank rates mean "not measured" and a
/// non-empty `basis` overrides the report basis for that device.
inline std::vector<bench::DeviceRunRecord> read_device_records(const fs::path& path) {
  const auto t = read_csv(path);
  const auto has = [&](std::string_view c) { return std::find(t.header.begin(), t.header.end(), c) != t.header.end(); };
  std::vector<bench::DeviceRunRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const auto num = [&](std::string_view c) {
      if (!has(c)) return 0.0;
      const auto v = trim(row[t.column(c)]);
      return v.empty() ? 0.0 : parse_double(v, c);
    };
    bench::DeviceRunRecord r;
    try {
      r.device_name = std::string(trim(row[t.column("device")]));
      r.train_it_s = num("train_it_s");
      r.epoch_seconds = num("epoch_s");
      r.val_it_s = num("val_it_s");
      r.ms_per_tile = num("ms_per_tile");
      r.tiles_per_s = num("tiles_per_s");
      if (has("basis") && !trim(row[t.column("basis")]).empty())
        r.basis = bench::parse_basis(trim(row[t.column("basis")]));
      r.check_invariants();
    } catch (const Error& e) {
      throw FormatError(path.string() + " row " + std::to_string(i + 2) + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Combines every bench run (and any external records) into the report files.
inline bench::BenchReport stage_report(RunContext& ctx) {
  std::vector<fs::path> runs;
  if (fs::is_directory(ctx.layout.bench_dir()))
    for (const auto& e : fs::directory_iterator(ctx.layout.bench_dir()))
      if (e.path().extension() == ".json") runs.push_back(e.path());
  std::sort(runs.begin(), runs.end());
  std::vector<bench::DeviceRunRecord> records;
  for (const auto& p : runs) {
    ctx.manifest.verify(p, "bench");
    for (auto& r : bench::parse_bench_json(read_text_file(p), p.string()).records) records.push_back(std::move(r));
  }
  if (!ctx.cfg.report.extra_records.empty())
    for (auto& r : read_device_records(ctx.cfg.report.extra_records)) records.push_back(std::move(r));
  if (records.empty())
    throw MissingArtifactError("no device runs in " + ctx.layout.bench_dir().string() + "; run `lulc bench` first");
  const std::string baseline = ctx.cfg.report.baseline.empty() ? records.front().device_name : ctx.cfg.report.baseline;
  const auto rep = bench::make_report(std::move(records), baseline, bench::parse_basis(ctx.cfg.bench.basis));
  const auto format = ctx.cfg.report.format == "json" ? bench::ReportFormat::json : bench::ReportFormat::csv;
  for (const auto& p : bench::emit_report(rep, ctx.layout.report_dir(), format, ctx.cfg.report.chart_data))
    ctx.manifest.record(p, "report");
  ctx.say("report: " + std::to_string(rep.records.size()) + " device(s), baseline " + baseline + ", basis " +
          bench::basis_name(rep.basis));
  return rep;
}

/// GeoJSON and the self-contained HTML map of the inferred class raster.
inline map::Json stage_map(RunContext& ctx) {
  ctx.manifest.verify(ctx.layout.raster_csv(), "infer");
  const auto raster = infer::read_raster_csv(ctx.layout.raster_csv());
  const auto style = ctx.cfg.style();
  const auto fc = map::raster_to_geojson(raster, style);
  map::write_geojson(ctx.layout.geojson(), fc);
  map::render_html(fc, style, ctx.layout.html(), ctx.cfg.map.title);
  ctx.manifest.record(ctx.layout.geojson(), "map");
  ctx.manifest.record(ctx.layout.html(), "map");
  ctx.say("map: " + std::to_string(fc["features"].size()) + " features -> " + ctx.layout.html().string());
  return fc;
}

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"synth", "ingest", "tile",  "stats", "split", "train",
                                                 "eval",  "infer",  "bench", "report", "map"};
  return names;
}

inline void run_stage(RunContext& ctx, std::string_view name) {
  if (name == "synth") stage_synth(ctx);
  else if (name == "ingest") stage_ingest(ctx);
  else if (name == "tile") stage_tile(ctx);
  else if (name == "stats") stage_stats(ctx);
  else if (name == "split") stage_split(ctx);
  else if (name == "train") stage_train(ctx);
  else if (name == "eval") stage_eval(ctx);
  else if (name == "infer") stage_infer(ctx);
  else if (name == "bench") stage_bench(ctx);
  else if (name == "report") stage_report(ctx);
  else if (name == "map") stage_map(ctx);
  else throw InvalidArgument("unknown stage '" + std::string(name) + "'");
}

/// Every stage in order; `synth` is skipped when a catalog is configured.
inline void run_all(RunContext& ctx) {
  for (const auto& s : stage_names()) {
    if (s == "synth" && !ctx.cfg.paths.catalog.empty()) continue;
    run_stage(ctx, s);
  }
}

}  // namespace lulc::pipeline
