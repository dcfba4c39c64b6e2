#pragma once

#include <span>
#include <string>
#include <vector>

#include "lulc/core/clock.hpp"
#include "lulc/core/parallel.hpp"
#include "lulc/data/augment.hpp"
#include "lulc/geo/types.hpp"
#include "lulc/nn/loss.hpp"
#include "lulc/nn/network.hpp"

namespace lulc::infer {

inline constexpr int kSuppressed = -1;

struct TilePrediction {
  std::string uuid;
  std::string scene_id;
  std::size_t row_off = 0;
  std::size_t col_off = 0;
  geo::Bounds bounds;
  int class_id = 0;
  float confidence = 0.0f;

  bool suppressed() const { return class_id == kSuppressed; }
};

struct PredictionTiming {
  std::size_t tiles = 0;
  std::size_t batches = 0;
  double total_seconds = 0.0;

  double ms_per_tile() const { return tiles ? 1000.0 * total_seconds / static_cast<double>(tiles) : 0.0; }
  /// Zero when nothing was timed.
  double tiles_per_s() const { return total_seconds > 0.0 ? static_cast<double>(tiles) / total_seconds : 0.0; }
};

struct PredictOptions {
  std::size_t batch_size = 16;
  data::AugmentationConfig aug;
  geo::ChannelStats stats{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
};

struct PredictResult {
  std::vector<TilePrediction> predictions;  // same order as the input chips
  PredictionTiming timing;
};

/// Runs the evaluation view of every chip through the model in batches. The
/// timed span covers preprocessing and the forward passes.
inline PredictResult predict_tiles(const nn::Model<float>& model, std::span<const geo::TileChip> chips,
                                   const PredictOptions& opt, Clock& clock) {
  if (opt.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  opt.aug.validate();
  const std::size_t target = opt.aug.target_size;
  if (target != model.config.input_size)
    throw ShapeError("preprocessing target " + std::to_string(target) + " does not match model input size " +
                     std::to_string(model.config.input_size));

  PredictResult out;
  out.predictions.resize(chips.size());
  const double start = clock.now();
  for (std::size_t first = 0; first < chips.size(); first += opt.batch_size) {
    const std::size_t n = std::min(opt.batch_size, chips.size() - first);
    const std::size_t channels = model.config.in_channels;
    nn::Tensor<float> batch({n, channels, target, target});
    const std::size_t plane = channels * target * target;
    parallel_for(n, [&](std::size_t i) {
      const auto& chip = chips[first + i];
      if (chip.bands != channels)
        throw ShapeError("chip " + chip.uuid + " has " + std::to_string(chip.bands) + " bands, model expects " +
                         std::to_string(channels));
      auto img = data::eval_transform(data::image_from_chip(chip), opt.aug, opt.stats);
      std::copy(img.data.begin(), img.data.end(), batch.data() + i * plane);
    });
    const auto probs = nn::predict(model, batch);
    const auto cls = nn::argmax_rows(probs);
    const std::size_t k = probs.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& chip = chips[first + i];
      auto& p = out.predictions[first + i];
      p.uuid = chip.uuid;
      p.scene_id = chip.scene_id;
      p.row_off = chip.row_off;
      p.col_off = chip.col_off;
      p.bounds = chip.bounds;
      p.class_id = cls[i];
      p.confidence = probs[i * k + static_cast<std::size_t>(cls[i])];
    }
    ++out.timing.batches;
  }
  out.timing.tiles = chips.size();
  out.timing.total_seconds = clock.now() - start;
  return out;
}

/// Marks predictions with confidence strictly below tau as suppressed.
inline std::vector<TilePrediction> threshold_suppress(std::vector<TilePrediction> preds, double tau = 0.6) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("confidence threshold must lie in [0, 1]");
  for (auto& p : preds)
    if (p.confidence < tau) p.class_id = kSuppressed;
  return preds;
}

}  // namespace lulc::infer
