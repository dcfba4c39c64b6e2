#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "lulc/core/random.hpp"
#include "lulc/geo/types.hpp"

namespace lulc::data {

/// Planar float image: channel c, row r, column x at data[(c * height + r) * width + x].
struct Image {
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<float> data;

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  float& at(std::size_t c, std::size_t r, std::size_t x) { return data[(c * height + r) * width + x]; }
  float at(std::size_t c, std::size_t r, std::size_t x) const { return data[(c * height + r) * width + x]; }
  bool operator==(const Image&) const = default;
};

inline Image image_from_chip(const geo::TileChip& chip) {
  Image img(chip.bands, chip.size, chip.size);
  img.data = chip.data;
  return img;
}

enum class NormProfile { dataset_stats, imagenet, both };

inline NormProfile parse_norm_profile(std::string_view s) {
  if (s == "dataset_stats") return NormProfile::dataset_stats;
  if (s == "imagenet") return NormProfile::imagenet;
  if (s == "both") return NormProfile::both;
  throw InvalidArgument("unknown norm profile '" + std::string(s) + "' (dataset_stats, imagenet, both)");
}

inline const char* norm_profile_name(NormProfile p) {
  switch (p) {
    case NormProfile::dataset_stats: return "dataset_stats";
    case NormProfile::imagenet: return "imagenet";
    case NormProfile::both: return "both";
  }
  return "?";
}

struct AugmentationConfig {
  std::size_t target_size = 224;
  double flip_prob = 0.5;
  double crop_scale_min = 0.6;
  double crop_scale_max = 1.0;
  double aspect_min = 3.0 / 4.0;
  double aspect_max = 4.0 / 3.0;
  double center_crop_fraction = 0.875;
  NormProfile norm_profile = NormProfile::dataset_stats;

  void validate() const {
    if (target_size < 1) throw InvalidArgument("target_size must be >= 1");
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw InvalidArgument("flip_prob must lie in [0, 1]");
    if (!(crop_scale_min > 0.0 && crop_scale_min <= crop_scale_max && crop_scale_max <= 1.0))
      throw InvalidArgument("crop scale range must satisfy 0 < min <= max <= 1");
    if (!(aspect_min > 0.0 && aspect_min <= aspect_max)) throw InvalidArgument("aspect range must satisfy 0 < min <= max");
    if (!(center_crop_fraction > 0.0 && center_crop_fraction <= 1.0))
      throw InvalidArgument("center_crop_fraction must lie in (0, 1]");
  }
};

/// Bilinear resampling to out_h × out_w with half-pixel centres: output pixel i
/// samples source coordinate (i + 0.5) · in/out − 0.5, clamped to the edge.
inline Image resize_bilinear(const Image& in, std::size_t out_h, std::size_t out_w) {
  if (in.height < 1 || in.width < 1) throw InvalidArgument("cannot resize an empty image");
  Image out(in.channels, out_h, out_w);
  const double sy = static_cast<double>(in.height) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in.width) / static_cast<double>(out_w);
  struct Tap {
    std::size_t i0, i1;
    float w1;
  };
  auto taps = [](std::size_t n_out, std::size_t n_in, double scale) {
    std::vector<Tap> t(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(src));
      const std::size_t i1 = std::min(i0 + 1, n_in - 1);
      t[i] = {i0, i1, static_cast<float>(src - static_cast<double>(i0))};
    }
    return t;
  };
  const auto ty = taps(out_h, in.height, sy);
  const auto tx = taps(out_w, in.width, sx);
  for (std::size_t c = 0; c < in.channels; ++c)
    for (std::size_t r = 0; r < out_h; ++r) {
      const float* row0 = in.data.data() + (c * in.height + ty[r].i0) * in.width;
      const float* row1 = in.data.data() + (c * in.height + ty[r].i1) * in.width;
      const float wy = ty[r].w1;
      float* dst = out.data.data() + (c * out_h + r) * out_w;
      for (std::size_t x = 0; x < out_w; ++x) {
        const float top = row0[tx[x].i0] + tx[x].w1 * (row0[tx[x].i1] - row0[tx[x].i0]);
        const float bot = row1[tx[x].i0] + tx[x].w1 * (row1[tx[x].i1] - row1[tx[x].i0]);
        dst[x] = top + wy * (bot - top);
      }
    }
  return out;
}

inline Image resize_bilinear(const Image& in, std::size_t target) { return resize_bilinear(in, target, target); }

struct CropWindow {
  std::size_t top = 0, left = 0, height = 0, width = 0;
  bool fallback = false;
  double area_fraction = 1.0;  // the sampled fraction; the pixel window approximates it
  bool operator==(const CropWindow&) const = default;
};

inline Image crop(const Image& in, const CropWindow& w) {
  Image out(in.channels, w.height, w.width);
  for (std::size_t c = 0; c < in.channels; ++c)
    for (std::size_t r = 0; r < w.height; ++r)
      std::copy_n(in.data.data() + (c * in.height + w.top + r) * in.width + w.left, w.width,
                  out.data.data() + (c * w.height + r) * w.width);
  return out;
}

/// Central square whose edge is `fraction` of the shorter side.
inline CropWindow center_window(std::size_t h, std::size_t w, double fraction) {
  const auto side = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(std::min(h, w)))));
  const double frac = static_cast<double>(side * side) / (static_cast<double>(h) * static_cast<double>(w));
  return {(h - side) / 2, (w - side) / 2, side, side, true, frac};
}

/// Draws a crop window: area fraction uniform in the scale range, log-uniform
/// aspect ratio (width / height) restricted to the ratios at which a window of
/// that area fits, then a uniformly random position. Up to 10 attempts; after
/// that the central square of the whole chip is used.
inline CropWindow sample_crop_window(std::size_t h, std::size_t w, const AugmentationConfig& cfg, Rng& rng) {
  const double area = static_cast<double>(h) * static_cast<double>(w);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double s = uniform(rng, cfg.crop_scale_min, cfg.crop_scale_max);
    const double target = s * area;
    // width = sqrt(target * r) <= w and height = sqrt(target / r) <= h.
    const double r_lo = std::max(cfg.aspect_min, target / (static_cast<double>(h) * static_cast<double>(h)));
    const double r_hi = std::min(cfg.aspect_max, static_cast<double>(w) * static_cast<double>(w) / target);
    if (r_lo > r_hi) continue;
    const double ratio = std::exp(uniform(rng, std::log(r_lo), std::log(r_hi)));
    // Round the width, then pick the height that brings the pixel area closest to the target.
    const auto cw = static_cast<std::size_t>(std::lround(std::sqrt(target * ratio)));
    if (cw < 1) continue;
    const auto ch = std::min(h, static_cast<std::size_t>(std::lround(target / static_cast<double>(cw))));
    if (cw < 1 || ch < 1 || cw > w || ch > h) continue;
    const auto top = static_cast<std::size_t>(uniform_index(rng, h - ch + 1));
    const auto left = static_cast<std::size_t>(uniform_index(rng, w - cw + 1));
    return {top, left, ch, cw, false, s};
  }
  return center_window(h, w, 1.0);
}

inline Image random_resized_crop(const Image& in, const AugmentationConfig& cfg, Rng& rng) {
  if (in.height < 2 || in.width < 2) throw InvalidArgument("random_resized_crop needs at least a 2x2 chip");
  return resize_bilinear(crop(in, sample_crop_window(in.height, in.width, cfg, rng)), cfg.target_size);
}

enum class FlipAxis { horizontal, vertical };

/// Reverses columns (horizontal) or rows (vertical).
inline Image flip(Image img, FlipAxis axis) {
  for (std::size_t c = 0; c < img.channels; ++c) {
    float* plane = img.data.data() + c * img.height * img.width;
    if (axis == FlipAxis::horizontal) {
      for (std::size_t r = 0; r < img.height; ++r) std::reverse(plane + r * img.width, plane + (r + 1) * img.width);
    } else {
      for (std::size_t r = 0; r < img.height / 2; ++r)
        std::swap_ranges(plane + r * img.width, plane + (r + 1) * img.width, plane + (img.height - 1 - r) * img.width);
    }
  }
  return img;
}

/// One uniform draw per call; the flip is applied when it falls below p.
inline Image random_flip(Image img, FlipAxis axis, double p, Rng& rng, bool* applied = nullptr) {
  const bool hit = uniform01(rng) < p;
  if (applied) *applied = hit;
  return hit ? flip(std::move(img), axis) : img;
}

/// Resize to target, keep the central `center_crop_fraction` square, resize back to target.
inline Image center_crop_eval(const Image& in, const AugmentationConfig& cfg) {
  const Image resized = resize_bilinear(in, cfg.target_size);
  if (cfg.center_crop_fraction >= 1.0) return resized;
  return resize_bilinear(crop(resized, center_window(cfg.target_size, cfg.target_size, cfg.center_crop_fraction)),
                         cfg.target_size);
}

inline const geo::ChannelStats& imagenet_stats() {
  static const geo::ChannelStats s{{0.485, 0.456, 0.406}, {0.229, 0.224, 0.225}};
  return s;
}

/// Per-channel (x - mean) / std. `both` applies dataset statistics and then ImageNet statistics.
inline void normalize(Image& img, NormProfile profile, const geo::ChannelStats& dataset) {
  auto apply = [&](const geo::ChannelStats& s) {
    s.check_invariants();
    if (s.mean.size() != img.channels)
      throw InvalidArgument("normalisation has " + std::to_string(s.mean.size()) + " channels, image has " +
                            std::to_string(img.channels));
    const std::size_t plane = img.height * img.width;
    for (std::size_t c = 0; c < img.channels; ++c) {
      const float mu = static_cast<float>(s.mean[c]);
      const float inv = static_cast<float>(1.0 / s.stddev[c]);
      float* p = img.data.data() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - mu) * inv;
    }
  };
  if (profile == NormProfile::dataset_stats || profile == NormProfile::both) apply(dataset);
  if (profile == NormProfile::imagenet || profile == NormProfile::both) apply(imagenet_stats());
}

/// Training view: random resized crop, horizontal flip, vertical flip, normalisation.
inline Image train_transform(const Image& in, const AugmentationConfig& cfg, const geo::ChannelStats& stats, Rng& rng) {
  Image out = random_resized_crop(in, cfg, rng);
  out = random_flip(std::move(out), FlipAxis::horizontal, cfg.flip_prob, rng);
  out = random_flip(std::move(out), FlipAxis::vertical, cfg.flip_prob, rng);
  normalize(out, cfg.norm_profile, stats);
  return out;
}

/// Evaluation view: resize, centre crop, normalisation.
inline Image eval_transform(const Image& in, const AugmentationConfig& cfg, const geo::ChannelStats& stats) {
  Image out = center_crop_eval(in, cfg);
  normalize(out, cfg.norm_profile, stats);
  return out;
}

}  // namespace lulc::data
