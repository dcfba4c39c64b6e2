#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>

#include "lulc/core/random.hpp"
#include "lulc/geo/scene_io.hpp"
#include "lulc/geo/types.hpp"

namespace lulc::geo {

enum class LayoutKind { constant, checkerboard, stripes };

/// Class assignment over the pixel grid. Blocks of `block` pixels share a class.
struct ClassLayout {
  LayoutKind kind = LayoutKind::checkerboard;
  std::size_t block = 64;
  std::size_t num_classes = kNumClasses;
  std::size_t offset = 0;

  int class_at(std::size_t r, std::size_t c) const {
    switch (kind) {
      case LayoutKind::constant: return static_cast<int>(offset % num_classes);
      case LayoutKind::stripes: return static_cast<int>((r / block + offset) % num_classes);
      case LayoutKind::checkerboard: break;
    }
    return static_cast<int>((r / block + c / block + offset) % num_classes);
  }
};

struct SynthSpec {
  std::size_t width = 256;
  std::size_t height = 256;
  ClassLayout layout;
  double noise_sigma = 0.08;
  double texture_amplitude = 0.05;
  GeoTransform geotransform{10.0, 50.0, 1e-4, -1e-4};
  std::string scene_id = "synth";
};

/// Mean RGB reflectance per class, loosely following the look of the ten land-cover types.
inline const std::array<std::array<double, 3>, kNumClasses>& synth_class_colors() {
  static const std::array<std::array<double, 3>, kNumClasses> colors = {{
      {0.75, 0.65, 0.40},  // annual crop
      {0.15, 0.40, 0.15},  // forest
      {0.45, 0.60, 0.30},  // herbaceous vegetation
      {0.55, 0.55, 0.55},  // highway
      {0.72, 0.50, 0.62},  // industrial
      {0.55, 0.82, 0.45},  // pasture
      {0.60, 0.42, 0.22},  // permanent crop
      {0.88, 0.82, 0.76},  // residential
      {0.25, 0.45, 0.72},  // river
      {0.08, 0.18, 0.45},  // sea / lake
  }};
  return colors;
}

struct SynthResult {
  Scene scene;
  ClassGrid truth;
};

/// Renders a deterministic 3-band scene: class mean colour + a class-specific
/// sinusoidal texture + seeded Gaussian noise, clamped to [0, 1].
inline SynthResult synth_scene(std::uint64_t seed, const SynthSpec& spec) {
  if (spec.width < 64 || spec.height < 64) throw InvalidArgument("synthetic scenes must be at least 64x64");
  if (spec.layout.num_classes < 1 || spec.layout.num_classes > kNumClasses || spec.layout.block < 1)
    throw InvalidArgument("class layout needs 1..10 classes and block >= 1");
  SynthResult out;
  Scene& s = out.scene;
  s.meta.scene_id = spec.scene_id;
  s.width = spec.width;
  s.height = spec.height;
  s.bands = 3;
  s.geotransform = spec.geotransform;
  s.pixels.resize(s.width * s.height * 3);
  s.nodata_mask = Mask(s.width, s.height, true);
  out.truth = {s.width, s.height, std::vector<std::uint8_t>(s.width * s.height)};

  Rng rng(derive_seed(seed, "synth"));
  const auto& colors = synth_class_colors();
  for (std::size_t r = 0; r < s.height; ++r)
    for (std::size_t c = 0; c < s.width; ++c) {
      const int k = spec.layout.class_at(r, c);
      out.truth.values[r * s.width + c] = static_cast<std::uint8_t>(k);
      const double fr = static_cast<double>(k % 3 + 1) / 16.0;
      const double fc = static_cast<double>(k % 4) / 16.0;
      const double texture =
          spec.texture_amplitude * std::sin(2.0 * std::numbers::pi * (fr * static_cast<double>(r) + fc * static_cast<double>(c)));
      for (std::size_t b = 0; b < 3; ++b) {
        const double v = colors[k][b] + texture + spec.noise_sigma * standard_normal(rng);
        s.at(b, r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  return out;
}

}  // namespace lulc::geo
