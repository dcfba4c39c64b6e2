#pragma once

#include <cmath>
#include <vector>

#include "lulc/core/parallel.hpp"
#include "lulc/core/random.hpp"
#include "lulc/geo/polygon.hpp"
#include "lulc/geo/scene_io.hpp"
#include "lulc/geo/types.hpp"

namespace lulc::geo {

/// mask[r][c] = valid(r, c) AND the pixel centre lies inside the ROI.
inline Mask rasterize_mask(const Scene& scene, const Roi& roi) {
  scene.check_invariants();
  if (!scene.geotransform.valid()) throw InvalidArgument("scene geotransform is invalid");
  Mask mask(scene.width, scene.height, false);
  const Bounds box = roi_bounds(roi);
  parallel_for(scene.height, [&](std::size_t r) {
    const double lat = scene.geotransform.lat_at(static_cast<double>(r) + 0.5);
    if (lat < box.min_lat || lat > box.max_lat) return;
    for (std::size_t c = 0; c < scene.width; ++c) {
      if (!scene.nodata_mask.at(r, c)) continue;
      const double lon = scene.geotransform.lon_at(static_cast<double>(c) + 0.5);
      if (lon < box.min_lon || lon > box.max_lon) continue;
      if (point_in_roi({lon, lat}, roi)) mask.set(r, c, true);
    }
  });
  return mask;
}

inline Mask rasterize_mask(const Scene& scene, const RoiPolygon& poly) { return rasterize_mask(scene, Roi{{poly}}); }

struct TilingOptions {
  std::size_t tile_size = 64;
  /// Fraction of mask-true pixels a tile needs to be kept. 1.0 discards a tile
  /// with any invalid pixel. Tiles with no valid pixel are always discarded.
  double min_valid_fraction = 1.0;
};

/// Cuts the scene into the non-overlapping tile grid anchored at (0, 0).
///
/// Partial tiles at the right and bottom borders are dropped. UUIDs are drawn
/// from `uuids` in row-major emission order, so a seeded generator gives a
/// reproducible tile set regardless of the worker count used for the validity scan.
inline std::vector<TileChip> tile_scene(const Scene& scene, const Mask& mask, UuidGenerator& uuids,
                                        const TilingOptions& opts = {}) {
  scene.check_invariants();
  if (opts.tile_size < 1) throw InvalidArgument("tile_size must be >= 1");
  if (mask.width != scene.width || mask.height != scene.height)
    throw InvalidArgument("mask dimensions do not match the scene");
  if (!(opts.min_valid_fraction >= 0.0 && opts.min_valid_fraction <= 1.0))
    throw InvalidArgument("min_valid_fraction must lie in [0, 1]");
  const std::size_t ts = opts.tile_size;
  const std::size_t grid_rows = scene.height / ts;
  const std::size_t grid_cols = scene.width / ts;
  const auto needed = static_cast<std::size_t>(std::ceil(opts.min_valid_fraction * static_cast<double>(ts * ts)));

  std::vector<std::uint8_t> keep(grid_rows * grid_cols, 0);
  parallel_for(grid_rows, [&](std::size_t gr) {
    for (std::size_t gc = 0; gc < grid_cols; ++gc) {
      std::size_t valid = 0;
      for (std::size_t r = gr * ts; r < (gr + 1) * ts; ++r)
        for (std::size_t c = gc * ts; c < (gc + 1) * ts; ++c) valid += mask.at(r, c);
      keep[gr * grid_cols + gc] = valid > 0 && valid >= needed;
    }
  });

  std::vector<TileChip> chips;
  for (std::size_t gr = 0; gr < grid_rows; ++gr)
    for (std::size_t gc = 0; gc < grid_cols; ++gc) {
      if (!keep[gr * grid_cols + gc]) continue;
      TileChip t;
      t.uuid = uuids.next();
      t.scene_id = scene.meta.scene_id;
      t.row_off = gr * ts;
      t.col_off = gc * ts;
      t.size = ts;
      t.bands = scene.bands;
      t.data.resize(scene.bands * ts * ts);
      for (std::size_t b = 0; b < scene.bands; ++b)
        for (std::size_t r = 0; r < ts; ++r)
          for (std::size_t c = 0; c < ts; ++c) t.data[(b * ts + r) * ts + c] = scene.at(b, t.row_off + r, t.col_off + c);
      t.bounds = block_bounds(scene.geotransform, t.row_off, t.col_off, ts, ts);
      chips.push_back(std::move(t));
    }
  return chips;
}

/// Assigns each chip the most frequent ground-truth class under it (ties go to
/// the lower class id). Chips whose pixels carry no class stay unlabeled.
inline void label_tiles(std::vector<TileChip>& chips, const ClassGrid& truth) {
  for (auto& t : chips) {
    std::array<std::size_t, 256> counts{};
    for (std::size_t r = 0; r < t.size; ++r)
      for (std::size_t c = 0; c < t.size; ++c) ++counts[truth.at(t.row_off + r, t.col_off + c)];
    int best = -1;
    std::size_t best_count = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k)
      if (counts[k] > best_count) {
        best_count = counts[k];
        best = static_cast<int>(k);
      }
    if (best >= 0) t.label = best;
  }
}

}  // namespace lulc::geo
