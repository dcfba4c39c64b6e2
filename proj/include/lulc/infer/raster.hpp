#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lulc/core/binary.hpp"
#include "lulc/core/text.hpp"
#include "lulc/geo/chip_archive.hpp"
#include "lulc/infer/predict.hpp"

namespace lulc::infer {

/// Tile-grid class map of one scene, row-major.
struct ClassRaster {
  std::size_t rows = 0, cols = 0;
  std::vector<int> class_id;
  std::vector<float> confidence;
  std::vector<std::string> uuid;  // empty for cells without a tile
  std::vector<geo::Bounds> bounds;

  ClassRaster() = default;
  ClassRaster(std::size_t r, std::size_t c)
      : rows(r), cols(c), class_id(r * c, kSuppressed), confidence(r * c, 0.0f), uuid(r * c), bounds(r * c) {}

  std::size_t size() const { return rows * cols; }
  std::size_t index(std::size_t r, std::size_t c) const { return r * cols + c; }
  int cls(std::size_t r, std::size_t c) const { return class_id[index(r, c)]; }
  bool operator==(const ClassRaster&) const = default;

  std::size_t suppressed_count() const {
    std::size_t n = 0;
    for (int c : class_id) n += c == kSuppressed;
    return n;
  }

  void check_invariants() const {
    const std::size_t n = size();
    if (class_id.size() != n || confidence.size() != n || uuid.size() != n || bounds.size() != n)
      throw InvalidArgument("class raster buffers do not match " + std::to_string(rows) + "x" + std::to_string(cols));
    for (std::size_t i = 0; i < n; ++i) {
      if (class_id[i] < kSuppressed || class_id[i] >= static_cast<int>(geo::kNumClasses))
        throw InvalidArgument("class raster cell " + std::to_string(i) + " has class " + std::to_string(class_id[i]));
      if (!(confidence[i] >= 0.0f && confidence[i] <= 1.0f))
        throw InvalidArgument("class raster cell " + std::to_string(i) + " has confidence outside [0, 1]");
    }
  }
};

inline ClassRaster threshold_suppress(ClassRaster raster, double tau = 0.6) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("confidence threshold must lie in [0, 1]");
  for (std::size_t i = 0; i < raster.size(); ++i)
    if (raster.confidence[i] < tau) raster.class_id[i] = kSuppressed;
  return raster;
}

/// Places each prediction at grid cell (row_off / tile, col_off / tile). Cells
/// without a prediction are suppressed and take their bounds from the scene
/// geometry.
inline ClassRaster stitch(std::span<const TilePrediction> preds, const geo::SceneGeometry& scene) {
  if (scene.tile_size < 1) throw InvalidArgument("scene tile size must be >= 1");
  ClassRaster out(scene.grid_rows(), scene.grid_cols());
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out.bounds[out.index(r, c)] = geo::block_bounds(scene.geotransform, r * scene.tile_size,
                                                      c * scene.tile_size, scene.tile_size, scene.tile_size);
  std::vector<bool> filled(out.size(), false);
  for (const auto& p : preds) {
    if (p.scene_id != scene.scene_id)
      throw InvalidArgument("tile " + p.uuid + " belongs to scene '" + p.scene_id + "', not '" + scene.scene_id + "'");
    if (p.row_off % scene.tile_size || p.col_off % scene.tile_size)
      throw IndexError("tile " + p.uuid + " offset is not on the " + std::to_string(scene.tile_size) + "-pixel grid");
    const std::size_t r = p.row_off / scene.tile_size, c = p.col_off / scene.tile_size;
    if (r >= out.rows || c >= out.cols)
      throw IndexError("tile " + p.uuid + " lands outside the " + std::to_string(out.rows) + "x" +
                       std::to_string(out.cols) + " grid");
    const std::size_t i = out.index(r, c);
    if (filled[i])
      throw InvalidArgument("tiles " + out.uuid[i] + " and " + p.uuid + " both map to grid cell (" +
                            std::to_string(r) + ", " + std::to_string(c) + ")");
    filled[i] = true;
    out.class_id[i] = p.class_id;
    out.confidence[i] = p.confidence;
    out.uuid[i] = p.uuid;
    out.bounds[i] = p.bounds;
  }
  return out;
}

/// 3×3 mode filter over the tile grid. Suppressed cells neither vote nor
/// change. A cell switches only when one class strictly out-votes every other,
/// its own included. Each pass reads only the previous pass's output.
inline ClassRaster majority_filter(const ClassRaster& in, std::size_t passes = 1) {
  if (in.size() == 0) throw InvalidArgument("majority filter needs a non-empty raster");
  ClassRaster cur = in;
  for (std::size_t pass = 0; pass < passes; ++pass) {
    ClassRaster next = cur;
    parallel_for(cur.rows, [&](std::size_t r) {
      for (std::size_t c = 0; c < cur.cols; ++c) {
        const int own = cur.cls(r, c);
        if (own == kSuppressed) continue;
        std::array<int, geo::kNumClasses> votes{};
        for (std::size_t rr = r ? r - 1 : 0; rr <= std::min(r + 1, cur.rows - 1); ++rr)
          for (std::size_t cc = c ? c - 1 : 0; cc <= std::min(c + 1, cur.cols - 1); ++cc) {
            const int v = cur.cls(rr, cc);
            if (v != kSuppressed) ++votes[static_cast<std::size_t>(v)];
          }
        int best = own;
        bool unique = true;
        for (int k = 0; k < static_cast<int>(geo::kNumClasses); ++k) {
          if (k == best) continue;
          if (votes[k] > votes[best]) {
            best = k;
            unique = true;
          } else if (votes[k] == votes[best]) {
            unique = false;
          }
        }
        // A tie at the top keeps the original class.
        if (best != own && unique && votes[best] > votes[own]) next.class_id[next.index(r, c)] = best;
      }
    });
    cur = std::move(next);
  }
  return cur;
}

// ------------------------------------------------------------------ serialising

inline constexpr std::string_view kRasterHeader = "row,col,class_id,confidence,uuid,min_lon,min_lat,max_lon,max_lat";

inline std::string raster_csv(const ClassRaster& raster) {
  raster.check_invariants();
  std::string out(kRasterHeader);
  out += '\n';
  for (std::size_t r = 0; r < raster.rows; ++r)
    for (std::size_t c = 0; c < raster.cols; ++c) {
      const std::size_t i = raster.index(r, c);
      const auto& b = raster.bounds[i];
      out += csv_join({std::to_string(r), std::to_string(c), std::to_string(raster.class_id[i]),
                       format_number(raster.confidence[i]), raster.uuid[i], format_number(b.min_lon),
                       format_number(b.min_lat), format_number(b.max_lon), format_number(b.max_lat)});
      out += '\n';
    }
  return out;
}

inline void write_raster_csv(const std::filesystem::path& path, const ClassRaster& raster) {
  write_text_file(path, raster_csv(raster));
}

inline ClassRaster parse_raster_csv(std::string_view text, const std::string& source) {
  const auto table = parse_csv(text);
  const auto col = [&](std::string_view n) { return table.column(n); };
  const std::size_t ir = col("row"), ic = col("col"), ik = col("class_id"), ip = col("confidence"), iu = col("uuid"),
                    i0 = col("min_lon"), i1 = col("min_lat"), i2 = col("max_lon"), i3 = col("max_lat");
  const auto grid_index = [&](const std::string& v, std::string_view what) {
    const auto x = parse_int(v, what);
    if (x < 0 || static_cast<std::size_t>(x) >= table.rows.size())
      throw FormatError(source + ": " + std::string(what) + " index " + v + " is out of range");
    return static_cast<std::size_t>(x);
  };
  std::size_t rows = 0, cols = 0;
  for (const auto& row : table.rows) {
    rows = std::max(rows, grid_index(row.at(ir), "row") + 1);
    cols = std::max(cols, grid_index(row.at(ic), "col") + 1);
  }
  if (table.rows.size() != rows * cols)
    throw FormatError(source + ": expected " + std::to_string(rows * cols) + " cells for a " + std::to_string(rows) +
                      "x" + std::to_string(cols) + " grid, found " + std::to_string(table.rows.size()));
  ClassRaster out(rows, cols);
  std::vector<bool> seen(rows * cols, false);
  for (const auto& row : table.rows) {
    const std::size_t r = grid_index(row.at(ir), "row"), c = grid_index(row.at(ic), "col");
    const std::size_t i = out.index(r, c);
    if (seen[i]) throw FormatError(source + ": cell (" + std::to_string(r) + ", " + std::to_string(c) + ") repeats");
    seen[i] = true;
    out.class_id[i] = static_cast<int>(parse_int(row.at(ik), "class_id"));
    out.confidence[i] = static_cast<float>(parse_double(row.at(ip), "confidence"));
    out.uuid[i] = row.at(iu);
    out.bounds[i] = {parse_double(row.at(i0), "min_lon"), parse_double(row.at(i1), "min_lat"),
                     parse_double(row.at(i2), "max_lon"), parse_double(row.at(i3), "max_lat")};
  }
  try {
    out.check_invariants();
  } catch (const InvalidArgument& e) {
    throw FormatError(source + ": " + e.what());
  }
  return out;
}

inline ClassRaster read_raster_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("class raster not found: " + path.string());
  return parse_raster_csv(read_text_file(path), path.string());
}

using Rgb = std::array<std::uint8_t, 3>;

/// Default colours for classes 0..9.
inline const std::array<Rgb, geo::kNumClasses>& default_palette() {
  static const std::array<Rgb, geo::kNumClasses> p = {{{230, 159, 0},
                                                       {0, 100, 0},
                                                       {154, 205, 50},
                                                       {128, 128, 128},
                                                       {178, 34, 34},
                                                       {144, 238, 144},
                                                       {218, 112, 214},
                                                       {255, 215, 0},
                                                       {30, 144, 255},
                                                       {0, 0, 139}}};
  return p;
}

inline constexpr Rgb kSuppressedColour = {0, 0, 0};

/// 8-bit paletted BMP, one `scale`×`scale` square per cell. Palette index k is
/// class k; index 10 marks suppressed cells.
inline std::vector<unsigned char> raster_bmp(const ClassRaster& raster, std::size_t scale = 8,
                                             const std::array<Rgb, geo::kNumClasses>& palette = default_palette()) {
  raster.check_invariants();
  if (scale < 1) throw InvalidArgument("image scale must be >= 1");
  const std::size_t w = raster.cols * scale, h = raster.rows * scale;
  const std::size_t stride = (w + 3) / 4 * 4;
  const std::uint32_t colours = geo::kNumClasses + 1;
  const std::uint32_t offset = 14 + 40 + 4 * colours;
  ByteWriter out;
  out.put_bytes("BM", 2);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(offset + stride * h));
  out.put<std::uint32_t>(0);
  out.put<std::uint32_t>(offset);
  out.put<std::uint32_t>(40);
  out.put<std::int32_t>(static_cast<std::int32_t>(w));
  out.put<std::int32_t>(static_cast<std::int32_t>(h));  // positive: rows stored bottom-up
  out.put<std::uint16_t>(1);
  out.put<std::uint16_t>(8);
  out.put<std::uint32_t>(0);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(stride * h));
  out.put<std::int32_t>(2835);
  out.put<std::int32_t>(2835);
  out.put<std::uint32_t>(colours);
  out.put<std::uint32_t>(0);
  for (std::uint32_t k = 0; k < colours; ++k) {
    const Rgb& c = k < geo::kNumClasses ? palette[k] : kSuppressedColour;
    out.put<std::uint8_t>(c[2]);
    out.put<std::uint8_t>(c[1]);
    out.put<std::uint8_t>(c[0]);
    out.put<std::uint8_t>(0);
  }
  std::vector<unsigned char> line(stride, 0);
  for (std::size_t y = h; y-- > 0;) {
    const std::size_t r = y / scale;
    for (std::size_t x = 0; x < w; ++x) {
      const int cls = raster.cls(r, x / scale);
      line[x] = static_cast<unsigned char>(cls == kSuppressed ? geo::kNumClasses : static_cast<std::size_t>(cls));
    }
    out.put_bytes(line.data(), line.size());
  }
  return out.bytes();
}

inline void write_raster_bmp(const std::filesystem::path& path, const ClassRaster& raster, std::size_t scale = 8) {
  write_binary_file(path, raster_bmp(raster, scale));
}

}  // namespace lulc::infer
