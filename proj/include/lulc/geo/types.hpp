#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lulc/core/error.hpp"
#include "lulc/core/text.hpp"

namespace lulc::geo {

using Date = std::chrono::year_month_day;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD).
inline Date parse_date(std::string_view s) {
  s = trim(s);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw FormatError("malformed date '" + std::string(s) + "'");
  const auto y = parse_int(s.substr(0, 4), "year");
  const auto m = parse_int(s.substr(5, 2), "month");
  const auto d = parse_int(s.substr(8, 2), "day");
  Date date{std::chrono::year(static_cast<int>(y)), std::chrono::month(static_cast<unsigned>(m)),
            std::chrono::day(static_cast<unsigned>(d))};
  if (!date.ok()) throw FormatError("invalid calendar date '" + std::string(s) + "'");
  return date;
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

struct SceneMeta {
  std::string scene_id;
  Date acquisition_date{};
  double cloud_cover_pct = 0.0;
  std::string path;
};

/// Affine pixel → lon/lat mapping for north-up rasters (no rotation terms).
struct GeoTransform {
  double origin_lon = 0.0;
  double origin_lat = 0.0;
  double pixel_width = 1.0;
  double pixel_height = -1.0;  // negative for north-up

  double lon_at(double col) const { return origin_lon + col * pixel_width; }
  double lat_at(double row) const { return origin_lat + row * pixel_height; }

  bool valid() const {
    return std::isfinite(origin_lon) && std::isfinite(origin_lat) && std::isfinite(pixel_width) &&
           std::isfinite(pixel_height) && pixel_width != 0.0 && pixel_height != 0.0;
  }
};

struct Bounds {
  double min_lon = 0.0;
  double min_lat = 0.0;
  double max_lon = 0.0;
  double max_lat = 0.0;

  bool operator==(const Bounds&) const = default;
};

/// Geographic bounds of the pixel block [row, row+rows) × [col, col+cols).
inline Bounds block_bounds(const GeoTransform& gt, std::size_t row, std::size_t col, std::size_t rows,
                           std::size_t cols) {
  const double lon0 = gt.lon_at(static_cast<double>(col));
  const double lon1 = gt.lon_at(static_cast<double>(col + cols));
  const double lat0 = gt.lat_at(static_cast<double>(row));
  const double lat1 = gt.lat_at(static_cast<double>(row + rows));
  return {std::min(lon0, lon1), std::min(lat0, lat1), std::max(lon0, lon1), std::max(lat0, lat1)};
}

/// Per-pixel boolean grid (1 = valid / inside).
struct Mask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> values;

  Mask() = default;
  Mask(std::size_t w, std::size_t h, bool fill) : width(w), height(h), values(w * h, fill ? 1 : 0) {}

  bool at(std::size_t r, std::size_t c) const { return values[r * width + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { values[r * width + c] = v ? 1 : 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : values) n += v != 0;
    return n;
  }
};

/// Multi-band raster. Samples are stored band-sequential: band b, row r, col c
/// lives at pixels[(b * height + r) * width + c].
struct Scene {
  SceneMeta meta;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 3;
  std::vector<float> pixels;
  Mask nodata_mask;  // true = valid
  GeoTransform geotransform;

  float& at(std::size_t b, std::size_t r, std::size_t c) { return pixels[(b * height + r) * width + c]; }
  float at(std::size_t b, std::size_t r, std::size_t c) const { return pixels[(b * height + r) * width + c]; }

  void check_invariants() const {
    if (width < 1 || height < 1) throw InvalidArgument("scene dimensions must be >= 1");
    if (pixels.size() != width * height * bands)
      throw InvalidArgument("scene pixel buffer has " + std::to_string(pixels.size()) + " samples, expected " +
                            std::to_string(width * height * bands));
    if (nodata_mask.values.size() != width * height || nodata_mask.width != width)
      throw InvalidArgument("scene nodata mask does not match scene dimensions");
  }
};

inline constexpr std::size_t kNumClasses = 10;

inline const std::array<std::string, kNumClasses>& eurosat_class_names() {
  static const std::array<std::string, kNumClasses> names = {
      "AnnualCrop", "Forest",       "HerbaceousVegetation", "Highway", "Industrial",
      "Pasture",    "PermanentCrop", "Residential",         "River",   "SeaLake"};
  return names;
}

struct TileChip {
  std::string uuid;
  std::string scene_id;
  std::size_t row_off = 0;
  std::size_t col_off = 0;
  std::size_t size = 64;
  std::size_t bands = 3;
  std::vector<float> data;  // bands × size × size, plane-major
  Bounds bounds;
  std::optional<int> label;

  float at(std::size_t b, std::size_t r, std::size_t c) const { return data[(b * size + r) * size + c]; }
};

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  void check_invariants() const {
    if (mean.size() != stddev.size()) throw InvalidArgument("channel stats mean/std lengths differ");
    for (double s : stddev)
      if (!(s > 0.0)) throw InvalidArgument("channel stats std must be strictly positive");
  }
};

}  // namespace lulc::geo
