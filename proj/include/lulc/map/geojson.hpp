#pragma once

#include <array>
#include <cstdio>
#include <set>
#include <string>

#include <json.hpp>

#include "lulc/infer/raster.hpp"

namespace lulc::map {

using Json = nlohmann::ordered_json;

struct MapStyle {
  std::array<infer::Rgb, geo::kNumClasses> class_palette = infer::default_palette();
  std::array<std::string, geo::kNumClasses> legend_labels = [] {
    std::array<std::string, geo::kNumClasses> l;
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = geo::eurosat_class_names()[i];
    return l;
  }();
  double opacity = 0.7;

  void validate() const {
    if (!(opacity > 0.0 && opacity <= 1.0)) throw InvalidArgument("map opacity must lie in (0, 1]");
    std::set<infer::Rgb> seen(class_palette.begin(), class_palette.end());
    if (seen.size() != class_palette.size()) throw InvalidArgument("map palette colours must be distinct");
    for (const auto& l : legend_labels)
      if (l.empty()) throw InvalidArgument("map legend labels must be non-empty");
  }
};

inline std::string hex_colour(const infer::Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

inline infer::Rgb parse_hex_colour(std::string_view s) {
  const auto bad = [&] { return InvalidArgument("colour '" + std::string(s) + "' is not #rrggbb"); };
  if (s.size() != 7 || s[0] != '#') throw bad();
  infer::Rgb out{};
  for (std::size_t i = 0; i < 3; ++i) {
    unsigned v = 0;
    for (char ch : s.substr(1 + 2 * i, 2)) {
      v <<= 4;
      if (ch >= '0' && ch <= '9') v |= static_cast<unsigned>(ch - '0');
      else if (ch >= 'a' && ch <= 'f') v |= static_cast<unsigned>(ch - 'a' + 10);
      else if (ch >= 'A' && ch <= 'F') v |= static_cast<unsigned>(ch - 'A' + 10);
      else throw bad();
    }
    out[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

/// Shortest decimal for the float, read back as a double, so 0.9f prints as 0.9.
inline double clean_confidence(float c) { return std::stod(format_number(c)); }

/// One Polygon per non-suppressed cell; rings run counter-clockwise and close
/// on their first vertex.
inline Json raster_to_geojson(const infer::ClassRaster& raster, const MapStyle& style = {}) {
  raster.check_invariants();
  style.validate();
  Json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = Json::array();
  for (std::size_t r = 0; r < raster.rows; ++r)
    for (std::size_t c = 0; c < raster.cols; ++c) {
      const std::size_t i = raster.index(r, c);
      const int cls = raster.class_id[i];
      if (cls == infer::kSuppressed) continue;
      const auto& b = raster.bounds[i];
      Json f;
      f["type"] = "Feature";
      f["properties"] = {{"class", cls},
                         {"class_name", style.legend_labels[static_cast<std::size_t>(cls)]},
                         {"confidence", clean_confidence(raster.confidence[i])},
                         {"uuid", raster.uuid[i]},
                         {"row", r},
                         {"col", c}};
      f["geometry"] = {{"type", "Polygon"},
                       {"coordinates", Json::array({Json::array({{b.min_lon, b.min_lat},
                                                                 {b.max_lon, b.min_lat},
                                                                 {b.max_lon, b.max_lat},
                                                                 {b.min_lon, b.max_lat},
                                                                 {b.min_lon, b.min_lat}})})}};
      fc["features"].push_back(std::move(f));
    }
  return fc;
}

inline std::string geojson_text(const Json& fc) { return fc.dump(1) + "\n"; }

inline void write_geojson(const std::filesystem::path& path, const Json& fc) { write_text_file(path, geojson_text(fc)); }

/// Twice the signed shoelace area; positive for counter-clockwise rings.
inline double ring_signed_area2(const Json& ring) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < ring.size(); ++k)
    s += ring[k][0].get<double>() * ring[k + 1][1].get<double>() - ring[k + 1][0].get<double>() * ring[k][1].get<double>();
  return s;
}

}  // namespace lulc::map
