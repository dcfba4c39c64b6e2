#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lulc/core/text.hpp"
#include "lulc/geo/types.hpp"

namespace lulc::geo {

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

using Ring = std::vector<LonLat>;

/// Polygon with holes in EPSG:4326. rings[0] is the exterior, the rest are holes.
struct RoiPolygon {
  std::vector<Ring> rings;
};

/// Region of interest: union of polygons (a GeoJSON MultiPolygon or several features).
struct Roi {
  std::vector<RoiPolygon> polygons;
};

inline void validate_ring(const Ring& ring, const std::string& where) {
  if (ring.size() < 4) throw FormatError(where + ": ring needs at least 4 positions, has " + std::to_string(ring.size()));
  for (const auto& p : ring) {
    if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) throw FormatError(where + ": non-finite coordinate");
    if (p.lon < -180.0 || p.lon > 180.0 || p.lat < -90.0 || p.lat > 90.0)
      throw FormatError(where + ": coordinate outside WGS84 range");
  }
  if (ring.front().lon != ring.back().lon || ring.front().lat != ring.back().lat)
    throw FormatError(where + ": ring is not closed (first position != last position)");
}

inline void validate_polygon(const RoiPolygon& poly, const std::string& where = "polygon") {
  if (poly.rings.empty()) throw FormatError(where + ": polygon has no rings");
  for (std::size_t i = 0; i < poly.rings.size(); ++i) validate_ring(poly.rings[i], where + " ring " + std::to_string(i));
}

/// Even-odd ray casting over every ring of the polygon.
///
/// A ray is cast towards +lon. Edge (a, b) is crossed when p.lat lies in the
/// half-open interval [min(a.lat, b.lat), max(a.lat, b.lat)) and the crossing
/// longitude is strictly greater than p.lon. Consequently points on a bottom or
/// left boundary count as inside and points on a top or right boundary count as
/// outside, so adjacent polygons sharing an edge never both claim a point.
/// Holes are handled by the parity rule: a point inside a hole crosses one more
/// ring boundary and reads as outside.
inline bool point_in_polygon(LonLat p, const RoiPolygon& poly) {
  bool inside = false;
  for (const auto& ring : poly.rings) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const auto& a = ring[i];
      const auto& b = ring[j];
      if ((a.lat > p.lat) != (b.lat > p.lat)) {
        const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
        if (p.lon < x) inside = !inside;
      }
    }
  }
  return inside;
}

inline bool point_in_roi(LonLat p, const Roi& roi) {
  for (const auto& poly : roi.polygons)
    if (point_in_polygon(p, poly)) return true;
  return false;
}

inline Bounds roi_bounds(const Roi& roi) {
  Bounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& poly : roi.polygons)
    for (const auto& ring : poly.rings)
      for (const auto& p : ring) {
        b.min_lon = std::min(b.min_lon, p.lon);
        b.min_lat = std::min(b.min_lat, p.lat);
        b.max_lon = std::max(b.max_lon, p.lon);
        b.max_lat = std::max(b.max_lat, p.lat);
      }
  return b;
}

namespace detail {

inline Ring parse_ring(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": ring must be an array of positions");
  Ring ring;
  for (const auto& pos : j) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
      throw FormatError(where + ": position must be [lon, lat]");
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  validate_ring(ring, where);
  return ring;
}

inline RoiPolygon parse_polygon_coords(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw FormatError(where + ": Polygon coordinates must be a non-empty array of rings");
  RoiPolygon poly;
  for (std::size_t i = 0; i < j.size(); ++i) poly.rings.push_back(parse_ring(j[i], where + " ring " + std::to_string(i)));
  return poly;
}

inline void collect_geometry(const nlohmann::json& g, Roi& roi, const std::string& where) {
  if (!g.is_object() || !g.contains("type")) throw FormatError(where + ": expected a GeoJSON object with 'type'");
  const auto type = g.at("type").get<std::string>();
  if (type == "FeatureCollection") {
    const auto& feats = g.at("features");
    for (std::size_t i = 0; i < feats.size(); ++i)
      collect_geometry(feats[i], roi, where + " feature " + std::to_string(i));
  } else if (type == "Feature") {
    if (!g.contains("geometry") || g["geometry"].is_null()) throw FormatError(where + ": feature has no geometry");
    collect_geometry(g["geometry"], roi, where);
  } else if (type == "Polygon") {
    roi.polygons.push_back(parse_polygon_coords(g.at("coordinates"), where));
  } else if (type == "MultiPolygon") {
    const auto& coords = g.at("coordinates");
    if (!coords.is_array()) throw FormatError(where + ": MultiPolygon coordinates must be an array");
    for (std::size_t i = 0; i < coords.size(); ++i)
      roi.polygons.push_back(parse_polygon_coords(coords[i], where + " polygon " + std::to_string(i)));
  } else {
    throw FormatError(where + ": unsupported geometry type '" + type + "' (Polygon or MultiPolygon expected)");
  }
}

}  // namespace detail

/// Parses a GeoJSON Polygon, MultiPolygon, Feature or FeatureCollection of those.
inline Roi parse_roi_geojson(std::string_view text, const std::string& source = "roi") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(source + ": " + e.what());
  }
  Roi roi;
  try {
    detail::collect_geometry(j, roi, source);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(source + ": " + e.what());
  }
  if (roi.polygons.empty()) throw FormatError(source + ": no polygons found");
  return roi;
}

inline Roi read_roi(const std::filesystem::path& path) { return parse_roi_geojson(read_text_file(path), path.string()); }

inline nlohmann::json roi_to_geojson(const Roi& roi) {
  nlohmann::json coords = nlohmann::json::array();
  for (const auto& poly : roi.polygons) {
    nlohmann::json rings = nlohmann::json::array();
    for (const auto& ring : poly.rings) {
      nlohmann::json r = nlohmann::json::array();
      for (const auto& p : ring) r.push_back({p.lon, p.lat});
      rings.push_back(std::move(r));
    }
    coords.push_back(std::move(rings));
  }
  return {{"type", "MultiPolygon"}, {"coordinates", std::move(coords)}};
}

}  // namespace lulc::geo
