#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <png.h>

#include "lulc/core/binary.hpp"
#include "lulc/core/text.hpp"
#include "lulc/geo/types.hpp"

namespace lulc::geo {

/// Key/value sidecar (`key = value` per line, `#` comments).
struct Sidecar {
  std::map<std::string, std::string> fields;
  std::string source;

  const std::string& get(const std::string& key) const {
    auto it = fields.find(key);
    if (it == fields.end()) throw FormatError(source + ": missing field '" + key + "'");
    return it->second;
  }
  std::optional<std::string> find(const std::string& key) const {
    auto it = fields.find(key);
    if (it == fields.end()) return std::nullopt;
    return it->second;
  }
  double number(const std::string& key) const { return parse_double(get(key), source + ":" + key); }
  std::size_t count(const std::string& key) const {
    const auto v = parse_int(get(key), source + ":" + key);
    if (v < 1) throw FormatError(source + ": field '" + key + "' must be >= 1");
    return static_cast<std::size_t>(v);
  }
};

inline Sidecar parse_sidecar(std::string_view text, std::string source) {
  Sidecar sc;
  sc.source = std::move(source);
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw FormatError(sc.source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    sc.fields[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return sc;
}

namespace detail {

inline bool sample_is_valid(float v, std::optional<float> nodata) {
  if (!std::isfinite(v)) return false;
  return !(nodata && v == *nodata);
}

inline GeoTransform read_geotransform(const Sidecar& sc) {
  GeoTransform gt{sc.number("origin_lon"), sc.number("origin_lat"), sc.number("pixel_w"), sc.number("pixel_h")};
  if (!gt.valid()) throw FormatError(sc.source + ": invalid geotransform");
  return gt;
}

inline std::optional<float> read_nodata(const Sidecar& sc) {
  auto v = sc.find("nodata");
  if (!v || *v == "none" || *v == "nan" || *v == "NaN") return std::nullopt;
  return static_cast<float>(parse_double(*v, sc.source + ":nodata"));
}

inline void derive_mask(Scene& s, std::optional<float> nodata) {
  s.nodata_mask = Mask(s.width, s.height, true);
  for (std::size_t b = 0; b < s.bands; ++b)
    for (std::size_t r = 0; r < s.height; ++r)
      for (std::size_t c = 0; c < s.width; ++c)
        if (!sample_is_valid(s.at(b, r, c), nodata)) s.nodata_mask.set(r, c, false);
}

inline Scene read_png_scene(const Sidecar& sc, const std::filesystem::path& png_path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, png_path.string().c_str()))
    throw FormatError(png_path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGBA;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(png_path.string() + ": " + image.message);
  }
  Scene s;
  s.width = image.width;
  s.height = image.height;
  s.bands = 3;
  s.geotransform = read_geotransform(sc);
  s.pixels.resize(s.width * s.height * 3);
  s.nodata_mask = Mask(s.width, s.height, true);
  const auto nodata = read_nodata(sc);
  for (std::size_t r = 0; r < s.height; ++r)
    for (std::size_t c = 0; c < s.width; ++c) {
      const unsigned char* px = &buf[(r * s.width + c) * 4];
      bool valid = px[3] != 0;
      for (std::size_t b = 0; b < 3; ++b) {
        s.at(b, r, c) = static_cast<float>(px[b]) / 255.0f;
        if (nodata && static_cast<float>(px[b]) == *nodata) valid = false;
      }
      s.nodata_mask.set(r, c, valid);
    }
  return s;
}

}  // namespace detail

/// Reads a scene container: the `.hdr` sidecar plus its raw `.f32` planes (or an
/// 8-bit PNG when the sidecar names one via `data_file`).
inline Scene read_scene(const std::filesystem::path& header_path) {
  const auto sc = parse_sidecar(read_text_file(header_path), header_path.string());
  const auto data_file = header_path.parent_path() / sc.get("data_file");
  const auto ext = data_file.extension().string();
  Scene s;
  if (ext == ".png" || ext == ".PNG") {
    s = detail::read_png_scene(sc, data_file);
  } else {
    if (auto il = sc.find("interleave"); il && *il != "bsq")
      throw FormatError(sc.source + ": unsupported interleave '" + *il + "' (bsq expected)");
    s.width = sc.count("width");
    s.height = sc.count("height");
    s.bands = sc.count("bands");
    s.geotransform = detail::read_geotransform(sc);
    s.pixels = read_f32_file(data_file, s.width * s.height * s.bands);
    detail::derive_mask(s, detail::read_nodata(sc));
  }
  s.meta.scene_id = sc.find("scene_id").value_or(header_path.stem().string());
  if (auto d = sc.find("date")) s.meta.acquisition_date = parse_date(*d);
  if (auto c = sc.find("cloud_pct")) s.meta.cloud_cover_pct = parse_double(*c, "cloud_pct");
  s.meta.path = header_path.string();
  s.check_invariants();
  return s;
}

/// Writes `<stem>.hdr` and `<stem>.f32`. Invalid pixels are written as NaN in every band.
inline void write_scene(const std::filesystem::path& header_path, const Scene& scene) {
  scene.check_invariants();
  const auto data_name = header_path.stem().string() + ".f32";
  std::string text;
  text += "# lulc scene container\n";
  text += "format = lulc-scene\n";
  text += "version = 1\n";
  text += "scene_id = " + scene.meta.scene_id + "\n";
  text += "date = " + format_date(scene.meta.acquisition_date) + "\n";
  text += "cloud_pct = " + format_number(scene.meta.cloud_cover_pct) + "\n";
  text += "width = " + std::to_string(scene.width) + "\n";
  text += "height = " + std::to_string(scene.height) + "\n";
  text += "bands = " + std::to_string(scene.bands) + "\n";
  text += "origin_lon = " + format_number(scene.geotransform.origin_lon) + "\n";
  text += "origin_lat = " + format_number(scene.geotransform.origin_lat) + "\n";
  text += "pixel_w = " + format_number(scene.geotransform.pixel_width) + "\n";
  text += "pixel_h = " + format_number(scene.geotransform.pixel_height) + "\n";
  text += "nodata = nan\n";
  text += "interleave = bsq\n";
  text += "byte_order = little\n";
  text += "data_file = " + data_name + "\n";
  std::vector<float> planes = scene.pixels;
  for (std::size_t b = 0; b < scene.bands; ++b)
    for (std::size_t r = 0; r < scene.height; ++r)
      for (std::size_t c = 0; c < scene.width; ++c)
        if (!scene.nodata_mask.at(r, c)) planes[(b * scene.height + r) * scene.width + c] = std::nanf("");
  write_text_file(header_path, text);
  write_f32_file(header_path.parent_path() / data_name, planes);
}

/// Per-pixel class grid; 255 marks "no class".
struct ClassGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
};

inline void write_class_grid(const std::filesystem::path& path, const ClassGrid& grid) {
  write_binary_file(path, grid.values);
}

inline ClassGrid read_class_grid(const std::filesystem::path& path, std::size_t width, std::size_t height) {
  auto bytes = read_binary_file(path);
  if (bytes.size() != width * height)
    throw FormatError(path.string() + ": expected " + std::to_string(width * height) + " bytes, found " +
                      std::to_string(bytes.size()));
  return {width, height, std::move(bytes)};
}

}  // namespace lulc::geo
