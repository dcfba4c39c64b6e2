#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lulc/core/binary.hpp"
#include "lulc/core/text.hpp"
#include "lulc/geo/types.hpp"

namespace lulc::geo {

/// Geometry of a source scene, enough to recompute tile bounds and the tile grid.
struct SceneGeometry {
  std::string scene_id;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 3;
  std::size_t tile_size = 64;
  GeoTransform geotransform;

  std::size_t grid_rows() const { return height / tile_size; }
  std::size_t grid_cols() const { return width / tile_size; }
};

struct ChipArchive {
  std::vector<TileChip> chips;
  std::map<std::string, SceneGeometry> scenes;
};

/// Directory layout:
///   index.csv    uuid,scene_id,row_off,col_off,label   (label empty when unknown)
///   scenes.csv   scene_id,width,height,bands,tile_size,origin_lon,origin_lat,pixel_w,pixel_h
///   chips/<uuid>.f32  bands × size × size little-endian float32, plane-major
inline void write_chip_archive(const std::filesystem::path& dir, const ChipArchive& archive) {
  std::filesystem::create_directories(dir / "chips");
  std::string index = "uuid,scene_id,row_off,col_off,label\n";
  std::set<std::string> seen;
  for (const auto& chip : archive.chips) {
    if (!seen.insert(chip.uuid).second) throw InvalidArgument("duplicate chip uuid " + chip.uuid);
    index += csv_join({chip.uuid, chip.scene_id, std::to_string(chip.row_off), std::to_string(chip.col_off),
                       chip.label ? std::to_string(*chip.label) : std::string()});
    index += '\n';
    write_f32_file(dir / "chips" / (chip.uuid + ".f32"), chip.data);
  }
  std::string scenes = "scene_id,width,height,bands,tile_size,origin_lon,origin_lat,pixel_w,pixel_h\n";
  for (const auto& [id, g] : archive.scenes) {
    scenes += csv_join({id, std::to_string(g.width), std::to_string(g.height), std::to_string(g.bands),
                        std::to_string(g.tile_size), format_number(g.geotransform.origin_lon),
                        format_number(g.geotransform.origin_lat), format_number(g.geotransform.pixel_width),
                        format_number(g.geotransform.pixel_height)});
    scenes += '\n';
  }
  write_text_file(dir / "index.csv", index);
  write_text_file(dir / "scenes.csv", scenes);
}

inline ChipArchive read_chip_archive(const std::filesystem::path& dir) {
  ChipArchive archive;
  const auto st = read_csv(dir / "scenes.csv");
  for (const auto& row : st.rows) {
    SceneGeometry g;
    g.scene_id = row[st.column("scene_id")];
    g.width = static_cast<std::size_t>(parse_int(row[st.column("width")], "width"));
    g.height = static_cast<std::size_t>(parse_int(row[st.column("height")], "height"));
    g.bands = static_cast<std::size_t>(parse_int(row[st.column("bands")], "bands"));
    g.tile_size = static_cast<std::size_t>(parse_int(row[st.column("tile_size")], "tile_size"));
    g.geotransform = {parse_double(row[st.column("origin_lon")], "origin_lon"),
                      parse_double(row[st.column("origin_lat")], "origin_lat"),
                      parse_double(row[st.column("pixel_w")], "pixel_w"),
                      parse_double(row[st.column("pixel_h")], "pixel_h")};
    if (g.tile_size < 1 || g.bands < 1) throw FormatError((dir / "scenes.csv").string() + ": bad geometry for " + g.scene_id);
    archive.scenes[g.scene_id] = g;
  }
  const auto it = read_csv(dir / "index.csv");
  const auto cu = it.column("uuid"), cs = it.column("scene_id"), cr = it.column("row_off"),
             cc = it.column("col_off"), cl = it.column("label");
  for (const auto& row : it.rows) {
    TileChip chip;
    chip.uuid = row[cu];
    chip.scene_id = row[cs];
    auto g = archive.scenes.find(chip.scene_id);
    if (g == archive.scenes.end())
      throw FormatError((dir / "index.csv").string() + ": chip " + chip.uuid + " references unknown scene " + chip.scene_id);
    chip.row_off = static_cast<std::size_t>(parse_int(row[cr], "row_off"));
    chip.col_off = static_cast<std::size_t>(parse_int(row[cc], "col_off"));
    chip.size = g->second.tile_size;
    chip.bands = g->second.bands;
    if (!trim(row[cl]).empty()) {
      const auto label = parse_int(row[cl], "label");
      if (label < 0 || label >= static_cast<long long>(kNumClasses))
        throw FormatError("chip " + chip.uuid + " has label outside [0, 9]");
      chip.label = static_cast<int>(label);
    }
    chip.bounds = block_bounds(g->second.geotransform, chip.row_off, chip.col_off, chip.size, chip.size);
    chip.data = read_f32_file(dir / "chips" / (chip.uuid + ".f32"), chip.bands * chip.size * chip.size);
    archive.chips.push_back(std::move(chip));
  }
  return archive;
}

}  // namespace lulc::geo
