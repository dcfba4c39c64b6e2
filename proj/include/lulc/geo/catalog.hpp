#pragma once

#include <filesystem>
#include <set>
#include <vector>

#include "lulc/geo/types.hpp"

namespace lulc::geo {

/// Keeps scenes with cloud cover strictly below `max_cloud_pct` acquired within
/// [date_start, date_end] (both inclusive). Input order is preserved.
inline std::vector<SceneMeta> filter_catalog(const std::vector<SceneMeta>& catalog, double max_cloud_pct,
                                             const Date& date_start, const Date& date_end) {
  if (!date_start.ok() || !date_end.ok() || date_end < date_start)
    throw InvalidArgument("date range is malformed: " + format_date(date_start) + " .. " + format_date(date_end));
  if (!(max_cloud_pct >= 0.0 && max_cloud_pct <= 100.0))
    throw InvalidArgument("max cloud percentage must lie in [0, 100]");
  std::vector<SceneMeta> out;
  for (const auto& s : catalog) {
    if (s.cloud_cover_pct < max_cloud_pct && !(s.acquisition_date < date_start) && !(date_end < s.acquisition_date))
      out.push_back(s);
  }
  return out;
}

/// Reads a `scene_id,date,cloud_pct,path` manifest. Relative paths resolve
/// against the manifest's directory.
inline std::vector<SceneMeta> read_catalog(const std::filesystem::path& manifest) {
  const auto table = read_csv(manifest);
  const auto c_id = table.column("scene_id");
  const auto c_date = table.column("date");
  const auto c_cloud = table.column("cloud_pct");
  const auto c_path = table.column("path");
  std::vector<SceneMeta> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = manifest.string() + " row " + std::to_string(i + 2);
    SceneMeta m;
    m.scene_id = std::string(trim(row[c_id]));
    if (m.scene_id.empty()) throw FormatError(where + ": empty scene_id");
    if (!seen.insert(m.scene_id).second) throw FormatError(where + ": duplicate scene_id '" + m.scene_id + "'");
    try {
      m.acquisition_date = parse_date(row[c_date]);
      m.cloud_cover_pct = parse_double(row[c_cloud], "cloud_pct");
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!(m.cloud_cover_pct >= 0.0 && m.cloud_cover_pct <= 100.0))
      throw FormatError(where + ": cloud_pct outside [0, 100]");
    std::filesystem::path p = std::string(trim(row[c_path]));
    if (p.is_relative()) p = manifest.parent_path() / p;
    m.path = p.lexically_normal().string();
    out.push_back(std::move(m));
  }
  return out;
}

/// Writes a manifest; paths are written relative to the manifest directory when possible.
inline void write_catalog(const std::filesystem::path& manifest, const std::vector<SceneMeta>& catalog) {
  std::string text = "scene_id,date,cloud_pct,path\n";
  for (const auto& m : catalog) {
    std::filesystem::path p = m.path;
    if (p.is_absolute() || !manifest.parent_path().empty()) {
      auto rel = std::filesystem::path(m.path).lexically_relative(manifest.parent_path());
      if (!rel.empty() && rel.native()[0] != '.') p = rel;
    }
    text += csv_join({m.scene_id, format_date(m.acquisition_date), format_number(m.cloud_cover_pct), p.string()});
    text += '\n';
  }
  write_text_file(manifest, text);
}

}  // namespace lulc::geo
