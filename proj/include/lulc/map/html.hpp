#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "lulc/map/geojson.hpp"

namespace lulc::map {

inline std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += ch;
    }
  }
  return out;
}

/// JSON text safe to place inside a <script> element.
inline std::string script_safe_json(const Json& j) {
  const std::string text = j.dump();
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '<' && i + 1 < text.size() && text[i + 1] == '/') {
      out += "<\\/";
      ++i;
    } else {
      out += text[i];
    }
  }
  return out;
}

inline constexpr std::string_view kGeojsonScriptOpen = R"(<script type="application/geo+json" id="lulc-geojson">)";

namespace detail {

inline std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline constexpr std::string_view kStyle = R"(body{font-family:sans-serif;margin:16px;color:#222}
#wrap{display:flex;gap:24px;align-items:flex-start}
#lulc-map{border:1px solid #999;background:#f4f4f4;max-width:100%}
#lulc-map path{stroke:#333;stroke-width:0.3}
#lulc-map path.hidden{display:none}
#legend{list-style:none;padding:0;margin:0}
.legend-entry{cursor:pointer;margin:4px 0;user-select:none}
.legend-entry.off{opacity:0.35}
.swatch{display:inline-block;width:14px;height:14px;margin-right:6px;vertical-align:middle;border:1px solid #333}
#tooltip{position:fixed;pointer-events:none;background:#fff;border:1px solid #333;padding:4px 6px;font-size:12px;display:none}
)";

inline constexpr std::string_view kScript = R"((function () {
  var data = JSON.parse(document.getElementById('lulc-geojson').textContent);
  var tip = document.getElementById('tooltip');
  var paths = document.querySelectorAll('#lulc-map path');
  paths.forEach(function (p) {
    var props = data.features[+p.getAttribute('data-idx')].properties;
    p.addEventListener('mousemove', function (e) {
      tip.style.display = 'block';
      tip.style.left = (e.clientX + 12) + 'px';
      tip.style.top = (e.clientY + 12) + 'px';
      tip.textContent = props.class_name + ' | confidence ' + props.confidence.toFixed(3) + ' | ' + props.uuid;
    });
    p.addEventListener('mouseleave', function () { tip.style.display = 'none'; });
  });
  document.querySelectorAll('.legend-entry').forEach(function (li) {
    li.addEventListener('click', function () {
      var off = li.classList.toggle('off');
      var k = li.getAttribute('data-class');
      paths.forEach(function (p) {
        if (p.getAttribute('data-class') === k) p.classList.toggle('hidden', off);
      });
    });
  });
})();
)";

}  // namespace detail

/// Self-contained page: the cells drawn as inline SVG, a toggleable legend
/// with all ten classes, hover tooltips, and the GeoJSON embedded verbatim.
inline std::string html_document(const Json& fc, const MapStyle& style, const std::string& title = "Land-use map") {
  style.validate();
  const auto& features = fc.at("features");

  double min_lon = std::numeric_limits<double>::infinity(), min_lat = min_lon;
  double max_lon = -min_lon, max_lat = -min_lon;
  for (const auto& f : features)
    for (const auto& p : f.at("geometry").at("coordinates").at(0)) {
      min_lon = std::min(min_lon, p[0].get<double>());
      max_lon = std::max(max_lon, p[0].get<double>());
      min_lat = std::min(min_lat, p[1].get<double>());
      max_lat = std::max(max_lat, p[1].get<double>());
    }
  const double width = 800.0;
  double height = 400.0;
  double sx = 1.0, sy = 1.0;
  if (!features.empty() && max_lon > min_lon && max_lat > min_lat) {
    // Equirectangular, shrunk east-west by the cosine of the centre latitude.
    const double pi = std::acos(-1.0);
    const double k = std::max(0.05, std::cos((min_lat + max_lat) / 2 * pi / 180.0));
    sx = width / (max_lon - min_lon);
    sy = sx / k;
    height = std::ceil((max_lat - min_lat) * sy);
  }

  std::string out;
  out += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  out += "<title>" + html_escape(title) + "</title>\n<style>\n";
  out += detail::kStyle;
  out += "</style>\n</head>\n<body>\n<h1>" + html_escape(title) + "</h1>\n<div id=\"wrap\">\n";
  out += "<svg id=\"lulc-map\" xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fixed(width, 0) +
         "\" height=\"" + detail::fixed(height, 0) + "\" viewBox=\"0 0 " + detail::fixed(width, 0) + " " +
         detail::fixed(height, 0) + "\">\n";
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const auto& props = f.at("properties");
    const int cls = props.at("class").get<int>();
    std::string d;
    const auto& ring = f.at("geometry").at("coordinates").at(0);
    for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
      d += k ? " L" : "M";
      d += detail::fixed((ring[k][0].get<double>() - min_lon) * sx) + " " +
           detail::fixed((max_lat - ring[k][1].get<double>()) * sy);
    }
    d += " Z";
    out += "<path d=\"" + d + "\" fill=\"" + hex_colour(style.class_palette[static_cast<std::size_t>(cls)]) +
           "\" fill-opacity=\"" + detail::fixed(style.opacity, 3) + "\" data-class=\"" + std::to_string(cls) +
           "\" data-idx=\"" + std::to_string(i) + "\"><title>" +
           html_escape(props.at("class_name").get<std::string>() + " (" +
                       detail::fixed(props.at("confidence").get<double>(), 3) + ") " +
                       props.at("uuid").get<std::string>()) +
           "</title></path>\n";
  }
  out += "</svg>\n<ul id=\"legend\">\n";
  for (std::size_t k = 0; k < geo::kNumClasses; ++k)
    out += "<li class=\"legend-entry\" data-class=\"" + std::to_string(k) + "\"><span class=\"swatch\" style=\"background:" +
           hex_colour(style.class_palette[k]) + "\"></span>" + html_escape(style.legend_labels[k]) + "</li>\n";
  out += "</ul>\n</div>\n<div id=\"tooltip\"></div>\n";
  out += std::string(kGeojsonScriptOpen) + script_safe_json(fc) + "</script>\n<script>\n";
  out += detail::kScript;
  out += "</script>\n</body>\n</html>\n";
  return out;
}

inline void render_html(const Json& fc, const MapStyle& style, const std::filesystem::path& out_path,
                        const std::string& title = "Land-use map") {
  write_text_file(out_path, html_document(fc, style, title));
}

/// The GeoJSON embedded by html_document.
inline Json extract_geojson(std::string_view html) {
  const auto start = html.find(kGeojsonScriptOpen);
  if (start == std::string_view::npos) throw FormatError("no embedded GeoJSON in HTML");
  const auto body = start + kGeojsonScriptOpen.size();
  const auto end = html.find("</script>", body);
  if (end == std::string_view::npos) throw FormatError("unterminated GeoJSON script element");
  try {
    return Json::parse(html.substr(body, end - body));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("embedded GeoJSON: ") + e.what());
  }
}

}  // namespace lulc::map
