#pragma once

// PAGE XML ground truth: text-line polygons and baselines, rasterisation
// into label maps, and block downsampling.

#include <expat.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tlseg/defaults.hpp"
#include "tlseg/error.hpp"
#include "tlseg/geometry.hpp"
#include "tlseg/mask.hpp"

namespace tlseg {

struct TextLineAnnotation {
  std::string id;
  std::optional<std::vector<Point>> polygon;
  std::optional<Polyline> baseline;
};

struct PageAnnotation {
  int width = 0;
  int height = 0;
  std::vector<TextLineAnnotation> lines;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string_view local_name(const XML_Char* name) {
  std::string_view s(name);
  const auto sep = s.rfind('|');
  if (sep != std::string_view::npos) s.remove_prefix(sep + 1);
  const auto colon = s.rfind(':');
  if (colon != std::string_view::npos) s.remove_prefix(colon + 1);
  return s;
}

inline const XML_Char* find_attribute(const XML_Char** attrs, std::string_view wanted) {
  for (int i = 0; attrs[i] != nullptr; i += 2) {
    if (local_name(attrs[i]) == wanted) return attrs[i + 1];
  }
  return nullptr;
}

// "x1,y1 x2,y2 ..." with integer or real coordinates.
inline std::optional<std::vector<Point>> parse_points(std::string_view text) {
  std::vector<Point> pts;
  std::size_t pos = 0;
  while (true) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    const std::string_view item = text.substr(pos, end - pos);
    const auto comma = item.find(',');
    if (comma == std::string_view::npos) return std::nullopt;
    double x = 0.0;
    double y = 0.0;
    const auto rx = std::from_chars(item.data(), item.data() + comma, x);
    const auto ry = std::from_chars(item.data() + comma + 1, item.data() + item.size(), y);
    if (rx.ec != std::errc{} || rx.ptr != item.data() + comma || ry.ec != std::errc{} ||
        ry.ptr != item.data() + item.size()) {
      return std::nullopt;
    }
    pts.push_back({x, y});
    pos = end;
  }
  return pts;
}

struct PageXmlState {
  XML_Parser parser = nullptr;
  PageAnnotation page;
  std::vector<std::string> stack;
  std::optional<TextLineAnnotation> current;
  std::size_t current_line_no = 0;
  std::set<std::string> ids;
  bool saw_page = false;
  std::optional<ParseError> error;

  void fail(const std::string& msg) {
    if (!error) {
      error.emplace(msg, XML_GetCurrentLineNumber(parser), XML_GetCurrentColumnNumber(parser) + 1);
    }
    XML_StopParser(parser, XML_FALSE);
  }

  std::optional<std::vector<Point>> points_attr(const XML_Char** attrs, const char* element) {
    const XML_Char* raw = find_attribute(attrs, "points");
    if (raw == nullptr) {
      fail(std::string(element) + " without points attribute");
      return std::nullopt;
    }
    auto pts = parse_points(raw);
    if (!pts) fail(std::string("malformed points in ") + element + ": '" + raw + "'");
    return pts;
  }
};

inline void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
  auto& st = *static_cast<PageXmlState*>(data);
  const std::string_view local = local_name(name);
  const std::string parent = st.stack.empty() ? std::string() : st.stack.back();
  st.stack.emplace_back(local);
  if (st.error) return;

  if (local == "Page") {
    const XML_Char* w = find_attribute(attrs, "imageWidth");
    const XML_Char* h = find_attribute(attrs, "imageHeight");
    if (w == nullptr || h == nullptr) return st.fail("Page element without imageWidth/imageHeight");
    const auto rw = std::from_chars(w, w + std::strlen(w), st.page.width);
    const auto rh = std::from_chars(h, h + std::strlen(h), st.page.height);
    if (rw.ec != std::errc{} || rh.ec != std::errc{} || st.page.width <= 0 || st.page.height <= 0) {
      return st.fail("Page element has invalid dimensions");
    }
    st.saw_page = true;
  } else if (local == "TextLine") {
    st.current.emplace();
    st.current_line_no = XML_GetCurrentLineNumber(st.parser);
    const XML_Char* id = find_attribute(attrs, "id");
    if (id != nullptr) st.current->id = id;
  } else if (st.current && parent == "TextLine" && local == "Coords") {
    if (auto pts = st.points_attr(attrs, "Coords")) st.current->polygon = std::move(*pts);
  } else if (st.current && parent == "TextLine" && local == "Baseline") {
    if (auto pts = st.points_attr(attrs, "Baseline")) {
      Polyline line;
      for (auto p : *pts) {
        if (line.points.empty() || !(line.points.back() == p)) line.points.push_back(p);
      }
      if (line.points.size() < 2) {
        st.page.warnings.push_back("line " + std::to_string(XML_GetCurrentLineNumber(st.parser)) +
                                   ": Baseline with fewer than 2 distinct points ignored");
      } else {
        st.current->baseline = std::move(line);
      }
    }
  }
}

inline void XMLCALL on_end(void* data, const XML_Char* name) {
  auto& st = *static_cast<PageXmlState*>(data);
  st.stack.pop_back();
  if (st.error || local_name(name) != "TextLine" || !st.current) return;
  TextLineAnnotation line = std::move(*st.current);
  st.current.reset();
  const std::string where = "line " + std::to_string(st.current_line_no);
  if (line.polygon && line.polygon->size() < 3) {
    st.page.warnings.push_back(where + ": Coords with fewer than 3 points ignored");
    line.polygon.reset();
  }
  if (!line.polygon && !line.baseline) {
    st.page.warnings.push_back(where + ": TextLine without Coords or Baseline skipped");
    return;
  }
  if (line.id.empty()) {
    line.id = "line_" + std::to_string(st.page.lines.size());
    st.page.warnings.push_back(where + ": TextLine without id, assigned " + line.id);
  }
  if (!st.ids.insert(line.id).second) return st.fail("duplicate TextLine id '" + line.id + "'");
  st.page.lines.push_back(std::move(line));
}

inline void clamp_to_page(PageAnnotation& page) {
  const double max_x = page.width - 1;
  const double max_y = page.height - 1;
  for (auto& line : page.lines) {
    std::size_t clamped = 0;
    auto clamp_point = [&](Point& p) {
      const Point q{std::clamp(p.x, 0.0, max_x), std::clamp(p.y, 0.0, max_y)};
      if (!(q == p)) ++clamped;
      p = q;
    };
    if (line.polygon) {
      for (auto& p : *line.polygon) clamp_point(p);
    }
    if (line.baseline) {
      for (auto& p : line.baseline->points) clamp_point(p);
      auto& pts = line.baseline->points;
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      if (pts.size() < 2) {
        page.warnings.push_back("TextLine '" + line.id + "': baseline collapsed after clamping");
        line.baseline.reset();
      }
    }
    if (clamped > 0) {
      page.warnings.push_back("TextLine '" + line.id + "': " + std::to_string(clamped) +
                              " points clamped to the page bounds");
    }
  }
}

}  // namespace detail

/// Reads TextLine Coords and Baseline elements. Element and attribute names
/// match by local name, so any PAGE schema namespace (or none) is accepted.
inline PageAnnotation parse_page_xml(std::string_view document) {
  detail::PageXmlState st;
  XML_Parser parser = XML_ParserCreateNS(nullptr, '|');
  if (parser == nullptr) throw DataError("cannot allocate XML parser");
  st.parser = parser;
  XML_SetUserData(parser, &st);
  XML_SetElementHandler(parser, detail::on_start, detail::on_end);
  const auto status = XML_Parse(parser, document.data(), static_cast<int>(document.size()), XML_TRUE);
  if (status == XML_STATUS_ERROR && !st.error) {
    st.error.emplace(std::string("malformed XML: ") + XML_ErrorString(XML_GetErrorCode(parser)),
                     XML_GetCurrentLineNumber(parser), XML_GetCurrentColumnNumber(parser) + 1);
  }
  XML_ParserFree(parser);
  if (st.error) throw *st.error;
  if (!st.saw_page) throw ParseError("no Page element", 1, 1);
  detail::clamp_to_page(st.page);
  return std::move(st.page);
}

enum class RasterMode { Polygon, Baseline };

struct RasterizeResult {
  LabelMap labels;
  std::vector<std::string> line_ids;  // entry k belongs to label k + 1
  std::size_t overlap_pixels = 0;     // pixels claimed by more than one line
  std::vector<std::string> warnings;
};

namespace detail {

// Even-odd fill sampled at pixel centres.
template <typename Plot>
void fill_polygon(const std::vector<Point>& poly, int width, int height, Plot&& plot) {
  double y_min = poly[0].y;
  double y_max = poly[0].y;
  for (auto p : poly) {
    y_min = std::min(y_min, p.y);
    y_max = std::max(y_max, p.y);
  }
  const int row0 = std::max(0, static_cast<int>(std::floor(y_min)));
  const int row1 = std::min(height - 1, static_cast<int>(std::ceil(y_max)));
  std::vector<double> xs;
  for (int row = row0; row <= row1; ++row) {
    const double yc = row + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Point a = poly[i];
      const Point b = poly[(i + 1) % poly.size()];
      if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y)) {
        xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int c0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int c1 = std::min(width - 1, static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1);
      for (int col = c0; col <= c1; ++col) plot(col, row);
    }
  }
}

// Walks each segment one pixel at a time along its major axis, rounding the
// interpolated minor coordinate. Each visited pixel is widened to a run of
// `thickness` pixels across the major axis.
template <typename Plot>
void draw_polyline(const Polyline& line, int thickness, int width, int height, Plot&& plot) {
  const int lo = -(thickness - 1) / 2;
  const int hi = lo + thickness - 1;
  auto stamp = [&](int x, int y, bool x_major) {
    for (int d = lo; d <= hi; ++d) {
      const int px = x_major ? x : x + d;
      const int py = x_major ? y + d : y;
      if (px >= 0 && py >= 0 && px < width && py < height) plot(px, py);
    }
  };
  for (std::size_t i = 1; i < line.points.size(); ++i) {
    const Point a = line.points[i - 1];
    const Point b = line.points[i];
    const bool x_major = std::abs(b.x - a.x) >= std::abs(b.y - a.y);
    const double a_major = x_major ? a.x : a.y;
    const double b_major = x_major ? b.x : b.y;
    const double a_minor = x_major ? a.y : a.x;
    const double b_minor = x_major ? b.y : b.x;
    const long m0 = std::lround(a_major);
    const long m1 = std::lround(b_major);
    const long step = m0 <= m1 ? 1 : -1;
    for (long m = m0;; m += step) {
      double t = b_major == a_major ? 0.0 : (static_cast<double>(m) - a_major) / (b_major - a_major);
      t = std::clamp(t, 0.0, 1.0);
      const int minor = static_cast<int>(std::lround(a_minor + t * (b_minor - a_minor)));
      if (x_major) {
        stamp(static_cast<int>(m), minor, true);
      } else {
        stamp(minor, static_cast<int>(m), false);
      }
      if (m == m1) break;
    }
  }
}

}  // namespace detail

/// Burns each line into a label map, last writer wins.
inline RasterizeResult rasterize_lines(int width, int height, const std::vector<std::string>& ids,
                                       const std::vector<const std::vector<Point>*>& polygons,
                                       const std::vector<const Polyline*>& baselines,
                                       RasterMode mode, int thickness) {
  Grid<std::int32_t> raw(width, height, 0);
  Grid<std::uint8_t> overlapped(width, height, 0);
  RasterizeResult res;
  std::vector<std::string> raw_ids;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const std::int32_t label = static_cast<std::int32_t>(raw_ids.size()) + 1;
    auto plot = [&](int x, int y) {
      auto& cell = raw(x, y);
      if (cell != 0 && cell != label) overlapped(x, y) = 1;
      cell = label;
    };
    if (mode == RasterMode::Polygon) {
      if (polygons[k] == nullptr) {
        res.warnings.push_back("TextLine '" + ids[k] + "' has no polygon; skipped");
        continue;
      }
      detail::fill_polygon(*polygons[k], width, height, plot);
    } else {
      if (baselines[k] == nullptr) {
        res.warnings.push_back("TextLine '" + ids[k] + "' has no baseline; skipped");
        continue;
      }
      detail::draw_polyline(*baselines[k], thickness, width, height, plot);
    }
    raw_ids.push_back(ids[k]);
  }
  // Compact labels so that they stay gap free when a line is fully overwritten.
  std::vector<std::int32_t> remap(raw_ids.size() + 1, 0);
  std::vector<bool> used(raw_ids.size() + 1, false);
  for (auto v : raw.data()) used[v] = true;
  std::int32_t next = 0;
  for (std::size_t l = 1; l < used.size(); ++l) {
    if (used[l]) {
      remap[l] = ++next;
      res.line_ids.push_back(raw_ids[l - 1]);
    } else {
      res.warnings.push_back("TextLine '" + raw_ids[l - 1] + "' left no visible pixels");
    }
  }
  for (auto& v : raw.data()) v = remap[v];
  res.labels = LabelMap{std::move(raw), next};
  res.overlap_pixels = foreground_count(overlapped);
  return res;
}

inline RasterizeResult rasterize(const PageAnnotation& page, RasterMode mode,
                                 int thickness = defaults::kBaselineThickness) {
  if (mode == RasterMode::Baseline && thickness < 1) {
    throw ParameterError("rasterize: thickness must be >= 1");
  }
  std::vector<std::string> ids;
  std::vector<const std::vector<Point>*> polygons;
  std::vector<const Polyline*> baselines;
  for (const auto& line : page.lines) {
    ids.push_back(line.id);
    polygons.push_back(line.polygon ? &*line.polygon : nullptr);
    baselines.push_back(line.baseline ? &*line.baseline : nullptr);
  }
  return rasterize_lines(page.width, page.height, ids, polygons, baselines, mode, thickness);
}

/// Baselines drawn with the given thickness, one label per polyline.
inline LabelMap rasterize_baselines(const std::vector<Polyline>& lines, int width, int height,
                                    int thickness = defaults::kBaselineThickness) {
  if (thickness < 1) throw ParameterError("rasterize_baselines: thickness must be >= 1");
  std::vector<std::string> ids;
  std::vector<const Polyline*> ptrs;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    ids.push_back(std::to_string(i));
    ptrs.push_back(&lines[i]);
  }
  std::vector<const std::vector<Point>*> none(lines.size(), nullptr);
  return rasterize_lines(width, height, ids, none, ptrs, RasterMode::Baseline, thickness).labels;
}

/// Box-filter average over factor x factor blocks; edge blocks average the
/// pixels they contain.
inline GrayImage downsample(const GrayImage& image, int factor = defaults::kDownsampleFactor) {
  if (factor < 1) throw ParameterError("downsample: factor must be >= 1");
  if (factor == 1) return image;
  const int w = (image.width() + factor - 1) / factor;
  const int h = (image.height() + factor - 1) / factor;
  GrayImage out(w, h);
  for (int by = 0; by < h; ++by) {
    for (int bx = 0; bx < w; ++bx) {
      double sum = 0.0;
      int n = 0;
      for (int y = by * factor; y < std::min(image.height(), (by + 1) * factor); ++y) {
        for (int x = bx * factor; x < std::min(image.width(), (bx + 1) * factor); ++x) {
          sum += image(x, y);
          ++n;
        }
      }
      out(bx, by) = static_cast<float>(sum / n);
    }
  }
  return out;
}

/// Majority vote per block; exact ties become foreground.
inline BinaryMask downsample(const BinaryMask& mask, int factor = defaults::kDownsampleFactor) {
  if (factor < 1) throw ParameterError("downsample: factor must be >= 1");
  if (factor == 1) return mask;
  const int w = (mask.width() + factor - 1) / factor;
  const int h = (mask.height() + factor - 1) / factor;
  BinaryMask out(w, h);
  for (int by = 0; by < h; ++by) {
    for (int bx = 0; bx < w; ++bx) {
      int fg = 0;
      int n = 0;
      for (int y = by * factor; y < std::min(mask.height(), (by + 1) * factor); ++y) {
        for (int x = bx * factor; x < std::min(mask.width(), (bx + 1) * factor); ++x) {
          fg += mask(x, y) ? 1 : 0;
          ++n;
        }
      }
      out(bx, by) = 2 * fg >= n ? 1 : 0;
    }
  }
  return out;
}

/// Scales all coordinates by 1 / factor to follow a downsampled image.
inline PageAnnotation downsample(const PageAnnotation& page,
                                 int factor = defaults::kDownsampleFactor) {
  if (factor < 1) throw ParameterError("downsample: factor must be >= 1");
  PageAnnotation out = page;
  out.width = (page.width + factor - 1) / factor;
  out.height = (page.height + factor - 1) / factor;
  const double s = 1.0 / factor;
  for (auto& line : out.lines) {
    if (line.polygon) {
      for (auto& p : *line.polygon) p = {p.x * s, p.y * s};
    }
    if (line.baseline) {
      for (auto& p : line.baseline->points) p = {p.x * s, p.y * s};
      auto& pts = line.baseline->points;
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      if (pts.size() < 2) line.baseline.reset();
    }
  }
  return out;
}

}  // namespace tlseg
