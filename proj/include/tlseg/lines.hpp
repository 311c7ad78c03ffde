#pragma once

// Baseline vectorisation from predicted masks and the length-filter /
// proximity-merge post-processing of baseline polylines.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tlseg/defaults.hpp"
#include "tlseg/error.hpp"
#include "tlseg/geometry.hpp"
#include "tlseg/mask.hpp"

namespace tlseg {

enum class PipelineOrder { FilterThenMerge, MergeThenFilter };

struct MergePolicy {
  double min_length = defaults::kMinLineLength;
  double distance_threshold = defaults::kMergeDistance;
  double angle_threshold = defaults::kMergeAngleDeg;
  PipelineOrder order = PipelineOrder::FilterThenMerge;

  void validate() const {
    if (!(min_length > 0.0) || !(distance_threshold > 0.0) || !(angle_threshold > 0.0)) {
      throw ParameterError("MergePolicy: thresholds must be strictly positive");
    }
  }
};

/// One polyline per component: the mean row of the component's pixels in
/// every occupied column, simplified with a 1 px Douglas-Peucker tolerance.
/// Single-column components are dropped.
inline std::vector<Polyline> extract_baselines(const BinaryMask& mask,
                                               Connectivity conn = Connectivity::Eight) {
  const LabelMap labels = label_components(mask, conn);
  std::vector<std::map<int, std::pair<double, int>>> columns(static_cast<std::size_t>(labels.count));
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const int l = labels(x, y);
      if (l == 0) continue;
      auto& acc = columns[l - 1][x];
      acc.first += y;
      acc.second += 1;
    }
  }
  std::vector<Polyline> out;
  for (const auto& cols : columns) {
    if (cols.size() < 2) continue;
    std::vector<Point> pts;
    pts.reserve(cols.size());
    for (const auto& [x, acc] : cols) pts.push_back({static_cast<double>(x), acc.first / acc.second});
    out.push_back({simplify(pts, 1.0)});
  }
  return out;
}

/// Keeps polylines with length >= min_length, preserving order.
inline std::vector<Polyline> filter_short(const std::vector<Polyline>& lines, double min_length) {
  if (!(min_length > 0.0)) throw ParameterError("filter_short: min_length must be > 0");
  std::vector<Polyline> out;
  for (const auto& l : lines) {
    if (l.length() >= min_length) out.push_back(l);
  }
  return out;
}

namespace detail {

inline double endpoint_distance(const Polyline& a, const Polyline& b) {
  const Point ends_a[2] = {a.points.front(), a.points.back()};
  const Point ends_b[2] = {b.points.front(), b.points.back()};
  double best = std::numeric_limits<double>::infinity();
  for (auto p : ends_a) {
    for (auto q : ends_b) best = std::min(best, distance(p, q));
  }
  return best;
}

inline std::pair<double, double> x_extent(const Polyline& l) {
  auto [lo, hi] = std::minmax_element(l.points.begin(), l.points.end(),
                                      [](Point a, Point b) { return a.x < b.x; });
  return {lo->x, hi->x};
}

// Horizontal overlap of two lines; negative when they are apart.
inline double x_overlap(const Polyline& a, const Polyline& b) {
  const auto [a0, a1] = x_extent(a);
  const auto [b0, b1] = x_extent(b);
  return std::min(a1, b1) - std::max(a0, b0);
}

inline Polyline concatenate_by_x(const std::vector<const Polyline*>& group) {
  std::vector<Point> pts;
  for (const auto* l : group) pts.insert(pts.end(), l->points.begin(), l->points.end());
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) {
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return {pts};
}

}  // namespace detail

/// True when two lines continue one another: nearest endpoints within the
/// distance threshold, principal axes within the angle threshold, and the
/// horizontal overlap no larger than the distance threshold (stacked
/// neighbouring lines overlap along their whole length and never qualify).
inline bool mergeable(const Polyline& a, const Polyline& b, const MergePolicy& policy) {
  if (detail::endpoint_distance(a, b) > policy.distance_threshold) return false;
  if (detail::x_overlap(a, b) > policy.distance_threshold) return false;
  const double ta = principal_angle_deg(resample_unit(a));
  const double tb = principal_angle_deg(resample_unit(b));
  return axis_angle_difference(ta, tb) <= policy.angle_threshold;
}

/// Transitive merge of mergeable lines; groups are re-ordered by x and the
/// output is sorted by leftmost point, then topmost.
inline std::vector<Polyline> merge_close(const std::vector<Polyline>& lines,
                                         const MergePolicy& policy) {
  policy.validate();
  detail::DisjointSets sets;
  for (std::size_t i = 0; i < lines.size(); ++i) sets.make();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      if (mergeable(lines[i], lines[j], policy)) {
        sets.unite(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  std::map<int, std::vector<const Polyline*>> groups;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    groups[sets.find(static_cast<int>(i))].push_back(&lines[i]);
  }
  std::vector<Polyline> out;
  for (const auto& [root, members] : groups) {
    out.push_back(members.size() == 1 ? *members.front() : detail::concatenate_by_x(members));
  }
  auto leftmost = [](const Polyline& l) {
    return *std::min_element(l.points.begin(), l.points.end(), [](Point a, Point b) {
      if (a.x != b.x) return a.x < b.x;
      return a.y < b.y;
    });
  };
  std::stable_sort(out.begin(), out.end(), [&](const Polyline& a, const Polyline& b) {
    const Point pa = leftmost(a);
    const Point pb = leftmost(b);
    if (pa.x != pb.x) return pa.x < pb.x;
    return pa.y < pb.y;
  });
  return out;
}

inline std::vector<Polyline> post_process(const BinaryMask& mask, const MergePolicy& policy = {},
                                          Connectivity conn = Connectivity::Eight) {
  policy.validate();
  auto lines = extract_baselines(mask, conn);
  if (policy.order == PipelineOrder::FilterThenMerge) {
    return merge_close(filter_short(lines, policy.min_length), policy);
  }
  return filter_short(merge_close(lines, policy), policy.min_length);
}

/// One baseline per line as `x1,y1;x2,y2;...` with integer-rounded
/// coordinates. Points that collapse after rounding are written once.
inline std::string format_polylines(const std::vector<Polyline>& lines) {
  std::string out;
  for (const auto& l : lines) {
    std::string row;
    long px = 0;
    long py = 0;
    bool first = true;
    for (auto p : l.points) {
      const long x = std::lround(p.x);
      const long y = std::lround(p.y);
      if (!first && x == px && y == py) continue;
      if (!first) row += ';';
      row += std::to_string(x) + ',' + std::to_string(y);
      px = x;
      py = y;
      first = false;
    }
    out += row;
    out += '\n';
  }
  return out;
}

inline std::vector<Polyline> parse_polylines(std::string_view text) {
  std::vector<Polyline> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view row = text.substr(pos, end - pos);
    pos = end + 1;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (row.empty()) continue;

    Polyline line;
    std::size_t col = 0;
    while (col <= row.size()) {
      std::size_t semi = row.find(';', col);
      if (semi == std::string_view::npos) semi = row.size();
      const std::string_view item = row.substr(col, semi - col);
      const std::size_t comma = item.find(',');
      long x = 0;
      long y = 0;
      auto bad = [&]() {
        return ParseError("malformed point '" + std::string(item) + "'", line_no, col + 1);
      };
      if (comma == std::string_view::npos) throw bad();
      const auto rx = std::from_chars(item.data(), item.data() + comma, x);
      const auto ry = std::from_chars(item.data() + comma + 1, item.data() + item.size(), y);
      if (rx.ec != std::errc{} || rx.ptr != item.data() + comma || ry.ec != std::errc{} ||
          ry.ptr != item.data() + item.size()) {
        throw bad();
      }
      const Point p{static_cast<double>(x), static_cast<double>(y)};
      if (line.points.empty() || !(line.points.back() == p)) line.points.push_back(p);
      col = semi + 1;
    }
    if (line.points.size() < 2) {
      throw ParseError("baseline needs at least 2 distinct points", line_no, 1);
    }
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace tlseg
