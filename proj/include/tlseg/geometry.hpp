#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "tlseg/error.hpp"

namespace tlseg {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Ordered chain of points; a baseline.
struct Polyline {
  std::vector<Point> points;

  double length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) len += distance(points[i - 1], points[i]);
    return len;
  }

  friend bool operator==(const Polyline&, const Polyline&) = default;
};

inline void validate_polyline(const Polyline& line, const char* context) {
  if (line.points.size() < 2) {
    throw ParameterError(std::string(context) + ": polyline needs at least 2 points");
  }
  for (std::size_t i = 1; i < line.points.size(); ++i) {
    if (line.points[i] == line.points[i - 1]) {
      throw ParameterError(std::string(context) + ": polyline has repeated consecutive points");
    }
  }
}

inline double point_segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return distance(p, Point{a.x + t * dx, a.y + t * dy});
}

inline double point_polyline_distance(Point p, const Polyline& line) {
  if (line.points.size() == 1) return distance(p, line.points.front());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < line.points.size(); ++i) {
    best = std::min(best, point_segment_distance(p, line.points[i - 1], line.points[i]));
  }
  return best;
}

/// Evenly spaced samples along the chain with spacing at most 1 px,
/// including both endpoints.
inline std::vector<Point> resample_unit(const Polyline& line) {
  const double total = line.length();
  const auto n = static_cast<std::size_t>(std::max(2.0, std::ceil(total) + 1.0));
  std::vector<Point> out;
  out.reserve(n);
  out.push_back(line.points.front());
  const double step = total / static_cast<double>(n - 1);
  std::size_t seg = 1;
  double seg_start = 0.0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double s = step * static_cast<double>(k);
    while (seg + 1 < line.points.size() &&
           seg_start + distance(line.points[seg - 1], line.points[seg]) < s) {
      seg_start += distance(line.points[seg - 1], line.points[seg]);
      ++seg;
    }
    const Point a = line.points[seg - 1];
    const Point b = line.points[seg];
    const double len = distance(a, b);
    const double t = len > 0.0 ? std::clamp((s - seg_start) / len, 0.0, 1.0) : 0.0;
    out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
  }
  out.push_back(line.points.back());
  return out;
}

namespace detail {

inline void douglas_peucker(const std::vector<Point>& pts, std::size_t first, std::size_t last,
                            double tolerance, std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double worst = -1.0;
  std::size_t index = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > worst) {
      worst = d;
      index = i;
    }
  }
  if (worst > tolerance) {
    keep[index] = true;
    douglas_peucker(pts, first, index, tolerance, keep);
    douglas_peucker(pts, index, last, tolerance, keep);
  }
}

}  // namespace detail

/// Ramer-Douglas-Peucker simplification; endpoints are always kept.
inline std::vector<Point> simplify(const std::vector<Point>& pts, double tolerance) {
  if (pts.size() <= 2) return pts;
  std::vector<bool> keep(pts.size(), false);
  keep.front() = keep.back() = true;
  detail::douglas_peucker(pts, 0, pts.size() - 1, tolerance, keep);
  std::vector<Point> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (keep[i]) out.push_back(pts[i]);
  }
  return out;
}

/// Angle in degrees, within [0, 180), of the principal axis of the points.
inline double principal_angle_deg(const std::vector<Point>& pts) {
  double mx = 0.0;
  double my = 0.0;
  for (auto p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (auto p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  double deg = 0.5 * std::atan2(2.0 * sxy, sxx - syy) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  return deg;
}

/// Difference between two axis angles, folded into [0, 90].
inline double axis_angle_difference(double a_deg, double b_deg) {
  double d = std::fmod(std::abs(a_deg - b_deg), 180.0);
  return d > 90.0 ? 180.0 - d : d;
}

}  // namespace tlseg
