#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tlseg/error.hpp"

namespace tlseg {

/// Dense row-major raster. Width and height are strictly positive for any
/// non-default-constructed grid.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw ParameterError("raster data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(width) + "x" +
                           std::to_string(height));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static void check_dims(int width, int height) {
    if (width <= 0 || height <= 0) {
      throw ParameterError("raster dimensions must be positive, got " + std::to_string(width) +
                           "x" + std::to_string(height));
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Foreground (text) is 1, background 0.
using BinaryMask = Grid<std::uint8_t>;

/// Grayscale page image, intensities in [0, 1].
using GrayImage = Grid<float>;

/// Per-pixel probabilities in [0, 1]. Every mutation is range checked.
class ProbMap {
 public:
  ProbMap() = default;

  ProbMap(int width, int height, double fill = 0.0) : grid_(width, height, check(fill)) {}

  ProbMap(int width, int height, std::vector<double> values)
      : grid_(width, height, std::move(values)) {
    for (double v : grid_.data()) check(v);
  }

  static ProbMap from_mask(const BinaryMask& mask, double background = 0.0,
                           double foreground = 1.0) {
    ProbMap out(mask.width(), mask.height(), check(background));
    check(foreground);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) out.grid_[i] = foreground;
    }
    return out;
  }

  int width() const noexcept { return grid_.width(); }
  int height() const noexcept { return grid_.height(); }
  std::size_t size() const noexcept { return grid_.size(); }
  bool same_shape(const auto& other) const noexcept { return grid_.same_shape(other); }

  double operator()(int x, int y) const noexcept { return grid_(x, y); }
  double operator[](std::size_t i) const noexcept { return grid_[i]; }
  void set(std::size_t i, double v) { grid_[i] = check(v); }
  void set(int x, int y, double v) { grid_(x, y) = check(v); }

  std::span<const double> values() const noexcept { return grid_.data(); }
  const Grid<double>& grid() const noexcept { return grid_; }

  friend bool operator==(const ProbMap&, const ProbMap&) = default;

 private:
  static double check(double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ParameterError("probability out of [0, 1]: " + std::to_string(v));
    }
    return v;
  }

  Grid<double> grid_;
};

/// Instance labels: 0 is background, components are 1..count without gaps.
struct LabelMap {
  Grid<std::int32_t> labels;
  int count = 0;

  int width() const noexcept { return labels.width(); }
  int height() const noexcept { return labels.height(); }
  std::size_t size() const noexcept { return labels.size(); }
  std::int32_t operator[](std::size_t i) const noexcept { return labels[i]; }
  std::int32_t operator()(int x, int y) const noexcept { return labels(x, y); }

  BinaryMask foreground() const {
    BinaryMask out(width(), height());
    for (std::size_t i = 0; i < size(); ++i) out[i] = labels[i] > 0 ? 1 : 0;
    return out;
  }
};

enum class Connectivity { Four, Eight };

/// Offsets of the neighbours of a pixel.
inline std::span<const std::pair<int, int>> neighbor_offsets(Connectivity conn) {
  static constexpr std::array<std::pair<int, int>, 8> kEight{
      {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};
  static constexpr std::array<std::pair<int, int>, 4> kFour{{{0, -1}, {-1, 0}, {1, 0}, {0, 1}}};
  if (conn == Connectivity::Four) return kFour;
  return kEight;
}

namespace detail {

class DisjointSets {
 public:
  int make() {
    parent_.push_back(static_cast<int>(parent_.size()));
    return parent_.back();
  }
  int find(int a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  // The smaller root survives so results do not depend on union order.
  int unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return a;
  }

 private:
  std::vector<int> parent_;
};

}  // namespace detail

/// Two-pass union-find labeling. Labels follow raster order of each
/// component's first pixel.
inline LabelMap label_components(const BinaryMask& mask,
                                 Connectivity conn = Connectivity::Eight) {
  const int w = mask.width();
  const int h = mask.height();
  Grid<std::int32_t> provisional(w, h, -1);
  detail::DisjointSets sets;

  // Neighbours already visited in a raster scan.
  static constexpr std::array<std::pair<int, int>, 4> kPrior8{{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
  static constexpr std::array<std::pair<int, int>, 2> kPrior4{{{-1, 0}, {0, -1}}};
  std::span<const std::pair<int, int>> prior =
      conn == Connectivity::Eight ? std::span<const std::pair<int, int>>(kPrior8)
                                  : std::span<const std::pair<int, int>>(kPrior4);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      int current = -1;
      for (auto [dx, dy] : prior) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (!mask.contains(nx, ny)) continue;
        const int other = provisional(nx, ny);
        if (other < 0) continue;
        current = current < 0 ? other : sets.unite(current, other);
      }
      provisional(x, y) = current < 0 ? sets.make() : current;
    }
  }

  LabelMap out{Grid<std::int32_t>(w, h, 0), 0};
  std::vector<std::int32_t> final_label;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (provisional[i] < 0) continue;
    const int root = sets.find(provisional[i]);
    if (static_cast<std::size_t>(root) >= final_label.size()) final_label.resize(root + 1, 0);
    if (final_label[root] == 0) final_label[root] = ++out.count;
    out.labels[i] = final_label[root];
  }
  return out;
}

inline int count_components(const BinaryMask& mask, Connectivity conn = Connectivity::Eight) {
  return label_components(mask, conn).count;
}

/// Pixel indices of every component; entry k holds label k + 1.
inline std::vector<std::vector<std::size_t>> component_pixels(const LabelMap& map) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(map.count));
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] > 0) out[static_cast<std::size_t>(map[i] - 1)].push_back(i);
  }
  return out;
}

/// Pixel is foreground iff p >= threshold.
inline BinaryMask binarize(const ProbMap& p, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ParameterError("binarize threshold must lie in (0, 1), got " + std::to_string(threshold));
  }
  BinaryMask out(p.width(), p.height());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= threshold ? 1 : 0;
  return out;
}

inline std::size_t foreground_count(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.data().begin(), mask.data().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ParameterError(std::string(what) + ": dimension mismatch " + std::to_string(a.width()) +
                         "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                         "x" + std::to_string(b.height()));
  }
}

}  // namespace tlseg
