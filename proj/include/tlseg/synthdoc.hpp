#pragma once

// Seeded synthetic manuscript pages (wavy text-line strokes on a textured
// background) and controlled topology corruptions of their ground truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tlseg/error.hpp"
#include "tlseg/geometry.hpp"
#include "tlseg/mask.hpp"

namespace tlseg {

struct PageSpec {
  int width = 640;
  int height = 400;
  int n_lines = 8;  // per column
  int thickness_min = 4;
  int thickness_max = 6;
  int gap_min = 14;
  int gap_max = 24;
  double waviness = 2.0;  // sine amplitude of the centreline, px
  int columns = 1;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& m) { throw ParameterError("PageSpec: " + m); };
    if (width <= 0 || height <= 0) fail("page dimensions must be positive");
    if (n_lines < 1) fail("n_lines must be >= 1");
    if (columns < 1) fail("columns must be >= 1");
    if (thickness_min < 1 || thickness_max < thickness_min) fail("invalid thickness range");
    if (gap_min < 1 || gap_max < gap_min) fail("invalid gap range");
    if (!(waviness >= 0.0)) fail("waviness must be >= 0");
    const int clearance = 2 * static_cast<int>(std::ceil(waviness)) + 2;
    if (gap_min < clearance) {
      fail("gap_min " + std::to_string(gap_min) + " cannot keep lines apart at waviness " +
           std::to_string(waviness) + " (need >= " + std::to_string(clearance) + ")");
    }
    if (n_lines * (thickness_max + gap_min) > height) {
      fail(std::to_string(n_lines) + " lines of thickness <= " + std::to_string(thickness_max) +
           " with gaps >= " + std::to_string(gap_min) + " do not fit in height " +
           std::to_string(height));
    }
    if (width / columns < 40) fail("columns narrower than 40 px");
  }
};

struct SyntheticPage {
  GrayImage image;
  LabelMap gt;                      // label k + 1 is line k
  std::vector<Polyline> baselines;  // stroke centrelines, same order as labels
  std::vector<int> thickness;
  std::vector<int> column;
};

namespace detail {

// Smooth lattice noise in [lo, hi].
inline Grid<float> value_noise(int w, int h, int cell, float lo, float hi, std::mt19937_64& rng) {
  const int gw = w / cell + 2;
  const int gh = h / cell + 2;
  std::uniform_real_distribution<float> u(lo, hi);
  Grid<float> lattice(gw, gh);
  for (auto& v : lattice.data()) v = u(rng);
  Grid<float> out(w, h);
  auto smooth = [](float t) { return t * t * (3.0f - 2.0f * t); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int cx = x / cell;
      const int cy = y / cell;
      const float fx = smooth(static_cast<float>(x % cell) / cell);
      const float fy = smooth(static_cast<float>(y % cell) / cell);
      const float top = lattice(cx, cy) * (1 - fx) + lattice(cx + 1, cy) * fx;
      const float bottom = lattice(cx, cy + 1) * (1 - fx) + lattice(cx + 1, cy + 1) * fx;
      out(x, y) = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

}  // namespace detail

/// Deterministic page: `n_lines` wavy horizontal strokes per column.
inline SyntheticPage generate_page(const PageSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int w = spec.width;
  const int h = spec.height;
  SyntheticPage page{GrayImage(w, h), LabelMap{Grid<std::int32_t>(w, h, 0), 0}, {}, {}, {}};

  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  const int col_w = w / spec.columns;
  const int margin = std::max(4, col_w / 12);
  for (int c = 0; c < spec.columns; ++c) {
    std::vector<int> thick(spec.n_lines);
    std::vector<int> gaps(spec.n_lines);
    int total = 0;
    for (int i = 0; i < spec.n_lines; ++i) {
      thick[i] = uniform_int(spec.thickness_min, spec.thickness_max);
      gaps[i] = uniform_int(spec.gap_min, spec.gap_max);
      total += thick[i] + gaps[i];
    }
    if (total > h) {
      std::fill(gaps.begin(), gaps.end(), spec.gap_min);
      total = 0;
      for (int i = 0; i < spec.n_lines; ++i) total += thick[i] + gaps[i];
    }
    double cursor = (h - total) / 2.0 + gaps[0] / 2.0;
    const int x_lo = c * col_w + margin;
    const int x_hi = (c + 1) * col_w - margin - 1;
    const int jitter = std::max(1, col_w / 10);
    for (int i = 0; i < spec.n_lines; ++i) {
      const double centre = std::floor(cursor) + (thick[i] - 1) / 2.0;
      cursor += thick[i] + (i + 1 < spec.n_lines ? gaps[i + 1] : 0);
      const int xs = x_lo + uniform_int(0, jitter);
      const int xe = x_hi - uniform_int(0, jitter);
      const double period = uniform(0.5 * w, 2.0 * w);
      const double phase = uniform(0.0, 2.0 * std::numbers::pi);
      const std::int32_t label = ++page.gt.count;
      const int lo = -(thick[i] - 1) / 2;
      std::vector<Point> centreline;
      for (int x = xs; x <= xe; ++x) {
        const double yc =
            centre + spec.waviness * std::sin(2.0 * std::numbers::pi * x / period + phase);
        centreline.push_back({static_cast<double>(x), yc});
        const int top = static_cast<int>(std::lround(yc)) + lo;
        for (int y = top; y < top + thick[i]; ++y) {
          if (y >= 0 && y < h) page.gt.labels(x, y) = label;
        }
      }
      page.baselines.push_back({simplify(centreline, 0.25)});
      page.thickness.push_back(thick[i]);
      page.column.push_back(c);
    }
  }

  auto background = detail::value_noise(w, h, 16, 0.80f, 0.95f, rng);
  std::normal_distribution<float> grain(0.0f, 0.02f);
  for (std::size_t i = 0; i < page.image.size(); ++i) {
    const float base = page.gt.labels[i] > 0 ? 0.18f : background[i];
    page.image[i] = std::clamp(base + grain(rng), 0.0f, 1.0f);
  }
  return page;
}

enum class CorruptionKind { Bridge, Gap, Blob };

inline std::string_view to_string(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::Bridge: return "bridge";
    case CorruptionKind::Gap: return "gap";
    case CorruptionKind::Blob: return "blob";
  }
  return "blob";
}

struct Corruption {
  CorruptionKind kind = CorruptionKind::Blob;
  std::vector<std::size_t> pixels;  // sorted raster indices
  std::vector<int> labels;          // gt lines involved
};

struct CorruptionRecord {
  std::vector<Corruption> items;
};

struct CorruptionRequest {
  int bridges = 0;
  int gaps = 0;
  int blobs = 0;
  int gap_width = 3;   // columns removed per gap
  int blob_size = 3;   // blob edge length
  int min_piece = 20;  // min columns left on each side of a gap
};

struct CorruptedMask {
  BinaryMask mask;
  CorruptionRecord record;
};

/// Injects false merges (1 px vertical bridges between vertically adjacent
/// lines), false splits (full-height column gaps) and isolated blobs. Each
/// gt line takes part in at most one corruption, and corruption pixels of
/// the same polarity never touch, so each one is its own error component.
inline CorruptedMask corrupt(const LabelMap& gt, const CorruptionRequest& req, std::uint64_t seed) {
  if (req.bridges < 0 || req.gaps < 0 || req.blobs < 0 || req.gap_width < 1 ||
      req.blob_size < 1 || req.min_piece < 1) {
    throw ParameterError("corrupt: invalid request");
  }
  const int w = gt.width();
  const int h = gt.height();
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  CorruptedMask out{gt.foreground(), {}};
  BinaryMask added(w, h);  // false-positive corruption pixels so far
  std::set<int> used;
  constexpr int kAttempts = 2000;

  auto clear_of_added = [&](const std::vector<std::size_t>& pixels) {
    for (std::size_t p : pixels) {
      const int px = static_cast<int>(p % w);
      const int py = static_cast<int>(p / w);
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          if (added.contains(px + dx, py + dy) && added(px + dx, py + dy)) return false;
        }
      }
    }
    return true;
  };
  auto infeasible = [](std::string_view kind, int k, int n) {
    return ParameterError("corrupt: cannot place " + std::string(kind) + " " + std::to_string(k + 1) +
                          " of " + std::to_string(n));
  };

  for (int k = 0; k < req.bridges; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      const int x = uniform_int(0, w - 1);
      struct Run {
        int above, below, y0, y1;
      };
      std::vector<Run> runs;
      int last_label = 0;
      int last_y = -1;
      for (int y = 0; y < h; ++y) {
        const int l = gt(x, y);
        if (l == 0) continue;
        if (last_label != 0 && l != last_label && y > last_y + 1) {
          runs.push_back({last_label, l, last_y + 1, y - 1});
        }
        last_label = l;
        last_y = y;
      }
      std::erase_if(runs, [&](const Run& r) { return used.count(r.above) || used.count(r.below); });
      if (runs.empty()) continue;
      const Run r = runs[uniform_int(0, static_cast<int>(runs.size()) - 1)];
      std::vector<std::size_t> pixels;
      bool touches_other = false;
      for (int y = r.y0; y <= r.y1; ++y) {
        pixels.push_back(gt.labels.index(x, y));
        for (int dx = -1; dx <= 1; ++dx) {
          for (int dy = -1; dy <= 1; ++dy) {
            if (!gt.labels.contains(x + dx, y + dy)) continue;
            const int l = gt(x + dx, y + dy);
            if (l != 0 && l != r.above && l != r.below) touches_other = true;
          }
        }
      }
      if (touches_other || !clear_of_added(pixels)) continue;
      for (std::size_t p : pixels) out.mask[p] = added[p] = 1;
      used.insert(r.above);
      used.insert(r.below);
      out.record.items.push_back({CorruptionKind::Bridge, pixels, {r.above, r.below}});
      placed = true;
    }
    if (!placed) throw infeasible("bridge", k, req.bridges);
  }

  const auto lines = component_pixels(gt);
  for (int k = 0; k < req.gaps; ++k) {
    std::vector<int> free;
    for (int l = 1; l <= gt.count; ++l) {
      if (!used.count(l)) free.push_back(l);
    }
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed && !free.empty(); ++attempt) {
      const int l = free[uniform_int(0, static_cast<int>(free.size()) - 1)];
      int x_min = w;
      int x_max = -1;
      for (std::size_t p : lines[l - 1]) {
        x_min = std::min(x_min, static_cast<int>(p % w));
        x_max = std::max(x_max, static_cast<int>(p % w));
      }
      const int lo = x_min + req.min_piece;
      const int hi = x_max - req.min_piece - req.gap_width + 1;
      if (hi < lo) continue;
      const int x0 = uniform_int(lo, hi);
      std::vector<std::size_t> pixels;
      for (std::size_t p : lines[l - 1]) {
        const int px = static_cast<int>(p % w);
        if (px >= x0 && px < x0 + req.gap_width) pixels.push_back(p);
      }
      // The remaining strokes must fall apart into exactly two pieces.
      BinaryMask rest(w, h);
      for (std::size_t p : lines[l - 1]) rest[p] = 1;
      for (std::size_t p : pixels) rest[p] = 0;
      if (count_components(rest) != 2) continue;
      for (std::size_t p : pixels) out.mask[p] = 0;
      used.insert(l);
      out.record.items.push_back({CorruptionKind::Gap, pixels, {l}});
      placed = true;
    }
    if (!placed) throw infeasible("gap", k, req.gaps);
  }

  for (int k = 0; k < req.blobs; ++k) {
    bool placed = false;
    const int s = req.blob_size;
    for (int attempt = 0; attempt < kAttempts && !placed && w > s + 4 && h > s + 4; ++attempt) {
      const int x0 = uniform_int(2, w - s - 2);
      const int y0 = uniform_int(2, h - s - 2);
      bool clear = true;
      for (int y = y0 - 2; y < y0 + s + 2 && clear; ++y) {
        for (int x = x0 - 2; x < x0 + s + 2 && clear; ++x) {
          if (gt(x, y) != 0 || out.mask(x, y)) clear = false;
        }
      }
      if (!clear) continue;
      std::vector<std::size_t> pixels;
      for (int y = y0; y < y0 + s; ++y) {
        for (int x = x0; x < x0 + s; ++x) pixels.push_back(gt.labels.index(x, y));
      }
      for (std::size_t p : pixels) out.mask[p] = added[p] = 1;
      out.record.items.push_back({CorruptionKind::Blob, pixels, {}});
      placed = true;
    }
    if (!placed) throw infeasible("blob", k, req.blobs);
  }
  return out;
}

/// Reverts every recorded corruption in place.
inline void undo(BinaryMask& mask, const CorruptionRecord& record) {
  for (const auto& c : record.items) {
    const std::uint8_t value = c.kind == CorruptionKind::Gap ? 1 : 0;
    for (std::size_t p : c.pixels) mask[p] = value;
  }
}

}  // namespace tlseg
