#pragma once

// Training-patch sampling with rotation/shear augmentation, inference
// tiling, and Gaussian-weighted stitching of overlapping predictions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tlseg/defaults.hpp"
#include "tlseg/error.hpp"
#include "tlseg/mask.hpp"

namespace tlseg {

struct PatchSpec {
  int size = defaults::kPatchSize;
  double rotation_deg = defaults::kRotationDeg;  // draws in [-r, +r]
  double shear_deg = defaults::kShearDeg;        // draws in [-s, +s]
  std::uint64_t seed = 0;

  void validate() const {
    if (size <= 0) throw ParameterError("PatchSpec: size must be > 0");
    if (!(rotation_deg >= 0.0) || !(shear_deg >= 0.0)) {
      throw ParameterError("PatchSpec: augmentation ranges must be non-negative");
    }
    if (shear_deg >= 90.0) throw ParameterError("PatchSpec: shear range must be below 90 degrees");
  }
};

struct TrainingPatch {
  GrayImage image;
  BinaryMask gt;
  double rotation_deg = 0.0;
  double shear_deg = 0.0;
  int x = 0;  // crop top-left in the source
  int y = 0;
};

namespace detail {

// Symmetric reflection: -1 -> 0, n -> n - 1.
inline int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

inline float sample_bilinear(const GrayImage& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int w = img.width();
  const int h = img.height();
  const double p00 = img(reflect(x0, w), reflect(y0, h));
  if (fx == 0.0 && fy == 0.0) return static_cast<float>(p00);
  const double p10 = img(reflect(x0 + 1, w), reflect(y0, h));
  const double p01 = img(reflect(x0, w), reflect(y0 + 1, h));
  const double p11 = img(reflect(x0 + 1, w), reflect(y0 + 1, h));
  const double top = p00 * (1.0 - fx) + p10 * fx;
  const double bottom = p01 * (1.0 - fx) + p11 * fx;
  return static_cast<float>(top * (1.0 - fy) + bottom * fy);
}

inline std::uint8_t sample_nearest(const BinaryMask& mask, double x, double y) {
  const int xi = static_cast<int>(std::lround(x));
  const int yi = static_cast<int>(std::lround(y));
  return mask(reflect(xi, mask.width()), reflect(yi, mask.height()));
}

}  // namespace detail

/// Random rotated and sheared crops. The affine map acts about the crop
/// centre; samples falling outside the page are reflected back in.
inline std::vector<TrainingPatch> sample_training_patches(const GrayImage& image,
                                                          const BinaryMask& gt, int n,
                                                          const PatchSpec& spec) {
  spec.validate();
  require_same_shape(image, gt, "sample_training_patches");
  if (n < 1) throw ParameterError("sample_training_patches: n must be >= 1");
  if (image.width() < spec.size || image.height() < spec.size) {
    throw ParameterError("sample_training_patches: image " + std::to_string(image.width()) + "x" +
                         std::to_string(image.height()) + " is smaller than the patch size " +
                         std::to_string(spec.size) + "; pad the image before sampling");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> rot(-spec.rotation_deg, spec.rotation_deg);
  std::uniform_real_distribution<double> shear(-spec.shear_deg, spec.shear_deg);
  std::uniform_int_distribution<int> pick_x(0, image.width() - spec.size);
  std::uniform_int_distribution<int> pick_y(0, image.height() - spec.size);

  std::vector<TrainingPatch> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    TrainingPatch patch{GrayImage(spec.size, spec.size), BinaryMask(spec.size, spec.size)};
    patch.rotation_deg = spec.rotation_deg > 0.0 ? rot(rng) : 0.0;
    patch.shear_deg = spec.shear_deg > 0.0 ? shear(rng) : 0.0;
    patch.x = pick_x(rng);
    patch.y = pick_y(rng);

    const double theta = patch.rotation_deg * std::numbers::pi / 180.0;
    const double k_shear = std::tan(patch.shear_deg * std::numbers::pi / 180.0);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    // Rotation after horizontal shear: M = R * [[1, k], [0, 1]].
    const double m00 = c;
    const double m01 = c * k_shear - s;
    const double m10 = s;
    const double m11 = s * k_shear + c;
    const double cx = patch.x + (spec.size - 1) / 2.0;
    const double cy = patch.y + (spec.size - 1) / 2.0;

    for (int v = 0; v < spec.size; ++v) {
      for (int u = 0; u < spec.size; ++u) {
        const double dx = patch.x + u - cx;
        const double dy = patch.y + v - cy;
        const double sx = cx + m00 * dx + m01 * dy;
        const double sy = cy + m10 * dx + m11 * dy;
        patch.image(u, v) = detail::sample_bilinear(image, sx, sy);
        patch.gt(u, v) = detail::sample_nearest(gt, sx, sy);
      }
    }
    out.push_back(std::move(patch));
  }
  return out;
}

struct TilePosition {
  int x = 0;
  int y = 0;
  friend bool operator==(const TilePosition&, const TilePosition&) = default;
};

struct TileGrid {
  std::vector<TilePosition> positions;  // row-major: y outer, x inner
  int size = 0;
  int stride = 0;
};

namespace detail {

inline std::vector<int> axis_positions(int dim, int size, int stride) {
  std::vector<int> out;
  int p = 0;
  for (; p + size < dim; p += stride) out.push_back(p);
  if (out.empty() || out.back() != dim - size) out.push_back(dim - size);
  return out;
}

}  // namespace detail

/// Offsets at multiples of the stride; the last tile in each axis is
/// clamped flush with the image border.
inline TileGrid tile_patches(int width, int height, int size, int stride) {
  if (!(stride > 0 && stride <= size && size <= std::min(width, height))) {
    throw ParameterError("tile_patches: need 0 < stride <= size <= min(width, height), got size " +
                         std::to_string(size) + ", stride " + std::to_string(stride) + " for " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
  TileGrid grid;
  grid.size = size;
  grid.stride = stride;
  const auto xs = detail::axis_positions(width, size, stride);
  const auto ys = detail::axis_positions(height, size, stride);
  for (int y : ys) {
    for (int x : xs) grid.positions.push_back({x, y});
  }
  return grid;
}

struct WeightWindow {
  int size = 0;
  double sigma = 0.0;
  Grid<double> weights;
};

/// Unnormalised isotropic Gaussian centred at (size - 1) / 2.
inline WeightWindow gaussian_window(int size, double sigma) {
  if (size <= 0) throw ParameterError("gaussian_window: size must be > 0");
  if (!(sigma > 0.0)) throw ParameterError("gaussian_window: sigma must be > 0");
  WeightWindow w{size, sigma, Grid<double>(size, size)};
  const double c = (size - 1) / 2.0;
  const double denom = 2.0 * sigma * sigma;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - c;
      const double dy = y - c;
      w.weights(x, y) = std::exp(-(dx * dx + dy * dy) / denom);
    }
  }
  return w;
}

inline double default_sigma(int size) { return size / 4.0; }

struct PatchPrediction {
  ProbMap patch;
  TilePosition position;
};

/// Weighted average of overlapping patch predictions. Pixels on which all
/// covering patches agree receive that value exactly. Accumulation runs in
/// a fixed order, so the input order does not affect the result.
inline ProbMap stitch(const std::vector<PatchPrediction>& predictions, const WeightWindow& window,
                      int width, int height) {
  const int size = window.size;
  for (const auto& p : predictions) {
    if (p.patch.width() != size || p.patch.height() != size) {
      throw ParameterError("stitch: patch of size " + std::to_string(p.patch.width()) + "x" +
                           std::to_string(p.patch.height()) + " does not match the " +
                           std::to_string(size) + "px window");
    }
    if (p.position.x < 0 || p.position.y < 0 || p.position.x + size > width ||
        p.position.y + size > height) {
      throw ParameterError("stitch: patch at (" + std::to_string(p.position.x) + "," +
                           std::to_string(p.position.y) + ") exceeds the output frame");
    }
  }

  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = predictions[a];
    const auto& pb = predictions[b];
    if (pa.position.y != pb.position.y) return pa.position.y < pb.position.y;
    if (pa.position.x != pb.position.x) return pa.position.x < pb.position.x;
    return std::lexicographical_compare(pa.patch.values().begin(), pa.patch.values().end(),
                                        pb.patch.values().begin(), pb.patch.values().end());
  });

  Grid<double> num(width, height, 0.0);
  Grid<double> den(width, height, 0.0);
  Grid<double> lo(width, height, 2.0);
  Grid<double> hi(width, height, -1.0);
  for (std::size_t k : order) {
    const auto& pred = predictions[k];
    for (int v = 0; v < size; ++v) {
      for (int u = 0; u < size; ++u) {
        const int x = pred.position.x + u;
        const int y = pred.position.y + v;
        const double value = pred.patch(u, v);
        const double w = window.weights(u, v);
        num(x, y) += w * value;
        den(x, y) += w;
        lo(x, y) = std::min(lo(x, y), value);
        hi(x, y) = std::max(hi(x, y), value);
      }
    }
  }

  std::vector<double> out(num.size());
  std::vector<std::string> uncovered;
  std::size_t n_uncovered = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = num.index(x, y);
      if (hi[i] < 0.0) {
        if (uncovered.size() < 8) uncovered.push_back("(" + std::to_string(x) + "," + std::to_string(y) + ")");
        ++n_uncovered;
        continue;
      }
      out[i] = lo[i] == hi[i] ? lo[i] : std::clamp(num[i] / den[i], 0.0, 1.0);
    }
  }
  if (n_uncovered > 0) {
    std::string list;
    for (const auto& s : uncovered) list += (list.empty() ? "" : " ") + s;
    throw DataError("stitch: " + std::to_string(n_uncovered) +
                    " pixels not covered by any patch, first: " + list);
  }
  return ProbMap(width, height, std::move(out));
}

}  // namespace tlseg
