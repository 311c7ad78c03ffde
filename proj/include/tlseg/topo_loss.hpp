#pragma once

// Connectivity-aware segmentation loss: pixel-level BCE blended with BCE
// restricted to topology-critical error components, plus a Dice term.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tlseg/defaults.hpp"
#include "tlseg/error.hpp"
#include "tlseg/mask.hpp"

namespace tlseg {

struct LossParams {
  double alpha = defaults::kAlpha;
  double beta = defaults::kBeta;
  double binarize_threshold = defaults::kBinarizeThreshold;
  double dice_epsilon = defaults::kDiceEpsilon;
  double structure_weight = defaults::kStructureWeight;
  Connectivity connectivity = Connectivity::Eight;
  double clamp_epsilon = defaults::kClampEpsilon;

  void validate() const {
    auto fail = [](const std::string& msg) { throw ParameterError("LossParams: " + msg); };
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0, 1]");
    if (!(binarize_threshold > 0.0 && binarize_threshold < 1.0)) {
      fail("binarize_threshold must lie in (0, 1)");
    }
    if (!(dice_epsilon >= 0.0)) fail("dice_epsilon must be >= 0");
    if (!(structure_weight > 0.0)) fail("structure_weight must be > 0");
    if (!(clamp_epsilon > 0.0 && clamp_epsilon < 0.5)) fail("clamp_epsilon must lie in (0, 0.5)");
  }
};

/// One connected error component and the change in predicted component
/// count caused by removing it (merge) or filling it (split).
struct CriticalComponent {
  std::vector<std::size_t> pixels;  // sorted raster indices
  int count_delta = 0;
};

struct ComponentSelection {
  std::vector<CriticalComponent> merge_components;  // false positives that fuse lines
  std::vector<CriticalComponent> split_components;  // false negatives that fragment lines

  bool empty() const noexcept { return merge_components.empty() && split_components.empty(); }
};

/// Raw BCE sums per pixel set; `total` applies the weighting.
struct LossReport {
  double total = 0.0;
  double dice_term = 0.0;
  double pixel_term = 0.0;
  double merge_term = 0.0;
  double split_term = 0.0;
  std::size_t n_pixels = 0;
};

using GradientMap = Grid<double>;

/// Finds false-positive components whose removal raises the predicted
/// component count and false-negative components whose addition lowers it.
///
/// A connected false-positive component C always lies inside a single
/// predicted component K, so removing C only changes K: the count grows by
/// (components of K \ C) - 1. A false-negative component C is disjoint from
/// the prediction, so adding it fuses C with every predicted component it
/// touches: the count changes by 1 - (distinct touched components).
inline ComponentSelection select_critical_components(const BinaryMask& y, const BinaryMask& y_hat,
                                                     Connectivity conn = Connectivity::Eight) {
  require_same_shape(y, y_hat, "select_critical_components");
  const int w = y.width();
  const int h = y.height();
  const auto offsets = neighbor_offsets(conn);

  BinaryMask false_pos(w, h);
  BinaryMask false_neg(w, h);
  for (std::size_t i = 0; i < y.size(); ++i) {
    false_pos[i] = (y_hat[i] && !y[i]) ? 1 : 0;
    false_neg[i] = (y[i] && !y_hat[i]) ? 1 : 0;
  }

  const LabelMap pred = label_components(y_hat, conn);
  const auto pred_pixels = component_pixels(pred);
  ComponentSelection out;

  const LabelMap fp = label_components(false_pos, conn);
  const auto fp_pixels = component_pixels(fp);
  std::vector<int> visit_stamp(y.size(), 0);
  std::vector<std::size_t> stack;
  int stamp = 0;
  for (int c = 0; c < fp.count; ++c) {
    const auto& comp = fp_pixels[c];
    const std::int32_t host = pred[comp.front()];
    const std::int32_t fp_label = c + 1;
    ++stamp;
    int pieces = 0;
    for (std::size_t seed : pred_pixels[host - 1]) {
      if (fp.labels[seed] == fp_label || visit_stamp[seed] == stamp) continue;
      ++pieces;
      visit_stamp[seed] = stamp;
      stack.assign(1, seed);
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        const int px = static_cast<int>(p % w);
        const int py = static_cast<int>(p / w);
        for (auto [dx, dy] : offsets) {
          const int nx = px + dx;
          const int ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t q = y.index(nx, ny);
          if (visit_stamp[q] == stamp || pred.labels[q] != host || fp.labels[q] == fp_label) {
            continue;
          }
          visit_stamp[q] = stamp;
          stack.push_back(q);
        }
      }
    }
    if (pieces > 1) out.merge_components.push_back({comp, pieces - 1});
  }

  const LabelMap fn = label_components(false_neg, conn);
  const auto fn_pixels = component_pixels(fn);
  std::vector<std::int32_t> touched;
  for (int c = 0; c < fn.count; ++c) {
    touched.clear();
    for (std::size_t p : fn_pixels[c]) {
      const int px = static_cast<int>(p % w);
      const int py = static_cast<int>(p / w);
      for (auto [dx, dy] : offsets) {
        const int nx = px + dx;
        const int ny = py + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::int32_t l = pred(nx, ny);
        if (l > 0) touched.push_back(l);
      }
    }
    std::sort(touched.begin(), touched.end());
    const auto distinct = std::unique(touched.begin(), touched.end()) - touched.begin();
    if (distinct > 1) out.split_components.push_back({fn_pixels[c], 1 - static_cast<int>(distinct)});
  }
  return out;
}

/// 1 - (2 sum(y p) + eps) / (sum(y) + sum(p) + eps).
inline double dice_loss(const BinaryMask& y, const ProbMap& y_hat, double epsilon) {
  require_same_shape(y, y_hat, "dice_loss");
  if (!(epsilon >= 0.0)) throw ParameterError("dice_loss: epsilon must be >= 0");
  double inter = 0.0;
  double sum_y = 0.0;
  double sum_p = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = y_hat[i];
    if (y[i]) {
      inter += p;
      sum_y += 1.0;
    }
    sum_p += p;
  }
  const double denom = sum_y + sum_p + epsilon;
  if (denom == 0.0) return 0.0;
  return 1.0 - (2.0 * inter + epsilon) / denom;
}

namespace detail {

inline double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

inline double bce(bool target, double p, double eps) {
  const double q = clamp_prob(p, eps);
  return target ? -std::log(q) : -std::log(1.0 - q);
}

inline double bce_derivative(bool target, double p, double eps) {
  const double q = clamp_prob(p, eps);
  return (q - (target ? 1.0 : 0.0)) / (q * (1.0 - q));
}

/// Per-pixel BCE weight implied by a fixed selection.
inline std::vector<double> pixel_weights(const ComponentSelection& sel, const LossParams& params,
                                         std::size_t n) {
  std::vector<double> weight(n, 1.0 - params.alpha);
  const double merge_w = params.alpha * (1.0 - params.beta);
  const double split_w = params.alpha * params.beta;
  for (const auto& c : sel.merge_components) {
    for (std::size_t p : c.pixels) weight[p] += merge_w;
  }
  for (const auto& c : sel.split_components) {
    for (std::size_t p : c.pixels) weight[p] += split_w;
  }
  return weight;
}

}  // namespace detail

/// Loss evaluated against an externally supplied (frozen) selection.
inline LossReport connectivity_loss(const BinaryMask& y, const ProbMap& y_hat,
                                    const LossParams& params, const ComponentSelection& selection) {
  require_same_shape(y, y_hat, "connectivity_loss");
  params.validate();
  const double eps = params.clamp_epsilon;
  LossReport r;
  r.n_pixels = y.size();
  r.dice_term = dice_loss(y, y_hat, params.dice_epsilon);
  for (std::size_t i = 0; i < y.size(); ++i) r.pixel_term += detail::bce(y[i], y_hat[i], eps);
  for (const auto& c : selection.merge_components) {
    for (std::size_t p : c.pixels) r.merge_term += detail::bce(y[p], y_hat[p], eps);
  }
  for (const auto& c : selection.split_components) {
    for (std::size_t p : c.pixels) r.split_term += detail::bce(y[p], y_hat[p], eps);
  }
  const double a = params.alpha;
  const double b = params.beta;
  const double structure =
      (1.0 - a) * r.pixel_term + a * ((1.0 - b) * r.merge_term + b * r.split_term);
  r.total = r.dice_term + params.structure_weight / static_cast<double>(r.n_pixels) * structure;
  return r;
}

inline ComponentSelection selection_for(const BinaryMask& y, const ProbMap& y_hat,
                                        const LossParams& params) {
  return select_critical_components(y, binarize(y_hat, params.binarize_threshold),
                                    params.connectivity);
}

inline LossReport connectivity_loss(const BinaryMask& y, const ProbMap& y_hat,
                                    const LossParams& params) {
  params.validate();
  require_same_shape(y, y_hat, "connectivity_loss");
  return connectivity_loss(y, y_hat, params, selection_for(y, y_hat, params));
}

/// d(total)/d(y_hat) with the selection treated as a constant.
inline GradientMap loss_gradient(const BinaryMask& y, const ProbMap& y_hat,
                                 const LossParams& params, const ComponentSelection& selection) {
  require_same_shape(y, y_hat, "loss_gradient");
  params.validate();
  const double eps = params.clamp_epsilon;
  const double de = params.dice_epsilon;

  double inter = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i]) {
      inter += y_hat[i];
      sum += 1.0;
    }
    sum += y_hat[i];
  }
  const double denom = sum + de;
  const double numer = 2.0 * inter + de;

  const auto weight = detail::pixel_weights(selection, params, y.size());
  const double scale = params.structure_weight / static_cast<double>(y.size());
  GradientMap g(y.width(), y.height(), 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double target = y[i] ? 1.0 : 0.0;
    const double dice = denom > 0.0 ? -(2.0 * target * denom - numer) / (denom * denom) : 0.0;
    const double structure = weight[i] != 0.0
                                 ? scale * weight[i] * detail::bce_derivative(y[i], y_hat[i], eps)
                                 : 0.0;
    g[i] = dice + structure;
  }
  return g;
}

inline GradientMap loss_gradient(const BinaryMask& y, const ProbMap& y_hat,
                                 const LossParams& params) {
  params.validate();
  require_same_shape(y, y_hat, "loss_gradient");
  return loss_gradient(y, y_hat, params, selection_for(y, y_hat, params));
}

/// Mask of all pixels in the given components (for overlays).
inline BinaryMask components_mask(const std::vector<CriticalComponent>& comps, int width,
                                  int height) {
  BinaryMask out(width, height);
  for (const auto& c : comps) {
    for (std::size_t p : c.pixels) out[p] = 1;
  }
  return out;
}

}  // namespace tlseg
