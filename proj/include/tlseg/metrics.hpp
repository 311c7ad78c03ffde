#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tlseg/defaults.hpp"
#include "tlseg/error.hpp"
#include "tlseg/geometry.hpp"
#include "tlseg/mask.hpp"

namespace tlseg {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

inline ConfusionCounts confusion(const BinaryMask& y, const BinaryMask& y_hat) {
  require_same_shape(y, y_hat, "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool t = y[i] != 0;
    const bool p = y_hat[i] != 0;
    if (t && p) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

/// TP / (TP + FP + FN); 1 when both masks are empty.
inline double pixel_iou(const BinaryMask& y, const BinaryMask& y_hat) {
  const auto c = confusion(y, y_hat);
  const std::size_t denom = c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

/// Raster indices of one component.
using PixelSet = std::vector<std::size_t>;

/// |G n R| / |G u R| with unweighted pixel counts.
inline double match_score(PixelSet gt, PixelSet pred) {
  if (gt.empty() && pred.empty()) throw ParameterError("match_score: both pixel sets are empty");
  std::sort(gt.begin(), gt.end());
  gt.erase(std::unique(gt.begin(), gt.end()), gt.end());
  std::sort(pred.begin(), pred.end());
  pred.erase(std::unique(pred.begin(), pred.end()), pred.end());
  std::size_t inter = 0;
  for (auto a = gt.begin(), b = pred.begin(); a != gt.end() && b != pred.end();) {
    if (*a < *b) ++a;
    else if (*b < *a) ++b;
    else {
      ++inter;
      ++a;
      ++b;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(gt.size() + pred.size() - inter);
}

struct LineMatch {
  int gt_label = 0;
  int pred_label = 0;
  double score = 0.0;
};

struct LineMatchReport {
  std::vector<LineMatch> matches;
  std::size_t m = 0;
  std::size_t n_gt = 0;
  std::size_t n_pred = 0;
  double dr = 0.0;
  double ra = 0.0;
  double fm = 0.0;
};

namespace detail {

/// Sizes of every label and the pixel counts of every overlapping pair.
struct Overlaps {
  std::vector<std::size_t> gt_size;    // index = label
  std::vector<std::size_t> pred_size;  // index = label
  std::map<std::pair<int, int>, std::size_t> inter;
};

inline Overlaps overlaps(const LabelMap& gt, const LabelMap& pred) {
  Overlaps o;
  o.gt_size.assign(static_cast<std::size_t>(gt.count) + 1, 0);
  o.pred_size.assign(static_cast<std::size_t>(pred.count) + 1, 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int g = gt[i];
    const int r = pred[i];
    if (g > 0) ++o.gt_size[g];
    if (r > 0) ++o.pred_size[r];
    if (g > 0 && r > 0) ++o.inter[{g, r}];
  }
  return o;
}

/// Greedy one-to-one selection by descending score; ties go to the lower
/// gt label, then the lower pred label.
inline std::vector<LineMatch> greedy_assign(std::vector<LineMatch> candidates, int n_gt,
                                            int n_pred) {
  std::sort(candidates.begin(), candidates.end(), [](const LineMatch& a, const LineMatch& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.gt_label != b.gt_label) return a.gt_label < b.gt_label;
    return a.pred_label < b.pred_label;
  });
  std::vector<bool> gt_used(static_cast<std::size_t>(n_gt) + 1, false);
  std::vector<bool> pred_used(static_cast<std::size_t>(n_pred) + 1, false);
  std::vector<LineMatch> out;
  for (const auto& c : candidates) {
    if (gt_used[c.gt_label] || pred_used[c.pred_label]) continue;
    gt_used[c.gt_label] = pred_used[c.pred_label] = true;
    out.push_back(c);
  }
  return out;
}

/// Ratio with the convention 1 when both sides are empty, 0 when only the
/// denominator side is.
inline double rate(std::size_t m, std::size_t denom, std::size_t other) {
  if (denom == 0) return other == 0 ? 1.0 : 0.0;
  return static_cast<double>(m) / static_cast<double>(denom);
}

inline double harmonic_mean(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

}  // namespace detail

/// DR / RA / FM over one-to-one matches with Jaccard MatchScore >= threshold.
inline LineMatchReport line_match_metrics(const LabelMap& gt, const LabelMap& pred,
                                          double threshold = defaults::kMatchThreshold) {
  require_same_shape(gt, pred, "line_match_metrics");
  const auto o = detail::overlaps(gt, pred);
  std::vector<LineMatch> candidates;
  for (const auto& [key, inter] : o.inter) {
    const auto [g, r] = key;
    const double score = static_cast<double>(inter) /
                         static_cast<double>(o.gt_size[g] + o.pred_size[r] - inter);
    if (score >= threshold) candidates.push_back({g, r, score});
  }
  LineMatchReport rep;
  rep.matches = detail::greedy_assign(std::move(candidates), gt.count, pred.count);
  rep.m = rep.matches.size();
  rep.n_gt = static_cast<std::size_t>(gt.count);
  rep.n_pred = static_cast<std::size_t>(pred.count);
  rep.dr = detail::rate(rep.m, rep.n_gt, rep.n_pred);
  rep.ra = detail::rate(rep.m, rep.n_pred, rep.n_gt);
  rep.fm = rep.n_gt == 0 && rep.n_pred == 0 ? 1.0 : detail::harmonic_mean(rep.dr, rep.ra);
  return rep;
}

struct LineIouReport {
  std::vector<LineMatch> matches;  // score = min(precision, recall)
  std::size_t m = 0;
  std::size_t unmatched_gt = 0;
  std::size_t unmatched_pred = 0;
  double iou = 0.0;
};

/// Line-level IoU: a pair matches when both pixel precision |G n R|/|R| and
/// recall |G n R|/|G| reach the threshold.
inline LineIouReport line_iou_report(const LabelMap& gt, const LabelMap& pred,
                                     double threshold = defaults::kMatchThreshold) {
  require_same_shape(gt, pred, "line_iou");
  const auto o = detail::overlaps(gt, pred);
  std::vector<LineMatch> candidates;
  for (const auto& [key, inter] : o.inter) {
    const auto [g, r] = key;
    const double precision = static_cast<double>(inter) / static_cast<double>(o.pred_size[r]);
    const double recall = static_cast<double>(inter) / static_cast<double>(o.gt_size[g]);
    if (precision >= threshold && recall >= threshold) {
      candidates.push_back({g, r, std::min(precision, recall)});
    }
  }
  LineIouReport rep;
  rep.matches = detail::greedy_assign(std::move(candidates), gt.count, pred.count);
  rep.m = rep.matches.size();
  rep.unmatched_gt = static_cast<std::size_t>(gt.count) - rep.m;
  rep.unmatched_pred = static_cast<std::size_t>(pred.count) - rep.m;
  const std::size_t denom = rep.m + rep.unmatched_gt + rep.unmatched_pred;
  rep.iou = denom == 0 ? 1.0 : static_cast<double>(rep.m) / static_cast<double>(denom);
  return rep;
}

inline double line_iou(const LabelMap& gt, const LabelMap& pred,
                       double threshold = defaults::kMatchThreshold) {
  return line_iou_report(gt, pred, threshold).iou;
}

struct BaselineAssignment {
  std::size_t gt_index = 0;
  std::size_t pred_index = 0;
  std::size_t covered_pred = 0;  // samples of the prediction near the gt line
  std::size_t covered_gt = 0;    // samples of the gt line near the prediction
};

struct BaselineEvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double tolerance = 0.0;
  std::size_t gt_samples = 0;
  std::size_t pred_samples = 0;
  std::vector<BaselineAssignment> assignments;
};

/// Fixed-tolerance polyline precision/recall. Both sides are sampled at
/// <= 1 px spacing; a sample counts as covered when it lies within
/// `tolerance` of the polyline it is assigned to. Lines are paired one to
/// one, greedily by total mutual coverage.
inline BaselineEvalReport baseline_fmeasure(const std::vector<Polyline>& gt,
                                            const std::vector<Polyline>& pred,
                                            double tolerance = defaults::kBaselineTolerance) {
  if (!(tolerance > 0.0)) throw ParameterError("baseline_fmeasure: tolerance must be > 0");
  for (const auto& l : gt) validate_polyline(l, "baseline_fmeasure (gt)");
  for (const auto& l : pred) validate_polyline(l, "baseline_fmeasure (pred)");

  std::vector<std::vector<Point>> gt_pts;
  std::vector<std::vector<Point>> pred_pts;
  BaselineEvalReport rep;
  rep.tolerance = tolerance;
  for (const auto& l : gt) {
    gt_pts.push_back(resample_unit(l));
    rep.gt_samples += gt_pts.back().size();
  }
  for (const auto& l : pred) {
    pred_pts.push_back(resample_unit(l));
    rep.pred_samples += pred_pts.back().size();
  }

  struct Box {
    double x0, y0, x1, y1;
  };
  auto box_of = [](const std::vector<Point>& pts) {
    Box b{pts[0].x, pts[0].y, pts[0].x, pts[0].y};
    for (auto p : pts) {
      b.x0 = std::min(b.x0, p.x);
      b.y0 = std::min(b.y0, p.y);
      b.x1 = std::max(b.x1, p.x);
      b.y1 = std::max(b.y1, p.y);
    }
    return b;
  };
  auto covered = [&](const std::vector<Point>& samples, const Polyline& target) {
    std::size_t n = 0;
    for (auto p : samples) {
      if (point_polyline_distance(p, target) <= tolerance) ++n;
    }
    return n;
  };

  struct Candidate {
    std::size_t g, p, cov_pred, cov_gt;
  };
  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    const Box bg = box_of(gt_pts[g]);
    for (std::size_t p = 0; p < pred.size(); ++p) {
      const Box bp = box_of(pred_pts[p]);
      if (bp.x0 > bg.x1 + tolerance || bg.x0 > bp.x1 + tolerance ||
          bp.y0 > bg.y1 + tolerance || bg.y0 > bp.y1 + tolerance) {
        continue;
      }
      const std::size_t cp = covered(pred_pts[p], gt[g]);
      const std::size_t cg = covered(gt_pts[g], pred[p]);
      if (cp + cg > 0) candidates.push_back({g, p, cp, cg});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.cov_pred + a.cov_gt != b.cov_pred + b.cov_gt) {
      return a.cov_pred + a.cov_gt > b.cov_pred + b.cov_gt;
    }
    if (a.g != b.g) return a.g < b.g;
    return a.p < b.p;
  });
  std::vector<bool> gt_used(gt.size(), false);
  std::vector<bool> pred_used(pred.size(), false);
  std::size_t cov_pred = 0;
  std::size_t cov_gt = 0;
  for (const auto& c : candidates) {
    if (gt_used[c.g] || pred_used[c.p]) continue;
    gt_used[c.g] = pred_used[c.p] = true;
    rep.assignments.push_back({c.g, c.p, c.cov_pred, c.cov_gt});
    cov_pred += c.cov_pred;
    cov_gt += c.cov_gt;
  }
  rep.precision = detail::rate(cov_pred, rep.pred_samples, rep.gt_samples);
  rep.recall = detail::rate(cov_gt, rep.gt_samples, rep.pred_samples);
  rep.f1 = gt.empty() && pred.empty() ? 1.0 : detail::harmonic_mean(rep.precision, rep.recall);
  return rep;
}

}  // namespace tlseg
