#pragma once

// Gradient descent on prediction logits under the connectivity-aware loss,
// and a central finite-difference check of the analytic gradient.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tlseg/error.hpp"
#include "tlseg/mask.hpp"
#include "tlseg/metrics.hpp"
#include "tlseg/topo_loss.hpp"

namespace tlseg {

struct RepairConfig {
  int steps = 500;
  double step_size = 0.5;
  LossParams loss{};
  int refresh_period = 10;
  int log_period = 10;

  void validate() const {
    if (steps < 1) throw ParameterError("RepairConfig: steps must be >= 1");
    if (!(step_size > 0.0)) throw ParameterError("RepairConfig: step size must be > 0");
    if (refresh_period < 1) throw ParameterError("RepairConfig: refresh period must be >= 1");
    if (log_period < 1) throw ParameterError("RepairConfig: log period must be >= 1");
    loss.validate();
  }
};

struct RepairTraceRow {
  int step = 0;
  LossReport loss;
  int components = 0;
  double pixel_iou = 0.0;
};

struct RepairResult {
  ProbMap final_map;
  std::vector<RepairTraceRow> trace;
  std::optional<int> first_correct_step;  // first step whose binarization has the gt count
  int target_components = 0;
};

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace detail

/// Trace as tab-separated rows with a header line.
inline std::string format_trace(const std::vector<RepairTraceRow>& trace) {
  using detail::format_number;
  std::string out = "step\ttotal\tdice\tpixel\tmerge\tsplit\tcc\tpixel_iou\n";
  for (const auto& r : trace) {
    out += std::to_string(r.step) + '\t' + format_number(r.loss.total) + '\t' +
           format_number(r.loss.dice_term) + '\t' + format_number(r.loss.pixel_term) + '\t' +
           format_number(r.loss.merge_term) + '\t' + format_number(r.loss.split_term) + '\t' +
           std::to_string(r.components) + '\t' + format_number(r.pixel_iou) + '\n';
  }
  return out;
}

/// Runs `steps` updates z <- z - step * dL/dz, where p = sigmoid(z). Rows are
/// logged at multiples of the log period and after the last update.
inline RepairResult repair(const BinaryMask& y, const ProbMap& init, const RepairConfig& config) {
  config.validate();
  require_same_shape(y, init, "repair");
  for (std::size_t i = 0; i < init.size(); ++i) {
    if (!(init[i] > 0.0 && init[i] < 1.0)) {
      throw ParameterError("repair: initial probabilities must lie strictly inside (0, 1)");
    }
  }
  const auto& lp = config.loss;
  RepairResult result{init, {}, std::nullopt, count_components(y, lp.connectivity)};

  std::vector<double> z(init.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::log(init[i] / (1.0 - init[i]));

  ProbMap p = init;
  ComponentSelection selection;
  for (int step = 0; step <= config.steps; ++step) {
    const BinaryMask bin = binarize(p, lp.binarize_threshold);
    const int cc = count_components(bin, lp.connectivity);
    if (cc == result.target_components && !result.first_correct_step) {
      result.first_correct_step = step;
    }
    if (step % config.refresh_period == 0) {
      selection = select_critical_components(y, bin, lp.connectivity);
    }
    const LossReport report = connectivity_loss(y, p, lp, selection);
    if (!std::isfinite(report.total)) {
      throw NumericError("repair: non-finite loss at step " + std::to_string(step) +
                         "\n" + format_trace(result.trace));
    }
    if (step % config.log_period == 0 || step == config.steps) {
      result.trace.push_back({step, report, cc, pixel_iou(y, bin)});
    }
    if (step == config.steps) break;

    const GradientMap g = loss_gradient(y, p, lp, selection);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double dz = g[i] * p[i] * (1.0 - p[i]);
      if (!std::isfinite(dz)) {
        throw NumericError("repair: non-finite gradient at step " + std::to_string(step) +
                           ", pixel " + std::to_string(i) + "\n" + format_trace(result.trace));
      }
      z[i] -= config.step_size * dz;
    }
    for (std::size_t i = 0; i < z.size(); ++i) p.set(i, detail::sigmoid(z[i]));
  }
  result.final_map = p;
  return result;
}

/// Max relative error between the analytic gradient and central
/// differences over `sample` random pixels away from the clamp region.
/// The selection is computed once from `y_hat` and held fixed.
inline double finite_diff_check(const BinaryMask& y, const ProbMap& y_hat, const LossParams& params,
                                double h, int sample, std::uint64_t seed) {
  params.validate();
  require_same_shape(y, y_hat, "finite_diff_check");
  if (!(h > 0.0 && h <= 1e-2)) throw ParameterError("finite_diff_check: h must lie in (0, 1e-2]");
  if (sample < 1) throw ParameterError("finite_diff_check: sample must be >= 1");

  const ComponentSelection selection = selection_for(y, y_hat, params);
  const GradientMap analytic = loss_gradient(y, y_hat, params, selection);
  const double lo = params.clamp_epsilon + 2.0 * h;
  const double hi = 1.0 - params.clamp_epsilon - 2.0 * h;

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    if (y_hat[i] > lo && y_hat[i] < hi) eligible.push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  if (eligible.size() > static_cast<std::size_t>(sample)) eligible.resize(static_cast<std::size_t>(sample));

  double worst = 0.0;
  ProbMap probe = y_hat;
  for (std::size_t i : eligible) {
    probe.set(i, y_hat[i] + h);
    const double up = connectivity_loss(y, probe, params, selection).total;
    probe.set(i, y_hat[i] - h);
    const double down = connectivity_loss(y, probe, params, selection).total;
    probe.set(i, y_hat[i]);
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double scale = std::max({std::abs(a), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(a - numeric) / scale);
  }
  return worst;
}

}  // namespace tlseg
