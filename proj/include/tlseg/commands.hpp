#pragma once

// Subcommand implementations behind the `tlseg` executable. Each command
// writes its outputs and a config.json echo into the output directory and
// returns its report.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tlseg/defaults.hpp"
#include "tlseg/error.hpp"
#include "tlseg/lines.hpp"
#include "tlseg/manifest.hpp"
#include "tlseg/mask.hpp"
#include "tlseg/metrics.hpp"
#include "tlseg/optimize.hpp"
#include "tlseg/pagexml.hpp"
#include "tlseg/parallel.hpp"
#include "tlseg/patchwork.hpp"
#include "tlseg/png_io.hpp"
#include "tlseg/report.hpp"
#include "tlseg/synthdoc.hpp"
#include "tlseg/topo_loss.hpp"

namespace tlseg {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  fs::path out = ".";
  ReportFormat format = ReportFormat::Text;
};

namespace detail {

inline void prepare_output(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    throw DataError("cannot create output directory " + out.string() +
                    (ec ? ": " + ec.message() : std::string()));
  }
}

inline void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_config(const GlobalOptions& g, std::string_view command, Json args) {
  prepare_output(g.out);
  Json j;
  j["command"] = command;
  j["seed"] = g.seed;
  j["threads"] = g.threads;
  j["out"] = g.out.string();
  j["format"] = g.format == ReportFormat::Json ? "json" : "text";
  j["args"] = std::move(args);
  write_text(g.out / "config.json", j.dump(2) + "\n");
}

inline void write_report(const GlobalOptions& g, const Json& report) {
  const bool json = g.format == ReportFormat::Json;
  write_text(g.out / (json ? "report.json" : "report.txt"), render_report(report, g.format));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Files with the given extension keyed by stem; a regular file path is
/// accepted as a one-entry set.
inline std::map<std::string, fs::path> files_by_stem(const fs::path& where, std::string_view ext) {
  std::map<std::string, fs::path> out;
  std::error_code ec;
  if (fs::is_regular_file(where, ec)) {
    out[where.stem().string()] = where;
    return out;
  }
  if (!fs::is_directory(where, ec)) throw DataError("no such file or directory: " + where.string());
  for (const auto& entry : fs::directory_iterator(where)) {
    if (!entry.is_regular_file()) continue;
    if (lower(entry.path().extension().string()) != ext) continue;
    const std::string stem = entry.path().stem().string();
    if (out.count(stem)) throw DataError("duplicate page stem '" + stem + "' in " + where.string());
    out[stem] = entry.path();
  }
  return out;
}

inline Json nullable(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace detail

// ---------------------------------------------------------------- gen

struct GenOptions {
  int pages = 3;
  int lines = 8;
  int width = 640;
  int height = 400;
  int columns = 1;
  int thickness_min = 4;
  int thickness_max = 6;
  int gap_min = 14;
  int gap_max = 24;
  double waviness = 2.0;
  int train = defaults::kFewShotBudget;
  std::string manuscript = "synthetic";
};

inline PageSpec page_spec(const GenOptions& o, std::uint64_t seed, std::size_t k) {
  PageSpec s;
  s.width = o.width;
  s.height = o.height;
  s.n_lines = o.lines;
  s.columns = o.columns;
  s.thickness_min = o.thickness_min;
  s.thickness_max = o.thickness_max;
  s.gap_min = o.gap_min;
  s.gap_max = o.gap_max;
  s.waviness = o.waviness;
  s.seed = detail::splitmix64(seed * 0x100000001B3ull + k);
  return s;
}

/// Writes images/, masks/, baselines/ and manifest.tsv. The first `train`
/// pages form the training split, the remainder the test split.
inline Json cmd_gen(const GenOptions& o, const GlobalOptions& g) {
  if (o.pages < 1) throw ParameterError("gen: --pages must be >= 1");
  if (o.train < 0 || o.train > defaults::kFewShotBudget) {
    throw ParameterError("gen: --train must lie in [0, " + std::to_string(defaults::kFewShotBudget) +
                         "], the few-shot budget");
  }
  page_spec(o, g.seed, 0).validate();
  detail::write_config(g, "gen",
                       {{"pages", o.pages}, {"lines", o.lines}, {"width", o.width},
                        {"height", o.height}, {"columns", o.columns},
                        {"thickness_min", o.thickness_min}, {"thickness_max", o.thickness_max},
                        {"gap_min", o.gap_min}, {"gap_max", o.gap_max},
                        {"waviness", o.waviness}, {"train", o.train},
                        {"manuscript", o.manuscript}});
  for (const char* sub : {"images", "masks", "baselines"}) detail::prepare_output(g.out / sub);

  const auto n = static_cast<std::size_t>(o.pages);
  std::vector<std::string> names(n);
  for (std::size_t k = 0; k < n; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "page_%03zu", k);
    names[k] = buf;
  }
  parallel_for(n, g.threads, [&](std::size_t k) {
    const SyntheticPage page = generate_page(page_spec(o, g.seed, k));
    write_gray(g.out / "images" / (names[k] + ".png"), page.image);
    write_mask(g.out / "masks" / (names[k] + ".png"), page.gt.foreground());
    detail::write_text(g.out / "baselines" / (names[k] + ".txt"), format_polylines(page.baselines));
  });

  std::vector<ManifestEntry> entries;
  for (std::size_t k = 0; k < n; ++k) {
    const Split split = k < static_cast<std::size_t>(o.train) ? Split::Train : Split::Test;
    entries.push_back({"images/" + names[k] + ".png", "masks/" + names[k] + ".png", split,
                       o.manuscript});
  }
  const DatasetManifest manifest(std::move(entries), static_cast<std::size_t>(defaults::kFewShotBudget));
  detail::write_text(g.out / "manifest.tsv", format_manifest(manifest));

  Json report{{"pages", o.pages},
              {"train", manifest.count(Split::Train)},
              {"test", manifest.count(Split::Test)},
              {"manifest", (g.out / "manifest.tsv").string()}};
  return report;
}

// ---------------------------------------------------------------- eval

enum class EvalMode { Mask, Baseline };

struct EvalOptions {
  fs::path gt;
  fs::path pred;
  EvalMode mode = EvalMode::Mask;
  double tolerance = defaults::kBaselineTolerance;
  double threshold = defaults::kMatchThreshold;
  bool allow_missing = false;
};

struct PageScores {
  std::optional<double> pixel_iou, line_iou, dr, ra, fm, precision, recall, f1;
};

inline PageScores score_mask_page(const fs::path& gt_path, const fs::path& pred_path,
                                  double threshold) {
  const BinaryMask gt = read_mask(gt_path);
  const BinaryMask pred = read_mask(pred_path);
  require_same_shape(gt, pred, ("eval " + pred_path.filename().string()).c_str());
  const LabelMap g = label_components(gt);
  const LabelMap p = label_components(pred);
  const auto lm = line_match_metrics(g, p, threshold);
  PageScores s;
  s.pixel_iou = pixel_iou(gt, pred);
  s.line_iou = line_iou(g, p, threshold);
  s.dr = lm.dr;
  s.ra = lm.ra;
  s.fm = lm.fm;
  return s;
}

inline PageScores score_baseline_page(const fs::path& gt_path, const fs::path& pred_path,
                                      double tolerance) {
  auto parse = [](const fs::path& p) {
    try {
      return parse_polylines(detail::read_text(p));
    } catch (const ParseError& e) {
      throw ParseError(p.string() + ": " + e.message(), e.line(), e.column());
    }
  };
  const auto r = baseline_fmeasure(parse(gt_path), parse(pred_path), tolerance);
  PageScores s;
  s.precision = r.precision;
  s.recall = r.recall;
  s.f1 = r.f1;
  return s;
}

/// Per-page and page-averaged scores for pages paired by filename stem.
inline Json cmd_eval(const EvalOptions& o, const GlobalOptions& g) {
  if (!(o.tolerance > 0.0)) throw ParameterError("eval: --tolerance must be > 0");
  if (!(o.threshold > 0.0 && o.threshold <= 1.0)) {
    throw ParameterError("eval: --threshold must lie in (0, 1]");
  }
  const bool masks = o.mode == EvalMode::Mask;
  detail::write_config(g, "eval",
                       {{"gt", o.gt.string()}, {"pred", o.pred.string()},
                        {"mode", masks ? "mask" : "baseline"}, {"tolerance", o.tolerance},
                        {"threshold", o.threshold}, {"allow_missing", o.allow_missing}});
  const std::string ext = masks ? ".png" : ".txt";
  const auto gt_files = detail::files_by_stem(o.gt, ext);
  const auto pred_files = detail::files_by_stem(o.pred, ext);

  std::vector<std::string> stems;
  std::vector<std::string> missing;
  for (const auto& [stem, path] : gt_files) {
    if (pred_files.count(stem)) {
      stems.push_back(stem);
    } else {
      missing.push_back("pred:" + stem);
    }
  }
  for (const auto& [stem, path] : pred_files) {
    if (!gt_files.count(stem)) missing.push_back("gt:" + stem);
  }
  if (!missing.empty() && !o.allow_missing) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError("eval: missing counterpart files: " + list);
  }
  if (stems.empty()) throw DataError("eval: no page pairs found");

  std::vector<PageScores> scores(stems.size());
  parallel_for(stems.size(), g.threads, [&](std::size_t i) {
    const auto& gp = gt_files.at(stems[i]);
    const auto& pp = pred_files.at(stems[i]);
    scores[i] = masks ? score_mask_page(gp, pp, o.threshold)
                      : score_baseline_page(gp, pp, o.tolerance);
  });

  auto mean = [&](std::optional<double> PageScores::*field) -> std::optional<double> {
    double sum = 0.0;
    for (const auto& s : scores) {
      if (!(s.*field)) return std::nullopt;
      sum += *(s.*field);
    }
    return sum / static_cast<double>(scores.size());
  };
  auto as_json = [](const PageScores& s) {
    using detail::nullable;
    return Json{{"pixel_iou", nullable(s.pixel_iou)}, {"line_iou", nullable(s.line_iou)},
                {"dr", nullable(s.dr)},               {"ra", nullable(s.ra)},
                {"fm", nullable(s.fm)},               {"precision", nullable(s.precision)},
                {"recall", nullable(s.recall)},       {"f1", nullable(s.f1)}};
  };
  const PageScores avg{mean(&PageScores::pixel_iou), mean(&PageScores::line_iou),
                       mean(&PageScores::dr),        mean(&PageScores::ra),
                       mean(&PageScores::fm),        mean(&PageScores::precision),
                       mean(&PageScores::recall),    mean(&PageScores::f1)};

  Json report;
  report["mode"] = masks ? "mask" : "baseline";
  if (masks) {
    report["threshold"] = o.threshold;
  } else {
    report["protocol"] = "fixed-tolerance";
    report["tolerance"] = o.tolerance;
  }
  report["pages"] = stems.size();
  report["mean"] = as_json(avg);
  Json per_page = Json::array();
  for (std::size_t i = 0; i < stems.size(); ++i) {
    Json row{{"page", stems[i]}};
    row.update(as_json(scores[i]));
    per_page.push_back(std::move(row));
  }
  report["per_page"] = std::move(per_page);
  report["missing"] = missing;
  detail::write_report(g, report);
  return report;
}

// ---------------------------------------------------------------- loss

struct LossOptions {
  fs::path gt;
  fs::path pred;  // probability map PNG, v / 255
  LossParams params{};
  std::optional<fs::path> select_dump;
};

inline Json cmd_loss(const LossOptions& o, const GlobalOptions& g) {
  o.params.validate();
  detail::write_config(
      g, "loss",
      {{"gt", o.gt.string()}, {"pred", o.pred.string()}, {"alpha", o.params.alpha},
       {"beta", o.params.beta}, {"structure_weight", o.params.structure_weight},
       {"select_dump", o.select_dump ? Json(o.select_dump->string()) : Json(nullptr)}});
  const BinaryMask y = read_mask(o.gt);
  const ProbMap p = read_probmap(o.pred);
  if (!y.same_shape(p)) {
    throw DataError("loss: " + o.gt.string() + " is " + std::to_string(y.width()) + "x" +
                    std::to_string(y.height()) + " but " + o.pred.string() + " is " +
                    std::to_string(p.width()) + "x" + std::to_string(p.height()));
  }
  const ComponentSelection sel = selection_for(y, p, o.params);
  const LossReport r = connectivity_loss(y, p, o.params, sel);
  if (o.select_dump) {
    detail::prepare_output(*o.select_dump);
    write_mask(*o.select_dump / "merge.png", components_mask(sel.merge_components, y.width(), y.height()));
    write_mask(*o.select_dump / "split.png", components_mask(sel.split_components, y.width(), y.height()));
  }
  auto pixels = [](const std::vector<CriticalComponent>& cs) {
    std::size_t n = 0;
    for (const auto& c : cs) n += c.pixels.size();
    return n;
  };
  const double a = o.params.alpha;
  const double b = o.params.beta;
  Json report{{"total", r.total},
              {"dice", r.dice_term},
              {"pixel", r.pixel_term},
              {"merge", r.merge_term},
              {"split", r.split_term},
              {"n_pixels", r.n_pixels},
              {"pixel_weight", 1.0 - a},
              {"merge_weight", a * (1.0 - b)},
              {"split_weight", a * b},
              {"merge_components", sel.merge_components.size()},
              {"split_components", sel.split_components.size()},
              {"merge_pixels", pixels(sel.merge_components)},
              {"split_pixels", pixels(sel.split_components)}};
  return report;
}

// ---------------------------------------------------------------- stitch

struct StitchOptions {
  fs::path patches;
  std::optional<fs::path> positions;  // rows of `name x y`
  int width = 0;                      // required without a positions file
  int height = 0;
  int size = defaults::kPatchSize;
  std::optional<int> stride;  // default size / 2
  std::optional<double> sigma;
};

inline std::vector<std::pair<std::string, TilePosition>> parse_positions(std::string_view text) {
  std::vector<std::pair<std::string, TilePosition>> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string row(text.substr(pos, end - pos));
    pos = end + 1;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty() || row[0] == '#') continue;
    std::istringstream ss(row);
    std::string name;
    long x = 0;
    long y = 0;
    std::string extra;
    if (!(ss >> name >> x >> y) || (ss >> extra)) {
      throw ParseError("expected `name x y`", line_no, 1);
    }
    out.push_back({name, {static_cast<int>(x), static_cast<int>(y)}});
  }
  return out;
}

inline Json cmd_stitch(const StitchOptions& o, const GlobalOptions& g) {
  if (o.size < 1) throw ParameterError("stitch: --size must be >= 1");
  const int stride = o.stride.value_or(std::max(1, o.size / 2));
  const double sigma = o.sigma.value_or(default_sigma(o.size));
  const WeightWindow window = gaussian_window(o.size, sigma);
  detail::write_config(g, "stitch",
                       {{"patches", o.patches.string()},
                        {"positions", o.positions ? Json(o.positions->string()) : Json(nullptr)},
                        {"width", o.width}, {"height", o.height}, {"size", o.size},
                        {"stride", stride}, {"sigma", sigma}});

  std::vector<std::pair<std::string, TilePosition>> layout;
  int width = o.width;
  int height = o.height;
  if (o.positions) {
    try {
      layout = parse_positions(detail::read_text(*o.positions));
    } catch (const ParseError& e) {
      throw ParseError(o.positions->string() + ": " + e.message(), e.line(), e.column());
    }
    if (layout.empty()) throw DataError("stitch: positions file lists no patches");
    if (width == 0 || height == 0) {
      for (const auto& [name, p] : layout) {
        if (o.width == 0) width = std::max(width, p.x + o.size);
        if (o.height == 0) height = std::max(height, p.y + o.size);
      }
    }
  } else {
    if (width < 1 || height < 1) {
      throw ParameterError("stitch: --width and --height are required without --positions");
    }
    const TileGrid grid = tile_patches(width, height, o.size, stride);
    for (std::size_t k = 0; k < grid.positions.size(); ++k) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "patch_%04zu.png", k);
      layout.push_back({buf, grid.positions[k]});
    }
  }

  std::vector<PatchPrediction> preds(layout.size());
  parallel_for(layout.size(), g.threads, [&](std::size_t k) {
    preds[k] = {read_probmap(o.patches / layout[k].first), layout[k].second};
  });
  const ProbMap stitched = stitch(preds, window, width, height);
  write_probmap(g.out / "stitched.png", stitched);
  Json report{{"patches", layout.size()}, {"width", width}, {"height", height},
              {"sigma", sigma}, {"output", (g.out / "stitched.png").string()}};
  return report;
}

// ---------------------------------------------------------------- repair

struct RepairOptions {
  fs::path gt;
  fs::path init;          // corrupted mask or probability map PNG
  double soften = 0.05;   // maps v in [0, 1] to soften + (1 - 2 soften) v
  RepairConfig config{};
};

inline Json cmd_repair(const RepairOptions& o, const GlobalOptions& g) {
  if (!(o.soften > 0.0 && o.soften < 0.5)) throw ParameterError("repair: --soften must lie in (0, 0.5)");
  o.config.validate();
  const auto& c = o.config;
  detail::write_config(g, "repair",
                       {{"gt", o.gt.string()}, {"init", o.init.string()}, {"soften", o.soften},
                        {"steps", c.steps}, {"step_size", c.step_size},
                        {"alpha", c.loss.alpha}, {"beta", c.loss.beta},
                        {"structure_weight", c.loss.structure_weight},
                        {"refresh", c.refresh_period}, {"log_period", c.log_period}});
  const BinaryMask y = read_mask(o.gt);
  const ProbMap raw = read_probmap(o.init);
  if (!y.same_shape(raw)) throw DataError("repair: ground truth and initial map differ in size");
  std::vector<double> soft(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) soft[i] = o.soften + (1.0 - 2.0 * o.soften) * raw[i];
  const ProbMap init(raw.width(), raw.height(), std::move(soft));

  const RepairResult r = repair(y, init, c);
  detail::write_text(g.out / "trace.tsv", format_trace(r.trace));
  const BinaryMask final_mask = binarize(r.final_map, c.loss.binarize_threshold);
  write_mask(g.out / "final.png", final_mask);
  const auto& last = r.trace.back();
  Json report{{"steps", c.steps},
              {"target_components", r.target_components},
              {"final_components", last.components},
              {"first_correct_step",
               r.first_correct_step ? Json(*r.first_correct_step) : Json(nullptr)},
              {"final_total", last.loss.total},
              {"final_pixel_iou", last.pixel_iou}};
  return report;
}

// ---------------------------------------------------------------- postprocess

struct PostprocessOptions {
  fs::path input;  // mask PNG or a directory of them
  MergePolicy policy{};
};

/// Writes `<stem>.txt` baselines for every input mask.
inline Json cmd_postprocess(const PostprocessOptions& o, const GlobalOptions& g) {
  o.policy.validate();
  const bool merge_first = o.policy.order == PipelineOrder::MergeThenFilter;
  detail::write_config(g, "postprocess",
                       {{"input", o.input.string()}, {"min_length", o.policy.min_length},
                        {"merge_distance", o.policy.distance_threshold},
                        {"merge_angle", o.policy.angle_threshold},
                        {"order", merge_first ? "merge-filter" : "filter-merge"}});
  const auto files = detail::files_by_stem(o.input, ".png");
  if (files.empty()) throw DataError("postprocess: no PNG masks in " + o.input.string());
  std::vector<std::pair<std::string, fs::path>> items(files.begin(), files.end());
  std::vector<std::size_t> counts(items.size());
  parallel_for(items.size(), g.threads, [&](std::size_t k) {
    const auto lines = post_process(read_mask(items[k].second), o.policy);
    counts[k] = lines.size();
    detail::write_text(g.out / (items[k].first + ".txt"), format_polylines(lines));
  });
  Json per_file = Json::array();
  for (std::size_t k = 0; k < items.size(); ++k) {
    per_file.push_back({{"page", items[k].first}, {"baselines", counts[k]}});
  }
  Json report{{"files", items.size()}, {"per_file", std::move(per_file)}};
  return report;
}

}  // namespace tlseg
