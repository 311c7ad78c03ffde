// tlseg: synthetic data generation, evaluation, loss inspection, patch
// stitching, topology repair and baseline post-processing.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "tlseg/commands.hpp"

namespace {

tlseg::MergePolicy policy_from(double min_length, double distance, double angle,
                               const std::string& order) {
  tlseg::MergePolicy p;
  p.min_length = min_length;
  p.distance_threshold = distance;
  p.angle_threshold = angle;
  p.order = order == "merge-filter" ? tlseg::PipelineOrder::MergeThenFilter
                                    : tlseg::PipelineOrder::FilterThenMerge;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  namespace d = tlseg::defaults;
  CLI::App app{"Text-line segmentation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  tlseg::GlobalOptions global;
  global.threads = tlseg::default_threads();
  std::string format = "text";
  app.add_option("--seed", global.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads (default: TLSEG_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", global.out, "Output directory")->capture_default_str();
  app.add_option("--format", format, "Report format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  // gen
  tlseg::GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic pages and a manifest");
  gen_cmd->add_option("--pages", gen.pages, "Number of pages")->capture_default_str();
  gen_cmd->add_option("--lines", gen.lines, "Lines per column")->capture_default_str();
  gen_cmd->add_option("--width", gen.width)->capture_default_str();
  gen_cmd->add_option("--height", gen.height)->capture_default_str();
  gen_cmd->add_option("--columns", gen.columns)->capture_default_str();
  gen_cmd->add_option("--thickness-min", gen.thickness_min)->capture_default_str();
  gen_cmd->add_option("--thickness-max", gen.thickness_max)->capture_default_str();
  gen_cmd->add_option("--gap-min", gen.gap_min)->capture_default_str();
  gen_cmd->add_option("--gap-max", gen.gap_max)->capture_default_str();
  gen_cmd->add_option("--waviness", gen.waviness)->capture_default_str();
  gen_cmd->add_option("--train", gen.train, "Pages assigned to the training split")
      ->capture_default_str();
  gen_cmd->add_option("--manuscript", gen.manuscript)->capture_default_str();

  // eval
  tlseg::EvalOptions eval;
  std::string eval_mode = "mask";
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("gt", eval.gt, "Ground-truth file or directory")->required();
  eval_cmd->add_option("pred", eval.pred, "Prediction file or directory")->required();
  eval_cmd->add_option("--mode", eval_mode)
      ->check(CLI::IsMember({"mask", "baseline"}))
      ->capture_default_str();
  eval_cmd->add_option("--tolerance", eval.tolerance, "Baseline tolerance in pixels")
      ->capture_default_str();
  eval_cmd->add_option("--threshold", eval.threshold, "Line match threshold")
      ->capture_default_str();
  eval_cmd->add_flag("--allow-missing", eval.allow_missing, "Skip unpaired pages");

  // loss
  tlseg::LossOptions loss;
  std::string select_dump;
  auto* loss_cmd = app.add_subcommand("loss", "Decompose the connectivity-aware loss");
  loss_cmd->add_option("gt", loss.gt, "Ground-truth mask PNG")->required();
  loss_cmd->add_option("pred", loss.pred, "Prediction PNG (v / 255)")->required();
  loss_cmd->add_option("--alpha", loss.params.alpha)->capture_default_str();
  loss_cmd->add_option("--beta", loss.params.beta)->capture_default_str();
  loss_cmd->add_option("--weight", loss.params.structure_weight)->capture_default_str();
  loss_cmd->add_option("--select-dump", select_dump, "Directory for merge.png / split.png");

  // stitch
  tlseg::StitchOptions stitch;
  std::string positions;
  double sigma = 0.0;
  auto* stitch_cmd = app.add_subcommand("stitch", "Blend overlapping patch predictions");
  stitch_cmd->add_option("patches", stitch.patches, "Directory of patch PNGs")->required();
  stitch_cmd->add_option("--positions", positions, "File of `name x y` rows");
  stitch_cmd->add_option("--width", stitch.width);
  stitch_cmd->add_option("--height", stitch.height);
  stitch_cmd->add_option("--size", stitch.size)->capture_default_str();
  int stride = 0;
  auto* stride_opt = stitch_cmd->add_option("--stride", stride, "Tile stride (default size / 2)");
  auto* sigma_opt = stitch_cmd->add_option("--sigma", sigma, "Gaussian sigma (default size / 4)");

  // repair
  tlseg::RepairOptions rep;
  auto* repair_cmd = app.add_subcommand("repair", "Gradient descent on logits of a corrupted mask");
  repair_cmd->add_option("gt", rep.gt, "Ground-truth mask PNG")->required();
  repair_cmd->add_option("init", rep.init, "Corrupted mask or probability PNG")->required();
  repair_cmd->add_option("--soften", rep.soften)->capture_default_str();
  repair_cmd->add_option("--steps", rep.config.steps)->capture_default_str();
  repair_cmd->add_option("--step-size", rep.config.step_size)->capture_default_str();
  repair_cmd->add_option("--alpha", rep.config.loss.alpha)->capture_default_str();
  repair_cmd->add_option("--beta", rep.config.loss.beta)->capture_default_str();
  repair_cmd->add_option("--weight", rep.config.loss.structure_weight)->capture_default_str();
  repair_cmd->add_option("--refresh", rep.config.refresh_period)->capture_default_str();
  repair_cmd->add_option("--log-period", rep.config.log_period)->capture_default_str();

  // postprocess
  tlseg::PostprocessOptions post;
  double min_length = d::kMinLineLength;
  double merge_distance = d::kMergeDistance;
  double merge_angle = d::kMergeAngleDeg;
  std::string order = "filter-merge";
  auto* post_cmd = app.add_subcommand("postprocess", "Vectorise masks into baselines");
  post_cmd->add_option("input", post.input, "Mask PNG or directory")->required();
  post_cmd->add_option("--min-length", min_length)->capture_default_str();
  post_cmd->add_option("--merge-distance", merge_distance)->capture_default_str();
  post_cmd->add_option("--merge-angle", merge_angle)->capture_default_str();
  post_cmd->add_option("--order", order)
      ->check(CLI::IsMember({"filter-merge", "merge-filter"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  global.format = format == "json" ? tlseg::ReportFormat::Json : tlseg::ReportFormat::Text;
  try {
    tlseg::Json report;
    if (*gen_cmd) {
      report = tlseg::cmd_gen(gen, global);
    } else if (*eval_cmd) {
      eval.mode = eval_mode == "baseline" ? tlseg::EvalMode::Baseline : tlseg::EvalMode::Mask;
      report = tlseg::cmd_eval(eval, global);
    } else if (*loss_cmd) {
      if (!select_dump.empty()) loss.select_dump = select_dump;
      report = tlseg::cmd_loss(loss, global);
    } else if (*stitch_cmd) {
      if (!positions.empty()) stitch.positions = positions;
      if (*stride_opt) stitch.stride = stride;
      if (*sigma_opt) stitch.sigma = sigma;
      report = tlseg::cmd_stitch(stitch, global);
    } else if (*repair_cmd) {
      report = tlseg::cmd_repair(rep, global);
    } else if (*post_cmd) {
      post.policy = policy_from(min_length, merge_distance, merge_angle, order);
      report = tlseg::cmd_postprocess(post, global);
    }
    std::cout << tlseg::render_report(report, global.format);
    return 0;
  } catch (const tlseg::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
