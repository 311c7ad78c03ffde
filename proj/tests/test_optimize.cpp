#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tlseg/optimize.hpp"
#include "tlseg/synthdoc.hpp"

using namespace tlseg;

namespace {

struct Instance {
  BinaryMask y;
  BinaryMask corrupted;
  std::vector<std::size_t> bridge;
};

// Two horizontal strokes joined by a one-pixel-wide vertical bridge.
Instance two_lines_with_bridge() {
  Instance inst{BinaryMask(40, 16), {}, {}};
  for (int x = 4; x < 36; ++x) {
    for (int y = 3; y < 6; ++y) inst.y(x, y) = 1;
    for (int y = 10; y < 13; ++y) inst.y(x, y) = 1;
  }
  inst.corrupted = inst.y;
  for (int y = 6; y < 10; ++y) {
    inst.corrupted(20, y) = 1;
    inst.bridge.push_back(inst.y.index(20, y));
  }
  return inst;
}

ProbMap soften(const BinaryMask& m, double s = 0.05) {
  ProbMap p(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) p.set(i, m[i] ? 1.0 - s : s);
  return p;
}

LossParams params(double alpha, double beta) {
  LossParams p;
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

}  // namespace

TEST(Repair, RemovesBridgeWithMergeTerm) {
  const auto inst = two_lines_with_bridge();
  RepairConfig cfg;
  cfg.steps = 200;
  cfg.step_size = 2.0;
  const auto r = repair(inst.y, soften(inst.corrupted), cfg);
  EXPECT_EQ(r.target_components, 2);
  EXPECT_EQ(count_components(binarize(r.final_map)), 2);
  for (auto i : inst.bridge) EXPECT_LT(r.final_map[i], 0.5);
  ASSERT_TRUE(r.first_correct_step);
  EXPECT_GT(*r.first_correct_step, 0);
  EXPECT_EQ(r.trace.front().components, 1);
  EXPECT_EQ(r.trace.back().step, 200);
}

TEST(Repair, PairedAlphaComparisonIsReported) {
  const auto inst = two_lines_with_bridge();
  RepairConfig topo;
  topo.steps = 300;
  topo.step_size = 2.0;
  RepairConfig plain = topo;
  plain.loss.alpha = 0.0;
  const auto a = repair(inst.y, soften(inst.corrupted), topo);
  const auto b = repair(inst.y, soften(inst.corrupted), plain);
  ASSERT_TRUE(a.first_correct_step);
  ASSERT_TRUE(b.first_correct_step);
  RecordProperty("steps_alpha1", *a.first_correct_step);
  RecordProperty("steps_alpha0", *b.first_correct_step);
  EXPECT_EQ(a.target_components, b.target_components);
}

TEST(Repair, ExactGroundTruthIsStationary) {
  const auto inst = two_lines_with_bridge();
  RepairConfig cfg;
  cfg.steps = 100;
  cfg.log_period = 1;
  for (double alpha : {0.0, 1.0}) {
    cfg.loss.alpha = alpha;
    const auto init = soften(inst.y);
    const auto r = repair(inst.y, init, cfg);
    ASSERT_EQ(r.trace.size(), 101u);
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
      EXPECT_LE(r.trace[k].loss.total, r.trace[k - 1].loss.total + 1e-12);
      EXPECT_GT(r.trace[k].step, r.trace[k - 1].step);
    }
    for (std::size_t i = 0; i < init.size(); ++i) {
      EXPECT_EQ(r.final_map[i] > 0.5, inst.y[i] == 1);
    }
  }
}

TEST(Repair, DeterministicTrace) {
  const auto inst = two_lines_with_bridge();
  RepairConfig cfg;
  cfg.steps = 50;
  cfg.log_period = 3;
  const auto a = repair(inst.y, soften(inst.corrupted), cfg);
  const auto b = repair(inst.y, soften(inst.corrupted), cfg);
  EXPECT_EQ(format_trace(a.trace), format_trace(b.trace));
  EXPECT_EQ(a.final_map, b.final_map);
  EXPECT_EQ(a.trace.back().step, 50);
  EXPECT_EQ(a.trace[1].step, 3);
}

TEST(Repair, TraceFormat) {
  const auto inst = two_lines_with_bridge();
  RepairConfig cfg;
  cfg.steps = 1;
  const auto r = repair(inst.y, soften(inst.corrupted), cfg);
  const auto text = format_trace(r.trace);
  EXPECT_EQ(text.substr(0, text.find('\n')), "step\ttotal\tdice\tpixel\tmerge\tsplit\tcc\tpixel_iou");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(Repair, Preconditions) {
  const auto inst = two_lines_with_bridge();
  RepairConfig cfg;
  EXPECT_THROW(repair(inst.y, ProbMap(3, 3, 0.5), cfg), ParameterError);
  ProbMap edge = soften(inst.y);
  edge.set(std::size_t{0}, 0.0);
  EXPECT_THROW(repair(inst.y, edge, cfg), ParameterError);
  cfg.steps = 0;
  EXPECT_THROW(repair(inst.y, soften(inst.y), cfg), ParameterError);
  cfg = RepairConfig{};
  cfg.step_size = 0.0;
  EXPECT_THROW(repair(inst.y, soften(inst.y), cfg), ParameterError);
  cfg = RepairConfig{};
  cfg.refresh_period = 0;
  EXPECT_THROW(repair(inst.y, soften(inst.y), cfg), ParameterError);
}

TEST(Repair, SynthdocBridgeInstance) {
  PageSpec s;
  s.width = 160;
  s.height = 60;
  s.n_lines = 2;
  s.gap_min = 10;
  s.gap_max = 14;
  s.seed = 11;
  const auto page = generate_page(s);
  const auto c = corrupt(page.gt, {.bridges = 1}, 11);
  RepairConfig cfg;
  cfg.steps = 300;
  cfg.step_size = 20.0;
  const auto r = repair(page.gt.foreground(), soften(c.mask), cfg);
  EXPECT_EQ(count_components(binarize(r.final_map)), 2);
}

class FiniteDifference : public ::testing::TestWithParam<std::pair<double, double>> {};

TEST_P(FiniteDifference, AnalyticGradientMatches) {
  const auto [alpha, beta] = GetParam();
  std::mt19937_64 rng(77);
  for (int t = 0; t < 10; ++t) {
    const auto y = oracle::random_mask(rng, 16, 16, 0.4);
    const auto p = oracle::random_probs(rng, 16, 16);
    EXPECT_LT(finite_diff_check(y, p, params(alpha, beta), 1e-5, 64, t), 1e-5);
  }
}

INSTANTIATE_TEST_SUITE_P(Settings, FiniteDifference,
                         ::testing::Values(std::pair{0.0, 0.0}, std::pair{1.0, 0.0},
                                           std::pair{1.0, 1.0}, std::pair{0.3, 0.6}));

TEST(FiniteDifferenceCheck, Preconditions) {
  const BinaryMask y(4, 4);
  const ProbMap p(4, 4, 0.5);
  EXPECT_THROW(finite_diff_check(y, p, {}, 0.0, 4, 0), ParameterError);
  EXPECT_THROW(finite_diff_check(y, p, {}, 0.02, 4, 0), ParameterError);
  EXPECT_THROW(finite_diff_check(y, p, {}, 1e-5, 0, 0), ParameterError);
  EXPECT_NO_THROW(finite_diff_check(y, p, {}, 1e-2, 4, 0));
}

TEST(LineSearch, SmallStepsDoNotIncreaseLoss) {
  std::mt19937_64 rng(78);
  for (int t = 0; t < 30; ++t) {
    const auto y = oracle::random_mask(rng, 12, 12, 0.45);
    const auto p = oracle::random_probs(rng, 12, 12, 0.05, 0.95);
    for (auto [alpha, beta] : {std::pair{0.0, 0.0}, std::pair{1.0, 0.0}, std::pair{1.0, 1.0}}) {
      const auto lp = params(alpha, beta);
      const auto sel = selection_for(y, p, lp);
      const double before = connectivity_loss(y, p, lp, sel).total;
      const auto g = loss_gradient(y, p, lp, sel);
      for (double step : {1e-3, 1e-4}) {
        ProbMap q = p;
        for (std::size_t i = 0; i < q.size(); ++i) {
          const double z = std::log(p[i] / (1.0 - p[i])) - step * g[i] * p[i] * (1.0 - p[i]);
          q.set(i, detail::sigmoid(z));
        }
        EXPECT_LE(connectivity_loss(y, q, lp, sel).total, before + 1e-12);
      }
    }
  }
}
