#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tlseg/topo_loss.hpp"

using namespace tlseg;

namespace {

// Two horizontal 1 px lines at rows 4 and 8, x = 2..17, on 20x12.
BinaryMask two_lines() {
  BinaryMask y(20, 12);
  for (int x = 2; x < 18; ++x) {
    y(x, 4) = 1;
    y(x, 8) = 1;
  }
  return y;
}

double ref_bce(bool t, double p, double eps) {
  const double q = std::min(std::max(p, eps), 1.0 - eps);
  return t ? -std::log(q) : -std::log(1.0 - q);
}

double ref_total_alpha0(const BinaryMask& y, const ProbMap& p, double w, double de, double eps) {
  double inter = 0, sy = 0, sp = 0, b = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    inter += y[i] * p[i];
    sy += y[i];
    sp += p[i];
    b += ref_bce(y[i], p[i], eps);
  }
  const double dice = 1.0 - (2.0 * inter + de) / (sy + sp + de);
  return dice + w / static_cast<double>(y.size()) * b;
}

}  // namespace

TEST(SelectCriticalComponents, BridgeIsTheOnlyMergeComponent) {
  const auto y = two_lines();
  auto yh = y;
  for (int r = 5; r < 8; ++r) yh(10, r) = 1;
  ASSERT_EQ(count_components(yh), 1);
  const auto sel = select_critical_components(y, yh);
  ASSERT_EQ(sel.merge_components.size(), 1u);
  EXPECT_TRUE(sel.split_components.empty());
  EXPECT_EQ(sel.merge_components[0].pixels,
            (std::vector<std::size_t>{yh.index(10, 5), yh.index(10, 6), yh.index(10, 7)}));
  EXPECT_EQ(sel.merge_components[0].count_delta, 1);
}

TEST(SelectCriticalComponents, GapIsTheOnlySplitComponent) {
  BinaryMask y(20, 5);
  for (int x = 1; x < 19; ++x) y(x, 2) = 1;
  auto yh = y;
  for (int x = 8; x < 11; ++x) yh(x, 2) = 0;
  const auto sel = select_critical_components(y, yh);
  EXPECT_TRUE(sel.merge_components.empty());
  ASSERT_EQ(sel.split_components.size(), 1u);
  EXPECT_EQ(sel.split_components[0].pixels.size(), 3u);
  EXPECT_EQ(sel.split_components[0].count_delta, -1);
}

TEST(SelectCriticalComponents, IsolatedBlobIsNotSelected) {
  const auto y = two_lines();
  auto yh = y;
  yh(10, 0) = 1;
  yh(11, 0) = 1;
  EXPECT_TRUE(select_critical_components(y, yh).empty());
}

TEST(SelectCriticalComponents, MatchesBruteForceDefinition) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dim(3, 12);
  for (int t = 0; t < 300; ++t) {
    const int w = dim(rng);
    const int h = dim(rng);
    const auto y = oracle::random_mask(rng, w, h, 0.45);
    auto yh = y;
    std::bernoulli_distribution flip(0.2);
    for (std::size_t i = 0; i < yh.size(); ++i) {
      if (flip(rng)) yh[i] = !yh[i];
    }
    for (auto conn : {Connectivity::Four, Connectivity::Eight}) {
      const auto sel = select_critical_components(y, yh, conn);
      const auto ref = oracle::select(y, yh, conn);
      auto pixels = [](const std::vector<CriticalComponent>& cs) {
        std::vector<std::vector<std::size_t>> v;
        std::vector<int> d;
        for (const auto& c : cs) {
          v.push_back(c.pixels);
          d.push_back(c.count_delta);
        }
        return std::make_pair(v, d);
      };
      const auto [mp, md] = pixels(sel.merge_components);
      const auto [sp, sd] = pixels(sel.split_components);
      ASSERT_EQ(mp, ref.merge);
      ASSERT_EQ(md, ref.merge_delta);
      ASSERT_EQ(sp, ref.split);
      ASSERT_EQ(sd, ref.split_delta);
    }
  }
}

TEST(SelectCriticalComponents, DimensionMismatch) {
  EXPECT_THROW(select_critical_components(BinaryMask(3, 3), BinaryMask(3, 4)), ParameterError);
}

TEST(DiceLoss, Examples) {
  BinaryMask y(2, 1);
  y[0] = 1;
  EXPECT_DOUBLE_EQ(dice_loss(y, ProbMap::from_mask(y), 0.0), 0.0);
  EXPECT_DOUBLE_EQ(dice_loss(BinaryMask(3, 3), ProbMap(3, 3, 0.0), 1.0), 0.0);
  EXPECT_DOUBLE_EQ(dice_loss(y, ProbMap(2, 1, 0.5), 0.0), 0.5);
  EXPECT_THROW(dice_loss(y, ProbMap(1, 2), 1.0), ParameterError);
}

TEST(ConnectivityLoss, AlphaZeroDegeneratesToDicePlusBce) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 50; ++t) {
    const auto y = oracle::random_mask(rng, 14, 11, 0.4);
    const auto p = oracle::random_probs(rng, 14, 11, 0.0, 1.0);
    LossParams lp;
    lp.alpha = 0.0;
    const double total = connectivity_loss(y, p, lp).total;
    const double ref = ref_total_alpha0(y, p, 10.0, 1.0, 1e-7);
    ASSERT_NEAR(total, ref, 1e-12 * std::abs(ref));
  }
}

TEST(ConnectivityLoss, TotalIsAffineInBeta) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 30; ++t) {
    const auto y = oracle::random_mask(rng, 12, 12, 0.45);
    const auto p = oracle::random_probs(rng, 12, 12);
    LossParams lp;
    auto at = [&](double b) {
      lp.beta = b;
      return connectivity_loss(y, p, lp).total;
    };
    const double l0 = at(0.0);
    const double l5 = at(0.5);
    const double l1 = at(1.0);
    ASSERT_NEAR(l5, 0.5 * (l0 + l1), 1e-12 * std::max(1.0, std::abs(l5)));
  }
}

TEST(ConnectivityLoss, TermsAreNonNegative) {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 50; ++t) {
    const auto y = oracle::random_mask(rng, 10, 10, 0.5);
    const auto p = oracle::random_probs(rng, 10, 10, 0.0, 1.0);
    LossParams lp;
    lp.alpha = (t % 5) / 4.0;
    lp.beta = (t % 3) / 2.0;
    const auto r = connectivity_loss(y, p, lp);
    ASSERT_GE(r.total, 0.0);
    ASSERT_GE(r.dice_term, 0.0);
    ASSERT_GE(r.pixel_term, 0.0);
    ASSERT_GE(r.merge_term, 0.0);
    ASSERT_GE(r.split_term, 0.0);
  }
}

TEST(ConnectivityLoss, PerfectPredictionLimit) {
  const auto y = two_lines();
  const double eps = 1e-7;
  const auto p = ProbMap::from_mask(y, eps, 1.0 - eps);
  LossParams lp;
  lp.alpha = 0.25;
  const auto r = connectivity_loss(y, p, lp);
  EXPECT_LT(r.dice_term, 1e-6);
  EXPECT_EQ(r.merge_term, 0.0);
  EXPECT_EQ(r.split_term, 0.0);
  const double bce_eps = -std::log(1.0 - eps);
  EXPECT_NEAR(r.total - r.dice_term, 10.0 * 0.75 * bce_eps, 1e-12);
  EXPECT_GT(r.total, 0.0);
}

TEST(ConnectivityLoss, BridgeTermIsTheSumOverBridgePixels) {
  const auto y = two_lines();
  std::vector<double> v(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) v[i] = y[i] ? 0.9 : 0.1;
  ProbMap p(y.width(), y.height(), v);
  for (int r = 5; r < 8; ++r) p.set(10, r, 0.8);
  const LossParams lp;  // alpha 1, beta 0
  const auto r = connectivity_loss(y, p, lp);
  const double hand = 3.0 * -std::log(1.0 - 0.8);
  EXPECT_NEAR(r.merge_term, hand, 1e-12);
  const double dice_only = dice_loss(y, p, 1.0);
  EXPECT_NEAR(r.total, dice_only + 10.0 / y.size() * hand, 1e-12);

  auto repaired = p;
  for (int r2 = 5; r2 < 8; ++r2) repaired.set(10, r2, 0.0);
  EXPECT_LT(connectivity_loss(y, repaired, lp).total, r.total);
}

TEST(LossParams, Validation) {
  LossParams lp;
  lp.alpha = 1.5;
  EXPECT_THROW(lp.validate(), ParameterError);
  lp = {};
  lp.structure_weight = 0.0;
  EXPECT_THROW(lp.validate(), ParameterError);
  lp = {};
  lp.clamp_epsilon = 0.5;
  EXPECT_THROW(lp.validate(), ParameterError);
}

TEST(LossGradient, SignsAtPerfectPrediction) {
  const auto y = two_lines();
  const auto p = ProbMap::from_mask(y, 1e-7, 1.0 - 1e-7);
  for (double alpha : {0.0, 1.0}) {
    LossParams lp;
    lp.alpha = alpha;
    const auto g = loss_gradient(y, p, lp);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i]) {
        ASSERT_LT(g[i], 0.0);
      } else {
        ASSERT_GT(g[i], 0.0);
      }
    }
  }
}

TEST(LossGradient, AlphaOneIsDiceOnlyOutsideMergeComponents) {
  const auto y = two_lines();
  std::vector<double> v(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) v[i] = y[i] ? 0.7 : 0.2;
  ProbMap p(y.width(), y.height(), v);
  for (int r = 5; r < 8; ++r) p.set(10, r, 0.9);
  const LossParams lp;
  const auto sel = selection_for(y, p, lp);
  ASSERT_EQ(sel.merge_components.size(), 1u);
  const auto g = loss_gradient(y, p, lp, sel);
  auto dice_only = lp;
  dice_only.alpha = 1.0;
  const auto gd = loss_gradient(y, p, dice_only, ComponentSelection{});
  const auto bridge = components_mask(sel.merge_components, y.width(), y.height());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (bridge[i]) {
      ASSERT_GT(g[i], gd[i]);
    } else {
      ASSERT_EQ(g[i], gd[i]);
    }
  }
}

TEST(LossGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(25);
  const double h = 1e-5;
  const std::pair<double, double> settings[] = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.4, 0.3}};
  for (int t = 0; t < 10; ++t) {
    const auto y = oracle::random_mask(rng, 16, 16, 0.4);
    const auto p = oracle::random_probs(rng, 16, 16);
    for (auto [a, b] : settings) {
      LossParams lp;
      lp.alpha = a;
      lp.beta = b;
      const auto sel = selection_for(y, p, lp);
      const auto g = loss_gradient(y, p, lp, sel);
      auto probe = p;
      for (std::size_t i = 0; i < p.size(); i += 7) {
        probe.set(i, p[i] + h);
        const double up = connectivity_loss(y, probe, lp, sel).total;
        probe.set(i, p[i] - h);
        const double dn = connectivity_loss(y, probe, lp, sel).total;
        probe.set(i, p[i]);
        const double num = (up - dn) / (2 * h);
        ASSERT_LT(std::abs(num - g[i]) / std::max({std::abs(num), std::abs(g[i]), 1e-12}), 1e-5)
            << "pixel " << i << " alpha " << a << " beta " << b;
      }
    }
  }
}
