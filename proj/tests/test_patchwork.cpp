#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tlseg/patchwork.hpp"

using namespace tlseg;

namespace {

GrayImage random_image(std::mt19937_64& rng, int w, int h) {
  GrayImage img(w, h);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

std::vector<PatchPrediction> cut(const ProbMap& source, const TileGrid& grid) {
  std::vector<PatchPrediction> out;
  for (auto pos : grid.positions) {
    std::vector<double> v;
    for (int y = 0; y < grid.size; ++y) {
      for (int x = 0; x < grid.size; ++x) v.push_back(source(pos.x + x, pos.y + y));
    }
    out.push_back({ProbMap(grid.size, grid.size, v), pos});
  }
  return out;
}

}  // namespace

TEST(SampleTrainingPatches, IdentityWithoutAugmentation) {
  std::mt19937_64 rng(41);
  const auto img = random_image(rng, 448, 448);
  const auto gt = oracle::random_mask(rng, 448, 448, 0.3);
  PatchSpec spec;
  spec.rotation_deg = 0;
  spec.shear_deg = 0;
  const auto patches = sample_training_patches(img, gt, 1, spec);
  ASSERT_EQ(patches.size(), 1u);
  EXPECT_EQ(patches[0].image, img);
  EXPECT_EQ(patches[0].gt, gt);
}

TEST(SampleTrainingPatches, DeterministicAndBinary) {
  std::mt19937_64 rng(42);
  const auto img = random_image(rng, 96, 80);
  const auto gt = oracle::random_mask(rng, 96, 80, 0.3);
  PatchSpec spec;
  spec.size = 48;
  spec.seed = 9;
  const auto a = sample_training_patches(img, gt, 100, spec);
  const auto b = sample_training_patches(img, gt, 100, spec);
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a[k].image, b[k].image);
    ASSERT_EQ(a[k].gt, b[k].gt);
    ASSERT_LE(std::abs(a[k].rotation_deg), 5.0);
    ASSERT_LE(std::abs(a[k].shear_deg), 3.0);
    for (auto v : a[k].gt.data()) ASSERT_TRUE(v == 0 || v == 1);
    for (auto v : a[k].image.data()) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
  }
}

TEST(SampleTrainingPatches, TooSmallImageAsksForPadding) {
  GrayImage img(100, 100);
  BinaryMask gt(100, 100);
  try {
    sample_training_patches(img, gt, 1, PatchSpec{});
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("pad"), std::string::npos);
  }
}

TEST(TilePatches, Examples) {
  auto g = tile_patches(448, 448, 448, 224);
  EXPECT_EQ(g.positions, (std::vector<TilePosition>{{0, 0}}));
  g = tile_patches(896, 448, 448, 224);
  EXPECT_EQ(g.positions, (std::vector<TilePosition>{{0, 0}, {224, 0}, {448, 0}}));
  g = tile_patches(500, 500, 448, 224);
  EXPECT_EQ(g.positions, (std::vector<TilePosition>{{0, 0}, {52, 0}, {0, 52}, {52, 52}}));
}

TEST(TilePatches, RejectsBadArguments) {
  EXPECT_THROW(tile_patches(100, 100, 50, 0), ParameterError);
  EXPECT_THROW(tile_patches(100, 100, 50, 60), ParameterError);
  EXPECT_THROW(tile_patches(100, 40, 50, 25), ParameterError);
}

TEST(TilePatches, CoverageIsComplete) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 100; ++t) {
    const int w = std::uniform_int_distribution<int>(8, 120)(rng);
    const int h = std::uniform_int_distribution<int>(8, 120)(rng);
    const int size = std::uniform_int_distribution<int>(1, std::min(w, h))(rng);
    const int stride = std::uniform_int_distribution<int>(1, size)(rng);
    const auto g = tile_patches(w, h, size, stride);
    Grid<int> cover(w, h, 0);
    for (auto p : g.positions) {
      ASSERT_GE(p.x, 0);
      ASSERT_LE(p.x + size, w);
      ASSERT_LE(p.y + size, h);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) ++cover(p.x + x, p.y + y);
      }
    }
    for (int c : cover.data()) ASSERT_GT(c, 0);
  }
}

TEST(GaussianWindow, CentreSymmetryAndFlatLimit) {
  const auto w = gaussian_window(9, 2.0);
  EXPECT_EQ(w.weights(4, 4), 1.0);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) {
      ASSERT_GT(w.weights(x, y), 0.0);
      ASSERT_EQ(w.weights(x, y), w.weights(8 - x, y));
      ASSERT_EQ(w.weights(x, y), w.weights(x, 8 - y));
      ASSERT_LE(w.weights(x, y), w.weights(4, 4));
    }
  }
  const auto flat = gaussian_window(16, 1600.0);
  for (double v : flat.weights.data()) ASSERT_GT(v, 1.0 - 1e-3);
  EXPECT_DOUBLE_EQ(default_sigma(448), 112.0);
  EXPECT_THROW(gaussian_window(0, 1.0), ParameterError);
  EXPECT_THROW(gaussian_window(4, 0.0), ParameterError);
}

TEST(Stitch, SinglePatchIsBitExact) {
  std::mt19937_64 rng(44);
  const auto p = oracle::random_probs(rng, 32, 32, 0.0, 1.0);
  const auto out = stitch({{p, {0, 0}}}, gaussian_window(32, 8.0), 32, 32);
  EXPECT_EQ(out, p);
}

TEST(Stitch, ConstantPatchesReproduceTheConstant) {
  std::mt19937_64 rng(45);
  for (int t = 0; t < 20; ++t) {
    const int w = std::uniform_int_distribution<int>(20, 90)(rng);
    const int h = std::uniform_int_distribution<int>(20, 90)(rng);
    const int size = std::uniform_int_distribution<int>(4, std::min(w, h))(rng);
    const int stride = std::uniform_int_distribution<int>(1, size)(rng);
    const double sigma = std::uniform_real_distribution<double>(0.5, 2.0 * size)(rng);
    const double v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto grid = tile_patches(w, h, size, stride);
    std::vector<PatchPrediction> preds;
    for (auto pos : grid.positions) preds.push_back({ProbMap(size, size, v), pos});
    const auto out = stitch(preds, gaussian_window(size, sigma), w, h);
    for (double x : out.values()) ASSERT_LT(std::abs(x - v), 1e-12);
  }
}

TEST(Stitch, ReconstructsSourceFromAgreeingPatches) {
  std::mt19937_64 rng(46);
  const auto source = oracle::random_probs(rng, 70, 50, 0.0, 1.0);
  const auto grid = tile_patches(70, 50, 24, 10);
  EXPECT_EQ(stitch(cut(source, grid), gaussian_window(24, 6.0), 70, 50), source);
}

TEST(Stitch, OrderIndependent) {
  std::mt19937_64 rng(47);
  const auto grid = tile_patches(60, 40, 20, 7);
  std::vector<PatchPrediction> preds;
  for (auto pos : grid.positions) preds.push_back({oracle::random_probs(rng, 20, 20, 0.0, 1.0), pos});
  const auto window = gaussian_window(20, 5.0);
  const auto a = stitch(preds, window, 60, 40);
  std::shuffle(preds.begin(), preds.end(), rng);
  EXPECT_EQ(stitch(preds, window, 60, 40), a);
}

TEST(Stitch, HalfOverlappingZeroAndOne) {
  const int size = 21;
  const auto window = gaussian_window(size, 5.0);
  const auto out = stitch({{ProbMap(size, size, 0.0), {0, 0}}, {ProbMap(size, size, 1.0), {10, 0}}},
                          window, 31, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 11; x <= 20; ++x) ASSERT_GT(out(x, y), out(x - 1, y));
    // Column 15 is equidistant from both patch centres (10 and 20).
    ASSERT_EQ(out(15, y), 0.5);
  }
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_EQ(out(30, 0), 1.0);
}

TEST(Stitch, UncoveredPixelsAreReported) {
  try {
    stitch({{ProbMap(4, 4, 0.5), {0, 0}}}, gaussian_window(4, 1.0), 6, 4);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("(4,0)"), std::string::npos);
  }
}
