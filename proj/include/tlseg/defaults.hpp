#pragma once

// Shipped default configuration. Values marked "published" come from the
// original method description; the rest are toolkit choices.
namespace tlseg::defaults {

// Patch training and inference (published).
inline constexpr int kPatchSize = 448;
inline constexpr double kRotationDeg = 5.0;
inline constexpr double kShearDeg = 3.0;

// Connectivity-aware loss (published).
inline constexpr double kAlpha = 1.0;
inline constexpr double kBeta = 0.0;
inline constexpr double kStructureWeight = 10.0;

// Loss plumbing (toolkit).
inline constexpr double kBinarizeThreshold = 0.5;
inline constexpr double kDiceEpsilon = 1.0;
inline constexpr double kClampEpsilon = 1e-7;

// Line matching (published).
inline constexpr double kMatchThreshold = 0.75;

// Baseline post-processing (published).
inline constexpr double kMinLineLength = 50.0;
inline constexpr double kMergeDistance = 50.0;
inline constexpr double kMergeAngleDeg = 15.0;

// Data handling (published).
inline constexpr int kDownsampleFactor = 3;
inline constexpr int kFewShotBudget = 3;

// Toolkit choices.
inline constexpr double kBaselineTolerance = 20.0;
inline constexpr int kBaselineThickness = 5;

}  // namespace tlseg::defaults
