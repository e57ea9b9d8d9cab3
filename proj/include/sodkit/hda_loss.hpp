#pragma once

#include <array>
#include <span>

#include "sodkit/grid.hpp"
#include "sodkit/morphology.hpp"

namespace sodkit {

// Settings for the difference-aware weight map and the weighted losses.
struct HdaConfig {
  // Side of the square averaging neighborhood, clipped at the borders.
  // For even sides the window around pixel i covers [i-(side-1)/2, i+side/2].
  int neighborhood_side = 30;
  // Iteration count for the dilate/erode pair feeding the weight map.
  int morph_iterations = 5;
  // Strength of the per-pixel weight term (weights are 1 + lambda * omega).
  double lambda = 5.0;
  // Predictions are clamped into [clamp_eps, 1 - clamp_eps] before logs.
  double clamp_eps = 1e-7;
  // Default mode subtracts the window mean; the literal mode subtracts the
  // center value from the raw window sum instead.
  bool normalize_neighborhood = true;

  void validate() const;
};

// Per-level weights for the multi-level output-supervision term and the
// branch combination factor. Levels run 2..5; alpha[0] belongs to level 2.
struct LevelWeights {
  std::array<double, 4> alpha{1.0, 0.8, 0.6, 0.4};
  double beta = 1.0;

  void validate() const;
};

// A scalar loss with its per-pixel derivative. `degenerate` marks inputs
// where a quotient collapsed (empty union) and value/grad were forced to 0.
struct LossValueGrad {
  double value = 0.0;
  Grid grad;
  bool degenerate = false;
};

// omega = |window_mean(D) - D| + |window_mean(E) - E| where D/E are the
// iterated dilation/erosion of gt. Nonnegative, zero for constant masks.
Grid weight_map(const BinaryMask& gt, const HdaConfig& cfg = {});

// Pixel-weighted binary cross entropy, normalized by the total weight.
// Gradient entries are zero wherever the clamp was active.
LossValueGrad weighted_bce(const GrayMap& pred, const BinaryMask& gt, const Grid& omega,
                           double lambda, double clamp_eps = 1e-7);

// 1 - weighted intersection over weighted union. An all-zero union yields
// value 0, zero gradient and the degenerate flag.
LossValueGrad weighted_iou(const GrayMap& pred, const BinaryMask& gt, const Grid& omega,
                           double lambda);

// Weighted BCE plus weighted IoU against gt, with omega supplied or derived.
LossValueGrad level_loss(const GrayMap& pred, const BinaryMask& gt, const Grid& omega,
                         const HdaConfig& cfg = {});
LossValueGrad level_loss(const GrayMap& pred, const BinaryMask& gt, const HdaConfig& cfg = {});

// Unweighted BCE plus IoU against the expanded ground truth (the branch
// trained on the enlarged target region).
LossValueGrad ts_loss(const GrayMap& pred, const BinaryMask& expanded_gt,
                      double clamp_eps = 1e-7);

struct TotalLoss {
  LossValueGrad ts;                      // expanded-target branch term
  std::array<LossValueGrad, 4> levels;   // per-level terms, levels 2..5
  double multi_level = 0.0;              // sum of alpha[i] * levels[i].value
  double total = 0.0;                    // ts.value + beta * multi_level
};

// os_preds holds the level 2..5 predictions in that order. The derivative
// of `total` w.r.t. os_preds[i] is beta * alpha[i] * levels[i].grad.
TotalLoss total_loss(const GrayMap& ts_pred, const BinaryMask& expanded_gt,
                     std::span<const GrayMap> os_preds, const BinaryMask& gt,
                     const LevelWeights& weights = {}, const HdaConfig& cfg = {});

}  // namespace sodkit
