#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sodkit/grid.hpp"
#include "sodkit/hda_loss.hpp"
#include "sodkit/metrics.hpp"

namespace sodkit {

inline constexpr int kFeatureCount = 8;

// Per-pixel logistic model over hand-built local features. Deliberately
// tiny: it exists to compare training losses, not to compete on quality.
struct PixelModel {
  std::vector<double> weights;  // kFeatureCount entries
  double bias = 0.0;
};

enum class LossMode { bce_iou, hda };

std::string to_string(LossMode mode);
LossMode loss_mode_from_string(const std::string& name);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 50;
  LossMode loss_mode = LossMode::hda;
  uint64_t seed = 0;

  void validate() const;
};

// 8 x H x W feature stack: the three raw channels, box means at radius 2
// and 5, local standard deviations at the same radii, and the gradient
// magnitude of the channel mean. Windows are clipped at the borders and
// every plane is standardized to zero mean and unit variance per image
// (constant planes stay zero).
Tensor3 featurize(const Tensor3& image);

// Logistic response per pixel.
GrayMap predict(const PixelModel& model, const Tensor3& features);

struct TrainItem {
  std::string stem;
  Tensor3 features;
  BinaryMask gt;
  Grid omega;  // cached weight map for gt, reused across epochs and modes
};

TrainItem make_train_item(std::string stem, const Tensor3& image, BinaryMask gt,
                          const HdaConfig& cfg);

struct ParamGrad {
  double loss = 0.0;
  std::vector<double> d_weights;
  double d_bias = 0.0;
};

// Mean per-item loss and its parameter gradient. Mode bce_iou runs the same
// code path with lambda forced to zero, so setting lambda to zero in the
// config makes the two modes agree bit for bit.
ParamGrad training_loss_grad(const PixelModel& model, const std::vector<TrainItem>& items,
                             LossMode mode, const HdaConfig& cfg);

struct TrainResult {
  PixelModel model;
  std::vector<double> loss_trace;  // epochs + 1 entries; last is the final loss
};

// Full-batch gradient descent from a seed-deterministic initialization.
TrainResult train(const std::vector<TrainItem>& items, const TrainConfig& train_cfg,
                  const HdaConfig& hda_cfg);

struct AblationSeedRow {
  uint64_t seed = 0;
  MetricReport baseline;  // trained with bce_iou
  MetricReport weighted;  // trained with hda
};

struct AblationReport {
  std::vector<AblationSeedRow> rows;
  int comparable = 0;     // seeds where both runs have a defined mae_b
  int mae_b_wins = 0;     // weighted mean mae_b strictly lower
  int mae_non_worse = 0;  // weighted mean mae not higher
};

// Trains both modes from the same initialization per seed and evaluates on
// the held-out items.
AblationReport ablate(const std::vector<TrainItem>& train_items,
                      const std::vector<TrainItem>& test_items, const TrainConfig& base_cfg,
                      const HdaConfig& hda_cfg, const std::vector<uint64_t>& seeds,
                      const EvalConfig& eval_cfg = {});

}  // namespace sodkit
