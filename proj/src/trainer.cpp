#include "sodkit/trainer.hpp"

#include <cmath>

#include "sodkit/nn.hpp"
#include "sodkit/rng.hpp"

namespace sodkit {

std::string to_string(LossMode mode) {
  return mode == LossMode::bce_iou ? "bce_iou" : "hda";
}

LossMode loss_mode_from_string(const std::string& name) {
  if (name == "bce_iou") return LossMode::bce_iou;
  if (name == "hda") return LossMode::hda;
  throw ContractError("unknown loss mode: " + name);
}

void TrainConfig::validate() const {
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw ContractError("TrainConfig: learning_rate must be finite and >= 0");
  }
  if (epochs < 1) throw ContractError("TrainConfig: epochs must be >= 1");
}

namespace {

// Summed-area tables over the plane and its squares, for clipped box stats.
struct BoxStats {
  int h, w;
  std::vector<double> sat, sat2;

  explicit BoxStats(const GrayMap& m) : h(m.height), w(m.width) {
    sat.assign(static_cast<size_t>(h + 1) * (w + 1), 0.0);
    sat2.assign(sat.size(), 0.0);
    for (int r = 0; r < h; ++r) {
      double row = 0.0, row2 = 0.0;
      for (int c = 0; c < w; ++c) {
        const double v = m.at(r, c);
        row += v;
        row2 += v * v;
        at(sat, r + 1, c + 1) = at(sat, r, c + 1) + row;
        at(sat2, r + 1, c + 1) = at(sat2, r, c + 1) + row2;
      }
    }
  }

  double& at(std::vector<double>& s, int r, int c) const {
    return s[static_cast<size_t>(r) * (w + 1) + c];
  }
  double get(const std::vector<double>& s, int r, int c) const {
    return s[static_cast<size_t>(r) * (w + 1) + c];
  }

  void window(int r, int c, int radius, double& mean, double& stddev) const {
    const int r0 = std::max(0, r - radius), r1 = std::min(h - 1, r + radius);
    const int c0 = std::max(0, c - radius), c1 = std::min(w - 1, c + radius);
    const double area = static_cast<double>(r1 - r0 + 1) * (c1 - c0 + 1);
    const double s =
        get(sat, r1 + 1, c1 + 1) - get(sat, r0, c1 + 1) - get(sat, r1 + 1, c0) + get(sat, r0, c0);
    const double s2 = get(sat2, r1 + 1, c1 + 1) - get(sat2, r0, c1 + 1) - get(sat2, r1 + 1, c0) +
                      get(sat2, r0, c0);
    mean = s / area;
    const double var = s2 / area - mean * mean;
    stddev = var > 0.0 ? std::sqrt(var) : 0.0;
  }
};

}  // namespace

Tensor3 featurize(const Tensor3& image) {
  if (image.channels != 3) throw ContractError("featurize: expected a 3-channel image");
  image.check_finite("featurize input");

  const int h = image.height, w = image.width;
  const GrayMap luma = channel_mean(image);
  const BoxStats stats(luma);

  Tensor3 out(kFeatureCount, h, w);
  for (int c = 0; c < 3; ++c) {
    std::copy(image.plane(c), image.plane(c) + static_cast<size_t>(h) * w, out.plane(c));
  }

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double m2, s2, m5, s5;
      stats.window(r, c, 2, m2, s2);
      stats.window(r, c, 5, m5, s5);
      out.at(3, r, c) = m2;
      out.at(4, r, c) = m5;
      out.at(5, r, c) = s2;
      out.at(6, r, c) = s5;
    }
  }

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double gx, gy;
      if (w == 1) {
        gx = 0.0;
      } else if (c == 0) {
        gx = luma.at(r, 1) - luma.at(r, 0);
      } else if (c == w - 1) {
        gx = luma.at(r, w - 1) - luma.at(r, w - 2);
      } else {
        gx = (luma.at(r, c + 1) - luma.at(r, c - 1)) / 2.0;
      }
      if (h == 1) {
        gy = 0.0;
      } else if (r == 0) {
        gy = luma.at(1, c) - luma.at(0, c);
      } else if (r == h - 1) {
        gy = luma.at(h - 1, c) - luma.at(h - 2, c);
      } else {
        gy = (luma.at(r + 1, c) - luma.at(r - 1, c)) / 2.0;
      }
      out.at(7, r, c) = std::sqrt(gx * gx + gy * gy);
    }
  }

  // Standardize each plane so gradient descent sees comparable scales.
  const size_t plane = static_cast<size_t>(h) * w;
  for (int k = 0; k < kFeatureCount; ++k) {
    double* p = out.plane(k);
    double mean = 0.0;
    for (size_t i = 0; i < plane; ++i) mean += p[i];
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (size_t i = 0; i < plane; ++i) var += (p[i] - mean) * (p[i] - mean);
    var /= static_cast<double>(plane);
    const double scale = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
    for (size_t i = 0; i < plane; ++i) p[i] = (p[i] - mean) * scale;
  }
  return out;
}

GrayMap predict(const PixelModel& model, const Tensor3& features) {
  if (features.channels != kFeatureCount) {
    throw ContractError("predict: feature stack must have " + std::to_string(kFeatureCount) +
                        " planes");
  }
  if (model.weights.size() != static_cast<size_t>(kFeatureCount)) {
    throw ContractError("predict: model must carry " + std::to_string(kFeatureCount) +
                        " weights");
  }

  const size_t plane = static_cast<size_t>(features.height) * features.width;
  GrayMap out(features.height, features.width);
  for (size_t i = 0; i < plane; ++i) {
    double z = model.bias;
    for (int k = 0; k < kFeatureCount; ++k) {
      z += model.weights[k] * features.values[k * plane + i];
    }
    out.values[i] = nn::sigmoid_scalar(z);
  }
  return out;
}

TrainItem make_train_item(std::string stem, const Tensor3& image, BinaryMask gt,
                          const HdaConfig& cfg) {
  if (image.height != gt.height || image.width != gt.width) {
    throw ContractError("make_train_item: image and gt shapes differ");
  }
  TrainItem item;
  item.stem = std::move(stem);
  item.features = featurize(image);
  item.omega = weight_map(gt, cfg);
  item.gt = std::move(gt);
  return item;
}

ParamGrad training_loss_grad(const PixelModel& model, const std::vector<TrainItem>& items,
                             LossMode mode, const HdaConfig& cfg) {
  if (items.empty()) throw ContractError("training_loss_grad: no items");
  cfg.validate();
  HdaConfig effective = cfg;
  if (mode == LossMode::bce_iou) effective.lambda = 0.0;

  ParamGrad out;
  out.d_weights.assign(kFeatureCount, 0.0);

  for (const TrainItem& item : items) {
    const GrayMap pred = predict(model, item.features);
    const LossValueGrad lv = level_loss(pred, item.gt, item.omega, effective);
    out.loss += lv.value;

    const size_t plane = static_cast<size_t>(pred.height) * pred.width;
    for (size_t i = 0; i < plane; ++i) {
      const double p = pred.values[i];
      const double chain = lv.grad.values[i] * p * (1.0 - p);
      out.d_bias += chain;
      for (int k = 0; k < kFeatureCount; ++k) {
        out.d_weights[k] += chain * item.features.values[k * plane + i];
      }
    }
  }

  const double inv = 1.0 / static_cast<double>(items.size());
  out.loss *= inv;
  out.d_bias *= inv;
  for (double& g : out.d_weights) g *= inv;
  return out;
}

TrainResult train(const std::vector<TrainItem>& items, const TrainConfig& train_cfg,
                  const HdaConfig& hda_cfg) {
  if (items.empty()) throw ContractError("train: no items");
  train_cfg.validate();
  hda_cfg.validate();

  Rng rng(train_cfg.seed);
  TrainResult result;
  result.model.weights.resize(kFeatureCount);
  for (double& w : result.model.weights) w = rng.uniform(-0.1, 0.1);
  result.model.bias = 0.0;

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    const ParamGrad pg =
        training_loss_grad(result.model, items, train_cfg.loss_mode, hda_cfg);
    if (!std::isfinite(pg.loss)) {
      throw DataError("training diverged at epoch " + std::to_string(epoch));
    }
    result.loss_trace.push_back(pg.loss);
    for (int k = 0; k < kFeatureCount; ++k) {
      result.model.weights[k] -= train_cfg.learning_rate * pg.d_weights[k];
    }
    result.model.bias -= train_cfg.learning_rate * pg.d_bias;
  }

  const ParamGrad final_pg =
      training_loss_grad(result.model, items, train_cfg.loss_mode, hda_cfg);
  if (!std::isfinite(final_pg.loss)) throw DataError("training diverged at final evaluation");
  result.loss_trace.push_back(final_pg.loss);
  return result;
}

namespace {

MetricReport evaluate_model(const PixelModel& model, const std::vector<TrainItem>& test_items,
                            const EvalConfig& eval_cfg) {
  std::vector<EvalPair> pairs;
  pairs.reserve(test_items.size());
  for (const TrainItem& item : test_items) {
    pairs.push_back({item.stem, predict(model, item.features), item.gt});
  }
  return evaluate_pairs(pairs, eval_cfg);
}

}  // namespace

AblationReport ablate(const std::vector<TrainItem>& train_items,
                      const std::vector<TrainItem>& test_items, const TrainConfig& base_cfg,
                      const HdaConfig& hda_cfg, const std::vector<uint64_t>& seeds,
                      const EvalConfig& eval_cfg) {
  if (seeds.empty()) throw ContractError("ablate: no seeds");
  if (test_items.empty()) throw ContractError("ablate: no test items");

  AblationReport report;
  for (uint64_t seed : seeds) {
    TrainConfig cfg_base = base_cfg;
    cfg_base.seed = seed;
    cfg_base.loss_mode = LossMode::bce_iou;
    TrainConfig cfg_weighted = cfg_base;
    cfg_weighted.loss_mode = LossMode::hda;

    const TrainResult rb = train(train_items, cfg_base, hda_cfg);
    const TrainResult rw = train(train_items, cfg_weighted, hda_cfg);

    AblationSeedRow row;
    row.seed = seed;
    row.baseline = evaluate_model(rb.model, test_items, eval_cfg);
    row.weighted = evaluate_model(rw.model, test_items, eval_cfg);

    if (row.baseline.mae_b && row.weighted.mae_b) {
      report.comparable++;
      if (*row.weighted.mae_b < *row.baseline.mae_b) report.mae_b_wins++;
    }
    if (row.weighted.mae <= row.baseline.mae) report.mae_non_worse++;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace sodkit
