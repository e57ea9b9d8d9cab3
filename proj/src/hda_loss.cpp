#include "sodkit/hda_loss.hpp"

#include <cmath>
#include <string>

namespace sodkit {

void HdaConfig::validate() const {
  if (neighborhood_side < 1) {
    throw ContractError("HdaConfig: neighborhood_side must be >= 1, got " +
                        std::to_string(neighborhood_side));
  }
  if (morph_iterations < 0) {
    throw ContractError("HdaConfig: morph_iterations must be >= 0");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ContractError("HdaConfig: lambda must be finite and >= 0");
  }
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    throw ContractError("HdaConfig: clamp_eps must lie in (0, 0.5)");
  }
}

void LevelWeights::validate() const {
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw ContractError("LevelWeights: alpha entries must be finite and > 0");
    }
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ContractError("LevelWeights: beta must be finite and > 0");
  }
}

namespace {

// Summed-area table over a mask; sat(r, c) holds the count of set pixels in
// the rectangle [0, r) x [0, c). Integer arithmetic keeps window sums exact.
std::vector<int64_t> summed_area(const BinaryMask& m) {
  const int h = m.height, w = m.width;
  std::vector<int64_t> sat(static_cast<size_t>(h + 1) * (w + 1), 0);
  const auto idx = [w](int r, int c) { return static_cast<size_t>(r) * (w + 1) + c; };
  for (int r = 0; r < h; ++r) {
    int64_t row = 0;
    for (int c = 0; c < w; ++c) {
      row += m.at(r, c);
      sat[idx(r + 1, c + 1)] = sat[idx(r, c + 1)] + row;
    }
  }
  return sat;
}

void accumulate_window_term(const BinaryMask& m, int side, bool normalize, Grid& omega) {
  const int h = m.height, w = m.width;
  const auto sat = summed_area(m);
  const auto idx = [w](int r, int c) { return static_cast<size_t>(r) * (w + 1) + c; };
  const int lo_off = (side - 1) / 2;
  const int hi_off = side / 2;

  for (int r = 0; r < h; ++r) {
    const int r0 = std::max(0, r - lo_off);
    const int r1 = std::min(h - 1, r + hi_off);
    for (int c = 0; c < w; ++c) {
      const int c0 = std::max(0, c - lo_off);
      const int c1 = std::min(w - 1, c + hi_off);
      const int64_t sum =
          sat[idx(r1 + 1, c1 + 1)] - sat[idx(r0, c1 + 1)] - sat[idx(r1 + 1, c0)] + sat[idx(r0, c0)];
      const double center = m.at(r, c);
      double term;
      if (normalize) {
        const int64_t area = static_cast<int64_t>(r1 - r0 + 1) * (c1 - c0 + 1);
        term = std::fabs(static_cast<double>(sum) / static_cast<double>(area) - center);
      } else {
        term = std::fabs(static_cast<double>(sum) - center);
      }
      omega.at(r, c) += term;
    }
  }
}

}  // namespace

Grid weight_map(const BinaryMask& gt, const HdaConfig& cfg) {
  cfg.validate();
  StructuringSpec morph{3, cfg.morph_iterations};
  const BinaryMask d = dilate(gt, morph);
  const BinaryMask e = erode(gt, morph);

  Grid omega(gt.height, gt.width, 0.0);
  accumulate_window_term(d, cfg.neighborhood_side, cfg.normalize_neighborhood, omega);
  accumulate_window_term(e, cfg.neighborhood_side, cfg.normalize_neighborhood, omega);
  return omega;
}

LossValueGrad weighted_bce(const GrayMap& pred, const BinaryMask& gt, const Grid& omega,
                           double lambda, double clamp_eps) {
  require_same_shape(pred, gt, "weighted_bce(pred, gt)");
  require_same_shape(omega, gt, "weighted_bce(omega, gt)");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ContractError("weighted_bce: lambda must be finite and >= 0");
  }
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    throw ContractError("weighted_bce: clamp_eps must lie in (0, 0.5)");
  }

  LossValueGrad out;
  out.grad = Grid(pred.height, pred.width, 0.0);

  double weight_total = 0.0;
  double acc = 0.0;
  const size_t n = pred.values.size();
  std::vector<double> pixel_term(n);
  std::vector<double> pixel_w(n);
  for (size_t i = 0; i < n; ++i) {
    const double w = 1.0 + lambda * omega.values[i];
    const double g = gt.values[i];
    double p = pred.values[i];
    bool clamped = false;
    if (p < clamp_eps) {
      p = clamp_eps;
      clamped = true;
    } else if (p > 1.0 - clamp_eps) {
      p = 1.0 - clamp_eps;
      clamped = true;
    }
    const double term = g != 0.0 ? std::log(p) : std::log1p(-p);
    weight_total += w;
    acc += w * term;
    pixel_term[i] = clamped ? 0.0 : (g != 0.0 ? -1.0 / p : 1.0 / (1.0 - p));
    pixel_w[i] = w;
  }

  out.value = -acc / weight_total;
  for (size_t i = 0; i < n; ++i) {
    out.grad.values[i] = pixel_w[i] * pixel_term[i] / weight_total;
  }
  return out;
}

LossValueGrad weighted_iou(const GrayMap& pred, const BinaryMask& gt, const Grid& omega,
                           double lambda) {
  require_same_shape(pred, gt, "weighted_iou(pred, gt)");
  require_same_shape(omega, gt, "weighted_iou(omega, gt)");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ContractError("weighted_iou: lambda must be finite and >= 0");
  }

  LossValueGrad out;
  out.grad = Grid(pred.height, pred.width, 0.0);

  double inter = 0.0;
  double uni = 0.0;
  const size_t n = pred.values.size();
  for (size_t i = 0; i < n; ++i) {
    const double w = 1.0 + lambda * omega.values[i];
    const double g = gt.values[i];
    const double p = pred.values[i];
    inter += w * g * p;
    uni += w * (g + p - g * p);
  }

  if (uni == 0.0) {
    out.degenerate = true;
    return out;
  }

  out.value = 1.0 - inter / uni;
  const double uni_sq = uni * uni;
  for (size_t i = 0; i < n; ++i) {
    const double w = 1.0 + lambda * omega.values[i];
    const double g = gt.values[i];
    // d(1 - I/U)/dp with dI/dp = w*g and dU/dp = w*(1-g).
    out.grad.values[i] = (inter * w * (1.0 - g) - uni * w * g) / uni_sq;
  }
  return out;
}

namespace {

LossValueGrad combine(LossValueGrad a, const LossValueGrad& b) {
  a.value += b.value;
  if (b.grad.size() == a.grad.size()) {
    for (size_t i = 0; i < a.grad.values.size(); ++i) a.grad.values[i] += b.grad.values[i];
  }
  a.degenerate = a.degenerate || b.degenerate;
  return a;
}

}  // namespace

LossValueGrad level_loss(const GrayMap& pred, const BinaryMask& gt, const Grid& omega,
                         const HdaConfig& cfg) {
  cfg.validate();
  LossValueGrad bce = weighted_bce(pred, gt, omega, cfg.lambda, cfg.clamp_eps);
  LossValueGrad iou = weighted_iou(pred, gt, omega, cfg.lambda);
  return combine(std::move(bce), iou);
}

LossValueGrad level_loss(const GrayMap& pred, const BinaryMask& gt, const HdaConfig& cfg) {
  return level_loss(pred, gt, weight_map(gt, cfg), cfg);
}

LossValueGrad ts_loss(const GrayMap& pred, const BinaryMask& expanded_gt, double clamp_eps) {
  const Grid zero(pred.height, pred.width, 0.0);
  LossValueGrad bce = weighted_bce(pred, expanded_gt, zero, 0.0, clamp_eps);
  LossValueGrad iou = weighted_iou(pred, expanded_gt, zero, 0.0);
  return combine(std::move(bce), iou);
}

TotalLoss total_loss(const GrayMap& ts_pred, const BinaryMask& expanded_gt,
                     std::span<const GrayMap> os_preds, const BinaryMask& gt,
                     const LevelWeights& weights, const HdaConfig& cfg) {
  weights.validate();
  cfg.validate();
  if (os_preds.size() != 4) {
    throw ContractError("total_loss: expected 4 output-supervision predictions, got " +
                        std::to_string(os_preds.size()));
  }

  TotalLoss out;
  out.ts = ts_loss(ts_pred, expanded_gt, cfg.clamp_eps);

  const Grid omega = weight_map(gt, cfg);
  for (size_t i = 0; i < 4; ++i) {
    out.levels[i] = level_loss(os_preds[i], gt, omega, cfg);
    out.multi_level += weights.alpha[i] * out.levels[i].value;
  }
  out.total = out.ts.value + weights.beta * out.multi_level;
  return out;
}

}  // namespace sodkit
