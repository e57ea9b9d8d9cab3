#include "sodkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include <nlohmann/json.hpp>

#include "sodkit/morphology.hpp"
#include "sodkit/parallel.hpp"
#include "sodkit/png_io.hpp"

namespace sodkit {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double FMeasureSpec::f(double precision, double recall) const {
  double num, den;
  if (literal_form) {
    const double b = 0.3;
    num = (1.0 + b) * (1.0 + b) * precision * recall;
    den = b * b * precision + recall;
  } else {
    num = (1.0 + beta_squared) * precision * recall;
    den = beta_squared * precision + recall;
  }
  return den == 0.0 ? 0.0 : num / den;
}

PrCurve pr_curve(const GrayMap& pred, const BinaryMask& gt, const FMeasureSpec& fspec) {
  require_same_shape(pred, gt, "pr_curve");

  int64_t pos_hist[256] = {};
  int64_t all_hist[256] = {};
  int64_t npos = 0;

  for (size_t i = 0; i < pred.values.size(); ++i) {
    const double p = pred.values[i];
    // Largest t with p >= t/255, found with the same comparison the
    // per-threshold reference uses so both paths agree bit for bit.
    int t = static_cast<int>(std::floor(p * 255.0));
    if (t > 255) t = 255;
    if (t < 0) t = 0;
    while (t < 255 && p >= (t + 1) / 255.0) ++t;
    while (t > 0 && p < t / 255.0) --t;
    all_hist[t]++;
    if (gt.values[i]) {
      pos_hist[t]++;
      npos++;
    }
  }

  PrCurve out;
  out.degenerate_gt = npos == 0;
  int64_t tp = 0, pp = 0;
  for (int t = 255; t >= 0; --t) {
    tp += pos_hist[t];
    pp += all_hist[t];
    CurveEntry& e = out.entries[t];
    e.threshold = t;
    e.precision = pp > 0 ? static_cast<double>(tp) / static_cast<double>(pp) : 1.0;
    e.recall = npos > 0 ? static_cast<double>(tp) / static_cast<double>(npos) : 1.0;
    e.f = fspec.f(e.precision, e.recall);
  }
  return out;
}

namespace reference {

PrCurve pr_curve(const GrayMap& pred, const BinaryMask& gt, const FMeasureSpec& fspec) {
  require_same_shape(pred, gt, "reference::pr_curve");

  int64_t npos = 0;
  for (uint8_t g : gt.values) npos += g;

  PrCurve out;
  out.degenerate_gt = npos == 0;
  for (int t = 0; t < 256; ++t) {
    const double thr = t / 255.0;
    int64_t tp = 0, pp = 0;
    for (size_t i = 0; i < pred.values.size(); ++i) {
      if (pred.values[i] >= thr) {
        pp++;
        if (gt.values[i]) tp++;
      }
    }
    CurveEntry& e = out.entries[t];
    e.threshold = t;
    e.precision = pp > 0 ? static_cast<double>(tp) / static_cast<double>(pp) : 1.0;
    e.recall = npos > 0 ? static_cast<double>(tp) / static_cast<double>(npos) : 1.0;
    e.f = fspec.f(e.precision, e.recall);
  }
  return out;
}

}  // namespace reference

double max_f(const PrCurve& curve) {
  double best = curve.entries[0].f;
  for (int t = 1; t < 256; ++t) {
    if (curve.entries[t].f > best) best = curve.entries[t].f;
  }
  return best;
}

double mae(const GrayMap& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "mae");
  double acc = 0.0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    acc += std::fabs(pred.values[i] - static_cast<double>(gt.values[i]));
  }
  return acc / static_cast<double>(pred.values.size());
}

BandMae boundary_mae(const GrayMap& pred, const BinaryMask& gt, int radius) {
  require_same_shape(pred, gt, "boundary_mae");
  const BinaryMask band = boundary_band(gt, radius);

  double acc = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < band.values.size(); ++i) {
    if (band.values[i]) {
      acc += std::fabs(pred.values[i] - static_cast<double>(gt.values[i]));
      n++;
    }
  }
  if (n == 0) return {0.0, true};
  return {acc / static_cast<double>(n), false};
}

namespace {

// 2*mean / (mean^2 + 1 + sample_std + eps) over the selected values.
double object_score(const std::vector<double>& vals) {
  if (vals.empty()) return 0.0;
  double sum = 0.0;
  for (double v : vals) sum += v;
  const double x = sum / static_cast<double>(vals.size());
  double sigma = 0.0;
  if (vals.size() > 1) {
    double dev = 0.0;
    for (double v : vals) dev += (v - x) * (v - x);
    sigma = std::sqrt(dev / static_cast<double>(vals.size() - 1));
  }
  return 2.0 * x / (x * x + 1.0 + sigma + kEps);
}

double s_object(const GrayMap& pred, const BinaryMask& gt) {
  std::vector<double> fg, bg;
  fg.reserve(pred.values.size());
  bg.reserve(pred.values.size());
  int64_t ones = 0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    if (gt.values[i]) {
      fg.push_back(pred.values[i]);
      ones++;
    } else {
      bg.push_back(1.0 - pred.values[i]);
    }
  }
  const double u = static_cast<double>(ones) / static_cast<double>(pred.values.size());
  return u * object_score(fg) + (1.0 - u) * object_score(bg);
}

int round_half_away(double x) {
  return x >= 0.0 ? static_cast<int>(std::floor(x + 0.5)) : static_cast<int>(std::ceil(x - 0.5));
}

// One-based centroid column X and row Y, as in the reference code.
void centroid(const BinaryMask& gt, int& X, int& Y) {
  int64_t total = 0;
  int64_t col_acc = 0, row_acc = 0;
  for (int r = 0; r < gt.height; ++r) {
    for (int c = 0; c < gt.width; ++c) {
      if (gt.at(r, c)) {
        total++;
        col_acc += c + 1;
        row_acc += r + 1;
      }
    }
  }
  if (total == 0) {
    X = round_half_away(gt.width / 2.0);
    Y = round_half_away(gt.height / 2.0);
    return;
  }
  X = round_half_away(static_cast<double>(col_acc) / static_cast<double>(total));
  Y = round_half_away(static_cast<double>(row_acc) / static_cast<double>(total));
}

double ssim_block(const GrayMap& pred, const BinaryMask& gt, int r0, int r1, int c0, int c1) {
  const int64_t n = static_cast<int64_t>(r1 - r0) * (c1 - c0);
  double px = 0.0, gy = 0.0;
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) {
      px += pred.at(r, c);
      gy += gt.at(r, c);
    }
  }
  const double x = px / static_cast<double>(n);
  const double y = gy / static_cast<double>(n);

  double sx2 = 0.0, sy2 = 0.0, sxy = 0.0;
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) {
      const double dp = pred.at(r, c) - x;
      const double dg = static_cast<double>(gt.at(r, c)) - y;
      sx2 += dp * dp;
      sy2 += dg * dg;
      sxy += dp * dg;
    }
  }
  const double denom = static_cast<double>(n - 1) + kEps;
  sx2 /= denom;
  sy2 /= denom;
  sxy /= denom;

  const double a = 4.0 * x * y * sxy;
  const double b = (x * x + y * y) * (sx2 + sy2);
  if (a != 0.0) return a / (b + kEps);
  if (b == 0.0) return 1.0;
  return 0.0;
}

double s_region(const GrayMap& pred, const BinaryMask& gt) {
  int X = 0, Y = 0;
  centroid(gt, X, Y);
  const int h = gt.height, w = gt.width;
  const double area = static_cast<double>(h) * w;

  struct Block {
    int r0, r1, c0, c1;
  };
  const Block blocks[4] = {{0, Y, 0, X}, {0, Y, X, w}, {Y, h, 0, X}, {Y, h, X, w}};

  double q = 0.0;
  for (const Block& blk : blocks) {
    const int64_t size = static_cast<int64_t>(blk.r1 - blk.r0) * (blk.c1 - blk.c0);
    if (size <= 0) continue;
    const double weight = static_cast<double>(size) / area;
    q += weight * ssim_block(pred, gt, blk.r0, blk.r1, blk.c0, blk.c1);
  }
  return q;
}

}  // namespace

double s_measure(const GrayMap& pred, const BinaryMask& gt, double alpha) {
  require_same_shape(pred, gt, "s_measure");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ContractError("s_measure: alpha must lie in [0, 1]");
  }

  const double y = static_cast<double>(count_ones(gt)) / static_cast<double>(gt.values.size());
  double pred_mean = 0.0;
  for (double v : pred.values) pred_mean += v;
  pred_mean /= static_cast<double>(pred.values.size());

  if (y == 0.0) return 1.0 - pred_mean;
  if (y == 1.0) return pred_mean;

  const double q = alpha * s_object(pred, gt) + (1.0 - alpha) * s_region(pred, gt);
  return std::max(q, 0.0);
}

std::optional<double> ashp(const GrayMap& pred) {
  double acc = 0.0;
  int64_t n = 0;
  for (double v : pred.values) {
    if (v > 0.0) {
      acc += v;
      n++;
    }
  }
  if (n == 0) return std::nullopt;
  return acc / static_cast<double>(n);
}

MetricReport evaluate_pairs(const std::vector<EvalPair>& pairs, const EvalConfig& cfg) {
  if (pairs.empty()) throw ContractError("evaluate_pairs: no prediction/gt pairs");
  if (cfg.mae_b_radius < 1) throw ContractError("evaluate_pairs: mae_b_radius must be >= 1");
  if (!(cfg.fspec.beta_squared > 0.0)) {
    throw ContractError("evaluate_pairs: beta_squared must be > 0");
  }
  for (const EvalPair& p : pairs) {
    require_same_shape(p.pred, p.gt, "evaluate_pairs('" + p.stem + "')");
  }

  const int n = static_cast<int>(pairs.size());
  std::vector<ImageEval> evals(n);
  std::vector<PrCurve> curves(n);

  parallel_for(n, cfg.threads, [&](int i) {
    const EvalPair& pair = pairs[i];
    PrCurve curve = pr_curve(pair.pred, pair.gt, cfg.fspec);
    ImageEval ev;
    ev.stem = pair.stem;
    ev.mae = mae(pair.pred, pair.gt);
    ev.max_f = max_f(curve);
    ev.s_measure = s_measure(pair.pred, pair.gt);
    ev.degenerate_gt = curve.degenerate_gt;
    const BandMae bm = boundary_mae(pair.pred, pair.gt, cfg.mae_b_radius);
    if (!bm.degenerate) ev.mae_b = bm.value;
    ev.ashp = ashp(pair.pred);
    evals[i] = std::move(ev);
    curves[i] = curve;
  });

  MetricReport report;
  report.count = n;
  report.per_image = std::move(evals);

  double mae_acc = 0.0, s_acc = 0.0, maxf_acc = 0.0;
  double band_acc = 0.0, ashp_acc = 0.0;
  int band_n = 0, ashp_n = 0;
  for (const ImageEval& ev : report.per_image) {
    mae_acc += ev.mae;
    s_acc += ev.s_measure;
    maxf_acc += ev.max_f;
    if (ev.mae_b) {
      band_acc += *ev.mae_b;
      band_n++;
    }
    if (ev.ashp) {
      ashp_acc += *ev.ashp;
      ashp_n++;
    }
    if (ev.degenerate_gt || !ev.mae_b || !ev.ashp) {
      report.degenerate_images.push_back(ev.stem);
    }
  }
  std::sort(report.degenerate_images.begin(), report.degenerate_images.end());

  report.mae = mae_acc / n;
  report.s_measure = s_acc / n;
  report.mean_of_max_f = maxf_acc / n;
  if (band_n > 0) report.mae_b = band_acc / band_n;
  if (ashp_n > 0) report.ashp = ashp_acc / ashp_n;

  for (int t = 0; t < 256; ++t) {
    double p_acc = 0.0, r_acc = 0.0;
    bool any_degenerate = false;
    for (int i = 0; i < n; ++i) {
      p_acc += curves[i].entries[t].precision;
      r_acc += curves[i].entries[t].recall;
      any_degenerate = any_degenerate || curves[i].degenerate_gt;
    }
    CurveEntry& e = report.mean_curve.entries[t];
    e.threshold = t;
    e.precision = p_acc / n;
    e.recall = r_acc / n;
    e.f = cfg.fspec.f(e.precision, e.recall);
    report.mean_curve.degenerate_gt = any_degenerate;
  }
  report.max_f_of_mean_curve = max_f(report.mean_curve);
  report.max_f = report.max_f_of_mean_curve;

  if (report.ashp && report.mae != 0.0) {
    report.a_over_m = *report.ashp / report.mae;
  }
  return report;
}

namespace {

std::vector<std::string> png_stems(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() == ".png") stems.push_back(p.stem().string());
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

}  // namespace

MetricReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir,
                           const EvalConfig& cfg) {
  namespace fs = std::filesystem;
  const std::vector<std::string> pred_stems = png_stems(pred_dir);
  const std::vector<std::string> gt_stems = png_stems(gt_dir);

  std::vector<std::string> errors;
  std::vector<EvalPair> pairs;

  for (const std::string& stem : gt_stems) {
    if (!std::binary_search(pred_stems.begin(), pred_stems.end(), stem)) {
      errors.push_back(stem + ": missing prediction");
    }
  }
  for (const std::string& stem : pred_stems) {
    const fs::path gt_path = fs::path(gt_dir) / (stem + ".png");
    if (!fs::exists(gt_path)) {
      errors.push_back(stem + ": missing ground truth");
      continue;
    }
    try {
      EvalPair pair;
      pair.stem = stem;
      pair.pred = load_gray((fs::path(pred_dir) / (stem + ".png")).string());
      pair.gt = load_mask(gt_path.string());
      if (pair.pred.height != pair.gt.height || pair.pred.width != pair.gt.width) {
        errors.push_back(stem + ": shape mismatch between prediction and ground truth");
        continue;
      }
      pairs.push_back(std::move(pair));
    } catch (const DataError& e) {
      errors.push_back(stem + ": " + e.what());
    }
  }

  MetricReport report;
  if (!pairs.empty()) {
    report = evaluate_pairs(pairs, cfg);
  }
  std::sort(errors.begin(), errors.end());
  report.errors = std::move(errors);
  return report;
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["count"] = report.count;
  j["mae"] = report.mae;
  j["max_f"] = report.max_f;
  j["max_f_of_mean_curve"] = report.max_f_of_mean_curve;
  j["mean_of_max_f"] = report.mean_of_max_f;
  j["s_measure"] = report.s_measure;
  j["mae_b"] = report.mae_b ? nlohmann::json(*report.mae_b) : nlohmann::json(nullptr);
  j["ashp"] = report.ashp ? nlohmann::json(*report.ashp) : nlohmann::json(nullptr);
  j["a_over_m"] = report.a_over_m ? nlohmann::json(*report.a_over_m) : nlohmann::json(nullptr);
  j["degenerate_images"] = report.degenerate_images;
  j["errors"] = report.errors;

  nlohmann::json per_image = nlohmann::json::array();
  for (const ImageEval& ev : report.per_image) {
    nlohmann::json row;
    row["stem"] = ev.stem;
    row["mae"] = ev.mae;
    row["max_f"] = ev.max_f;
    row["s_measure"] = ev.s_measure;
    row["mae_b"] = ev.mae_b ? nlohmann::json(*ev.mae_b) : nlohmann::json(nullptr);
    row["ashp"] = ev.ashp ? nlohmann::json(*ev.ashp) : nlohmann::json(nullptr);
    row["degenerate_gt"] = ev.degenerate_gt;
    per_image.push_back(row);
  }
  j["per_image"] = per_image;
  return j.dump(2) + "\n";
}

std::string curve_to_csv(const PrCurve& curve) {
  std::string out = "threshold,precision,recall,f\n";
  for (const CurveEntry& e : curve.entries) {
    out += std::to_string(e.threshold);
    out += ',';
    out += fmt_double(e.precision);
    out += ',';
    out += fmt_double(e.recall);
    out += ',';
    out += fmt_double(e.f);
    out += '\n';
  }
  return out;
}

std::string per_image_to_csv(const MetricReport& report) {
  std::string out = "stem,mae,max_f,s_measure,mae_b,ashp,degenerate_gt\n";
  for (const ImageEval& ev : report.per_image) {
    out += ev.stem;
    out += ',';
    out += fmt_double(ev.mae);
    out += ',';
    out += fmt_double(ev.max_f);
    out += ',';
    out += fmt_double(ev.s_measure);
    out += ',';
    if (ev.mae_b) out += fmt_double(*ev.mae_b);
    out += ',';
    if (ev.ashp) out += fmt_double(*ev.ashp);
    out += ',';
    out += ev.degenerate_gt ? '1' : '0';
    out += '\n';
  }
  return out;
}

}  // namespace sodkit
