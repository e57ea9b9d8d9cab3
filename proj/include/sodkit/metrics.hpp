#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sodkit/grid.hpp"

namespace sodkit {

// F-measure used along the precision/recall curve. The default follows the
// common salient-object convention (1 + b2) P R / (b2 P + R) with b2 = 0.3;
// the literal form uses (1 + b)^2 P R / (b^2 P + R) with b = 0.3 instead.
struct FMeasureSpec {
  double beta_squared = 0.3;
  bool literal_form = false;

  double f(double precision, double recall) const;
};

struct CurveEntry {
  int threshold = 0;  // integer threshold t; pixels with value >= t/255 count
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

struct PrCurve {
  std::array<CurveEntry, 256> entries{};
  // True when gt has no foreground; recall is then defined as 1 everywhere.
  bool degenerate_gt = false;
};

// Histogram-based single pass. Exactly equal to the 256-pass reference
// because thresholds are compared with the same v >= t/255 rule.
PrCurve pr_curve(const GrayMap& pred, const BinaryMask& gt, const FMeasureSpec& fspec = {});

namespace reference {
// 256 independent binarization passes; kept as the oracle for pr_curve.
PrCurve pr_curve(const GrayMap& pred, const BinaryMask& gt, const FMeasureSpec& fspec = {});
}  // namespace reference

// Maximum F along the curve; ties resolve to the lowest threshold.
double max_f(const PrCurve& curve);

double mae(const GrayMap& pred, const BinaryMask& gt);

struct BandMae {
  double value = 0.0;
  bool degenerate = false;  // empty band; value forced to 0
};

// Mean absolute error restricted to pixels within Chebyshev distance
// `radius` of the ground-truth boundary.
BandMae boundary_mae(const GrayMap& pred, const BinaryMask& gt, int radius = 10);

// Structure measure following the reference implementation's conventions:
// machine-epsilon guards, N-1 variance, round-half-away centroid with
// one-based indexing, and special cases for empty and full ground truth.
double s_measure(const GrayMap& pred, const BinaryMask& gt, double alpha = 0.5);

// Average score over strictly positive prediction pixels; empty support
// yields no value.
std::optional<double> ashp(const GrayMap& pred);

struct EvalPair {
  std::string stem;
  GrayMap pred;
  BinaryMask gt;
};

struct EvalConfig {
  int mae_b_radius = 10;
  FMeasureSpec fspec{};
  int threads = 1;  // 0 = all cores
};

struct ImageEval {
  std::string stem;
  double mae = 0.0;
  double max_f = 0.0;
  double s_measure = 0.0;
  std::optional<double> mae_b;  // absent when the boundary band is empty
  std::optional<double> ashp;   // absent when no pixel is positive
  bool degenerate_gt = false;
};

struct MetricReport {
  int count = 0;
  double mae = 0.0;
  double s_measure = 0.0;
  double max_f = 0.0;               // max F of the mean curve (headline value)
  double max_f_of_mean_curve = 0.0; // same value under its explicit name
  double mean_of_max_f = 0.0;       // per-image max F averaged
  std::optional<double> mae_b;      // mean over images with a nonempty band
  std::optional<double> ashp;       // mean over images with positive pixels
  std::optional<double> a_over_m;   // mean ashp / mean mae
  PrCurve mean_curve{};             // pointwise mean precision/recall
  std::vector<ImageEval> per_image;
  std::vector<std::string> degenerate_images;  // stems with any degenerate metric
  std::vector<std::string> errors;             // per-file problems (dir mode)
};

// Evaluates prediction/gt pairs. Shapes must match per pair; the pair order
// fixes every reduction order, so results are deterministic for any thread
// count.
MetricReport evaluate_pairs(const std::vector<EvalPair>& pairs, const EvalConfig& cfg = {});

// Directory mode: pairs PNG files by stem. Missing partners, undecodable
// files and shape mismatches become `errors` entries and are skipped.
MetricReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir,
                           const EvalConfig& cfg = {});

// Serialization used by the command-line tool and the golden tests.
std::string report_to_json(const MetricReport& report);
std::string curve_to_csv(const PrCurve& curve);
std::string per_image_to_csv(const MetricReport& report);

}  // namespace sodkit
