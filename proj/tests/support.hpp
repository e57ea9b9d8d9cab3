#pragma once

// Shared helpers for the test binaries: random inputs, an independent
// brute-force weight map, finite-difference gradient checking and scratch
// directories.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sodkit/grid.hpp"
#include "sodkit/hda_loss.hpp"
#include "sodkit/morphology.hpp"
#include "sodkit/rng.hpp"

namespace testsup {

inline sodkit::BinaryMask random_mask(sodkit::Rng& rng, int h, int w, double density = 0.5) {
  sodkit::BinaryMask m(h, w);
  for (auto& v : m.values) v = rng.uniform01() < density ? 1 : 0;
  return m;
}

// A mask with a filled random rectangle, more boundary-like than iid noise.
inline sodkit::BinaryMask random_rect_mask(sodkit::Rng& rng, int h, int w) {
  sodkit::BinaryMask m(h, w);
  const int r0 = static_cast<int>(rng.below(static_cast<uint64_t>(h)));
  const int r1 = static_cast<int>(rng.below(static_cast<uint64_t>(h)));
  const int c0 = static_cast<int>(rng.below(static_cast<uint64_t>(w)));
  const int c1 = static_cast<int>(rng.below(static_cast<uint64_t>(w)));
  for (int r = std::min(r0, r1); r <= std::max(r0, r1); ++r) {
    for (int c = std::min(c0, c1); c <= std::max(c0, c1); ++c) m.at(r, c) = 1;
  }
  return m;
}

inline sodkit::GrayMap random_gray(sodkit::Rng& rng, int h, int w) {
  sodkit::GrayMap m(h, w);
  for (auto& v : m.values) v = rng.uniform01();
  return m;
}

// Values on the k/255 grid, matching what an 8-bit PNG can carry.
inline sodkit::GrayMap random_quantized(sodkit::Rng& rng, int h, int w) {
  sodkit::GrayMap m(h, w);
  for (auto& v : m.values) v = static_cast<double>(rng.below(256)) / 255.0;
  return m;
}

// Values kept away from 0/1 so finite-difference steps stay inside [0, 1]
// and clear of the log clamp.
inline sodkit::GrayMap random_gray_interior(sodkit::Rng& rng, int h, int w) {
  sodkit::GrayMap m(h, w);
  for (auto& v : m.values) v = 0.01 + 0.98 * rng.uniform01();
  return m;
}

// Brute-force difference-aware weight map: per-pixel double loop over the
// clipped window, on top of the brute-force morphology. Independent of the
// summed-area-table implementation under test.
inline sodkit::Grid naive_weight_map(const sodkit::BinaryMask& gt, const sodkit::HdaConfig& cfg) {
  const sodkit::BinaryMask d = sodkit::reference::dilate(gt, cfg.morph_iterations);
  const sodkit::BinaryMask e = sodkit::reference::erode(gt, cfg.morph_iterations);
  const int h = gt.height, w = gt.width;
  const int lo = (cfg.neighborhood_side - 1) / 2;
  const int hi = cfg.neighborhood_side / 2;

  sodkit::Grid out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (const sodkit::BinaryMask* m : {&d, &e}) {
        double sum = 0.0;
        int count = 0;
        for (int rr = std::max(0, r - lo); rr <= std::min(h - 1, r + hi); ++rr) {
          for (int cc = std::max(0, c - lo); cc <= std::min(w - 1, c + hi); ++cc) {
            sum += m->at(rr, cc);
            ++count;
          }
        }
        const double center = m->at(r, c);
        acc += cfg.normalize_neighborhood ? std::abs(sum / count - center)
                                          : std::abs(sum - center);
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

// Central finite differences against an analytic gradient. Returns the
// largest relative error over all pixels, with a small floor so near-zero
// derivative pairs compare absolutely.
inline double fd_max_rel_error(const std::function<double(const sodkit::GrayMap&)>& value_of,
                               const sodkit::GrayMap& pred, const sodkit::Grid& analytic,
                               double step = 1e-4) {
  sodkit::GrayMap probe = pred;
  double worst = 0.0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    const double keep = probe.values[i];
    probe.values[i] = keep + step;
    const double up = value_of(probe);
    probe.values[i] = keep - step;
    const double dn = value_of(probe);
    probe.values[i] = keep;
    const double fd = (up - dn) / (2.0 * step);
    const double a = analytic.values[i];
    const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
    worst = std::max(worst, err);
  }
  return worst;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 10000; ++i) {
      auto candidate = base / (tag + "_" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create scratch directory for " + tag);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf = "") const {
    return leaf.empty() ? path_.string() : (path_ / leaf).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testsup
