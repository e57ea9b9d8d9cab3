#include "sodkit/morphology.hpp"

#include <algorithm>
#include <string>

namespace sodkit {

void StructuringSpec::validate() const {
  if (kernel_size != 3) {
    throw ContractError("StructuringSpec: kernel_size must be 3, got " +
                        std::to_string(kernel_size));
  }
  if (iterations < 0) {
    throw ContractError("StructuringSpec: iterations must be >= 0, got " +
                        std::to_string(iterations));
  }
}

namespace {

// One-dimensional pass over rows then columns. The window [i-r, i+r] is
// clipped at the borders; with prefix counts, "any set pixel in window"
// gives dilation and "all set pixels in window" gives erosion, matching
// zero padding for max and one padding for min.
BinaryMask axis_filter(const BinaryMask& in, int radius, bool want_all) {
  const int h = in.height, w = in.width;
  BinaryMask mid(h, w);
  std::vector<int> prefix(std::max(h, w) + 1);

  for (int y = 0; y < h; ++y) {
    prefix[0] = 0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + in.at(y, x);
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - radius);
      const int hi = std::min(w - 1, x + radius);
      const int count = prefix[hi + 1] - prefix[lo];
      mid.at(y, x) = want_all ? (count == hi - lo + 1) : (count > 0);
    }
  }

  BinaryMask out(h, w);
  for (int x = 0; x < w; ++x) {
    prefix[0] = 0;
    for (int y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + mid.at(y, x);
    for (int y = 0; y < h; ++y) {
      const int lo = std::max(0, y - radius);
      const int hi = std::min(h - 1, y + radius);
      const int count = prefix[hi + 1] - prefix[lo];
      out.at(y, x) = want_all ? (count == hi - lo + 1) : (count > 0);
    }
  }
  return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, const StructuringSpec& spec) {
  spec.validate();
  if (spec.iterations == 0) return mask;
  return axis_filter(mask, spec.iterations, /*want_all=*/false);
}

BinaryMask erode(const BinaryMask& mask, const StructuringSpec& spec) {
  spec.validate();
  if (spec.iterations == 0) return mask;
  return axis_filter(mask, spec.iterations, /*want_all=*/true);
}

ExpandedGt expand_gt(const BinaryMask& gt, const StructuringSpec& spec) {
  spec.validate();
  const BinaryMask d = dilate(gt, spec);
  const BinaryMask e = erode(gt, spec);

  ExpandedGt out{BinaryMask(gt.height, gt.width), BinaryMask(gt.height, gt.width)};
  for (size_t i = 0; i < gt.values.size(); ++i) {
    const uint8_t env = d.values[i] & static_cast<uint8_t>(1 - e.values[i]);
    out.boundary_envelope.values[i] = env;
    out.expanded_gt.values[i] = env | gt.values[i];
  }
  return out;
}

BinaryMask boundary_band(const BinaryMask& gt, int radius) {
  if (radius < 1) {
    throw ContractError("boundary_band: radius must be >= 1, got " + std::to_string(radius));
  }
  const BinaryMask d = axis_filter(gt, radius, /*want_all=*/false);
  const BinaryMask e = axis_filter(gt, radius, /*want_all=*/true);
  BinaryMask band(gt.height, gt.width);
  for (size_t i = 0; i < gt.values.size(); ++i) {
    band.values[i] = d.values[i] & static_cast<uint8_t>(1 - e.values[i]);
  }
  return band;
}

namespace reference {

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius < 0) throw ContractError("reference::dilate: radius must be >= 0");
  const int h = mask.height, w = mask.width;
  BinaryMask out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      uint8_t v = 0;
      for (int dy = -radius; dy <= radius && !v; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;  // outside counts as 0
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          if (mask.at(yy, xx)) {
            v = 1;
            break;
          }
        }
      }
      out.at(y, x) = v;
    }
  }
  return out;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
  if (radius < 0) throw ContractError("reference::erode: radius must be >= 0");
  const int h = mask.height, w = mask.width;
  BinaryMask out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      uint8_t v = 1;
      for (int dy = -radius; dy <= radius && v; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;  // outside counts as 1
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          if (!mask.at(yy, xx)) {
            v = 0;
            break;
          }
        }
      }
      out.at(y, x) = v;
    }
  }
  return out;
}

}  // namespace reference

}  // namespace sodkit
