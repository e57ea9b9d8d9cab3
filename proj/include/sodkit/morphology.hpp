#pragma once

#include "sodkit/grid.hpp"

namespace sodkit {

// Iterated 3x3 structuring element. Applying `iterations` passes of the full
// 3x3 element equals one pass with a Chebyshev ball of that radius, which is
// what the implementation computes.
struct StructuringSpec {
  int kernel_size = 3;
  int iterations = 5;

  void validate() const;
};

// Out-of-bounds neighbors count as 0 (the neutral element for max).
BinaryMask dilate(const BinaryMask& mask, const StructuringSpec& spec = {});

// Out-of-bounds neighbors count as 1 (the neutral element for min).
BinaryMask erode(const BinaryMask& mask, const StructuringSpec& spec = {});

struct ExpandedGt {
  BinaryMask boundary_envelope;  // dilate(gt) minus erode(gt)
  BinaryMask expanded_gt;        // boundary_envelope union gt
};

ExpandedGt expand_gt(const BinaryMask& gt, const StructuringSpec& spec = {});

// Pixels within Chebyshev distance `radius` of the boundary:
// dilate(gt, radius) minus erode(gt, radius).
BinaryMask boundary_band(const BinaryMask& gt, int radius = 10);

namespace reference {

// Per-pixel Chebyshev-ball scans. Quadratic in the radius and kept as the
// independent oracle for the fast separable implementation.
BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask erode(const BinaryMask& mask, int radius);

}  // namespace reference

}  // namespace sodkit
