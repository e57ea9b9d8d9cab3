#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sodkit {

// Thrown when a caller violates an interface precondition (bad shapes,
// out-of-range parameters). Indicates a programming error, not bad data.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when external input (files, byte streams) is malformed or
// inconsistent. Callers are expected to handle this at the boundary.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major H x W grid of doubles with no range restriction.
// Used for weight maps, gradients and other free-valued planes.
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(int h, int w, double fill = 0.0);

  double& at(int r, int c) { return values[static_cast<size_t>(r) * width + c]; }
  double at(int r, int c) const { return values[static_cast<size_t>(r) * width + c]; }
  size_t size() const { return values.size(); }

  bool operator==(const Grid&) const = default;
};

// H x W grayscale plane with every value in [0, 1]. The range is checked
// whenever the map is built from raw values.
struct GrayMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  GrayMap() = default;
  GrayMap(int h, int w, double fill = 0.0);
  GrayMap(int h, int w, std::vector<double> vals);

  double& at(int r, int c) { return values[static_cast<size_t>(r) * width + c]; }
  double at(int r, int c) const { return values[static_cast<size_t>(r) * width + c]; }
  size_t size() const { return values.size(); }

  // Re-checks the [0, 1] invariant after in-place edits.
  void check() const;

  bool operator==(const GrayMap&) const = default;
};

// H x W binary mask; values are exactly 0 or 1.
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> values;

  BinaryMask() = default;
  BinaryMask(int h, int w, uint8_t fill = 0);
  BinaryMask(int h, int w, std::vector<uint8_t> vals);

  uint8_t& at(int r, int c) { return values[static_cast<size_t>(r) * width + c]; }
  uint8_t at(int r, int c) const { return values[static_cast<size_t>(r) * width + c]; }
  size_t size() const { return values.size(); }

  void check() const;

  bool operator==(const BinaryMask&) const = default;
};

// C x H x W feature block; all entries must stay finite.
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  Tensor3() = default;
  Tensor3(int c, int h, int w, double fill = 0.0);

  double& at(int c, int y, int x) {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double* plane(int c) { return values.data() + static_cast<size_t>(c) * height * width; }
  const double* plane(int c) const {
    return values.data() + static_cast<size_t>(c) * height * width;
  }
  size_t size() const { return values.size(); }

  // Throws DataError if any entry is NaN or infinite.
  void check_finite(const std::string& label) const;

  bool operator==(const Tensor3&) const = default;
};

// Per-pixel thresholding: out = (value >= threshold).
BinaryMask binarize(const GrayMap& map, double threshold);

BinaryMask complement(const BinaryMask& mask);

// Number of set pixels.
int64_t count_ones(const BinaryMask& mask);

// Grayscale view of a mask (0 -> 0.0, 1 -> 1.0).
GrayMap to_gray(const BinaryMask& mask);

// Replicates a grayscale plane into `channels` identical tensor planes.
Tensor3 replicate_channels(const GrayMap& map, int channels);

// Mean over channels; requires every resulting value to stay in [0, 1].
GrayMap channel_mean(const Tensor3& t);

void require_same_shape(const GrayMap& a, const BinaryMask& b, const std::string& what);
void require_same_shape(const GrayMap& a, const GrayMap& b, const std::string& what);
void require_same_shape(const Grid& a, const BinaryMask& b, const std::string& what);
void require_same_shape(const BinaryMask& a, const BinaryMask& b, const std::string& what);

}  // namespace sodkit
