#include "sodkit/grid.hpp"

#include <cmath>

namespace sodkit {

namespace {

void require_dims(int h, int w, const char* type_name) {
  if (h <= 0 || w <= 0) {
    throw ContractError(std::string(type_name) + ": dimensions must be positive, got " +
                        std::to_string(h) + "x" + std::to_string(w));
  }
}

}  // namespace

Grid::Grid(int h, int w, double fill) : height(h), width(w) {
  require_dims(h, w, "Grid");
  values.assign(static_cast<size_t>(h) * w, fill);
}

GrayMap::GrayMap(int h, int w, double fill) : height(h), width(w) {
  require_dims(h, w, "GrayMap");
  if (!(fill >= 0.0 && fill <= 1.0)) {
    throw ContractError("GrayMap: fill value " + std::to_string(fill) + " outside [0, 1]");
  }
  values.assign(static_cast<size_t>(h) * w, fill);
}

GrayMap::GrayMap(int h, int w, std::vector<double> vals) : height(h), width(w) {
  require_dims(h, w, "GrayMap");
  if (vals.size() != static_cast<size_t>(h) * w) {
    throw ContractError("GrayMap: value count does not match dimensions");
  }
  values = std::move(vals);
  check();
}

void GrayMap::check() const {
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ContractError("GrayMap: value " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

BinaryMask::BinaryMask(int h, int w, uint8_t fill) : height(h), width(w) {
  require_dims(h, w, "BinaryMask");
  if (fill > 1) throw ContractError("BinaryMask: fill must be 0 or 1");
  values.assign(static_cast<size_t>(h) * w, fill);
}

BinaryMask::BinaryMask(int h, int w, std::vector<uint8_t> vals) : height(h), width(w) {
  require_dims(h, w, "BinaryMask");
  if (vals.size() != static_cast<size_t>(h) * w) {
    throw ContractError("BinaryMask: value count does not match dimensions");
  }
  values = std::move(vals);
  check();
}

void BinaryMask::check() const {
  for (uint8_t v : values) {
    if (v > 1) throw ContractError("BinaryMask: values must be 0 or 1");
  }
}

Tensor3::Tensor3(int c, int h, int w, double fill) : channels(c), height(h), width(w) {
  if (c <= 0) throw ContractError("Tensor3: channel count must be positive");
  require_dims(h, w, "Tensor3");
  values.assign(static_cast<size_t>(c) * h * w, fill);
}

void Tensor3::check_finite(const std::string& label) const {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw DataError("Tensor3 '" + label + "' contains a non-finite value");
    }
  }
}

BinaryMask binarize(const GrayMap& map, double threshold) {
  BinaryMask out(map.height, map.width);
  for (size_t i = 0; i < map.values.size(); ++i) {
    out.values[i] = map.values[i] >= threshold ? 1 : 0;
  }
  return out;
}

BinaryMask complement(const BinaryMask& mask) {
  BinaryMask out(mask.height, mask.width);
  for (size_t i = 0; i < mask.values.size(); ++i) {
    out.values[i] = mask.values[i] ? 0 : 1;
  }
  return out;
}

int64_t count_ones(const BinaryMask& mask) {
  int64_t n = 0;
  for (uint8_t v : mask.values) n += v;
  return n;
}

GrayMap to_gray(const BinaryMask& mask) {
  GrayMap out(mask.height, mask.width);
  for (size_t i = 0; i < mask.values.size(); ++i) {
    out.values[i] = mask.values[i] ? 1.0 : 0.0;
  }
  return out;
}

Tensor3 replicate_channels(const GrayMap& map, int channels) {
  Tensor3 out(channels, map.height, map.width);
  const size_t plane = map.values.size();
  for (int c = 0; c < channels; ++c) {
    std::copy(map.values.begin(), map.values.end(), out.values.begin() + c * plane);
  }
  return out;
}

GrayMap channel_mean(const Tensor3& t) {
  GrayMap out(t.height, t.width);
  const size_t plane = static_cast<size_t>(t.height) * t.width;
  for (size_t i = 0; i < plane; ++i) {
    double s = 0.0;
    for (int c = 0; c < t.channels; ++c) s += t.values[c * plane + i];
    double v = s / t.channels;
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ContractError("channel_mean: averaged value outside [0, 1]");
    }
    out.values[i] = v;
  }
  return out;
}

namespace {

void require_dims_equal(int ah, int aw, int bh, int bw, const std::string& what) {
  if (ah != bh || aw != bw) {
    throw ContractError(what + ": shape mismatch, " + std::to_string(ah) + "x" +
                        std::to_string(aw) + " vs " + std::to_string(bh) + "x" +
                        std::to_string(bw));
  }
}

}  // namespace

void require_same_shape(const GrayMap& a, const BinaryMask& b, const std::string& what) {
  require_dims_equal(a.height, a.width, b.height, b.width, what);
}

void require_same_shape(const GrayMap& a, const GrayMap& b, const std::string& what) {
  require_dims_equal(a.height, a.width, b.height, b.width, what);
}

void require_same_shape(const Grid& a, const BinaryMask& b, const std::string& what) {
  require_dims_equal(a.height, a.width, b.height, b.width, what);
}

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const std::string& what) {
  require_dims_equal(a.height, a.width, b.height, b.width, what);
}

}  // namespace sodkit
