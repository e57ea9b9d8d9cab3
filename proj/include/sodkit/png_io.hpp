#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sodkit/grid.hpp"

namespace sodkit {

// Decodes an in-memory PNG into a GrayMap. 8-bit grayscale maps each pixel
// p to p / 255 exactly. RGB and RGBA inputs are converted with BT.601 luma
// weights (0.299, 0.587, 0.114); alpha is ignored. 16-bit and paletted
// images raise DataError, as do truncated or corrupt streams.
GrayMap decode_png(const uint8_t* data, size_t size);
GrayMap decode_png(const std::vector<uint8_t>& bytes);

// Encodes as 8-bit grayscale PNG; values map to round(v * 255) with halves
// rounded away from zero. Output bytes are deterministic for a given input.
std::vector<uint8_t> encode_png(const GrayMap& map);

GrayMap load_gray(const std::string& path);
void save_gray(const std::string& path, const GrayMap& map);

// Loads a PNG and binarizes it at `threshold` (value >= threshold -> 1).
BinaryMask load_mask(const std::string& path, double threshold = 0.5);
void save_mask(const std::string& path, const BinaryMask& mask);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);

}  // namespace sodkit
